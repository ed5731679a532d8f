#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <qscrack/config_io.hpp>

using namespace qscrack;
namespace fs = std::filesystem;

namespace {

const char* kReference = R"(# reference experiment
a = 2
b = 0.5
s0 = 0.1
T = 2.5
alpha = 100
gamma = 0.5
beta = 20
c1 = 0.1
c2 = 0.2
)";

std::string key_of_failure(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path)
{
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::vector<double> vtk_scalars(const fs::path& path, const std::string& name, std::size_t* dims = nullptr)
{
  std::ifstream in(path);
  std::string line;
  std::vector<double> out;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.rfind("DIMENSIONS", 0) == 0 && dims) {
      std::istringstream ss(line.substr(10));
      ss >> dims[0] >> dims[1];
    }
    if (line.rfind("POINT_DATA", 0) == 0)
      count = std::stoul(line.substr(10));
    if (line == "SCALARS " + name + " double 1") {
      std::getline(in, line);
      for (std::size_t k = 0; k < count && std::getline(in, line); ++k)
        out.push_back(std::stod(line));
    }
  }
  return out;
}

class TempDir : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir = fs::temp_directory_path() /
          fmt::format("qscrack_{}", ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

} // namespace

TEST(ParseConfig, ReferenceManifestAccepted)
{
  const auto m = parse_config(kReference);
  const auto& c = m.config;
  EXPECT_EQ(c.grid.a, 2.0);
  EXPECT_EQ(c.grid.b, 0.5);
  EXPECT_EQ(c.grid.s0, 0.1);
  EXPECT_EQ(c.T, 2.5);
  EXPECT_EQ(c.material.alpha, 100.0);
  EXPECT_EQ(c.material.gamma, 0.5);
  EXPECT_EQ(c.material.beta, 20.0);
  EXPECT_EQ(c.c1, 0.1);
  EXPECT_EQ(c.c2, 0.2);
  EXPECT_EQ(c.grid.nx, 200u);
  EXPECT_EQ(c.grid.ny, 50u);
  EXPECT_EQ(c.n_steps, 250u);
  EXPECT_EQ(c.u0_mode, U0Mode::Zero);
  EXPECT_EQ(c.sigma_scan, SigmaScan::Incremental);
}

TEST(ParseConfig, Rejections)
{
  EXPECT_EQ(key_of_failure(std::string(kReference) + "gamma = -1\n"), "gamma");  // repeated
  EXPECT_EQ(key_of_failure("gamma = -1\n"), "gamma");
  EXPECT_EQ(key_of_failure("s0 = 0.1003\nnx = 200\n"), "s0");
  EXPECT_EQ(key_of_failure("speed = 3\n"), "speed");
  EXPECT_EQ(key_of_failure("nx = ten\n"), "nx");
  EXPECT_EQ(key_of_failure("nx = 1\n"), "nx");
  EXPECT_EQ(key_of_failure("u0_mode = random\n"), "u0_mode");
  EXPECT_EQ(key_of_failure("sigma_scan = binary\n"), "sigma_scan");
  EXPECT_EQ(key_of_failure("snapshot_times = 0.4, 9\n"), "snapshot_times");
  EXPECT_EQ(key_of_failure("beta = 20, -40\n"), "beta");
  EXPECT_EQ(key_of_failure("alpha 100\n"), "");
  EXPECT_THROW(parse_config("alpha 100\n"), ConfigError);
}

TEST(ParseConfig, ErrorMentionsLine)
{
  try {
    parse_config("a = 2\n\n# note\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, AllKeysAndLists)
{
  const auto m = parse_config(R"(
a = 2
b = 0.5
nx = 40
ny = 10
s0 = 0.1   # trailing comment
T = 1.5
n_steps = 30
alpha = 100
beta = 20, 40, 80, 160
gamma = 0.5
c1 = 0.1
c2 = 0.2
u0_mode = harmonic
cg_rel_tol = 1e-11
nonneg_tol = 1e-9
snapshot_times = 0.4, 0.8, 1.2
output_dir = runs/out
reflect_export = true
sigma_scan = exhaustive
candidate_solver = direct
full_field_check = true
)");
  EXPECT_EQ(m.config.material.beta, 20.0);
  EXPECT_EQ(m.config.beta_sweep, (std::vector<double>{20, 40, 80, 160}));
  EXPECT_EQ(m.snapshot_times, (std::vector<double>{0.4, 0.8, 1.2}));
  EXPECT_EQ(m.output_dir, "runs/out");
  EXPECT_TRUE(m.reflect_export);
  EXPECT_EQ(m.config.u0_mode, U0Mode::Harmonic);
  EXPECT_EQ(m.config.sigma_scan, SigmaScan::Exhaustive);
  EXPECT_EQ(m.config.solver, CandidateSolver::Direct);
  EXPECT_TRUE(m.config.tol.full_field_check);
  EXPECT_EQ(m.config.tol.cg_rel_tol, 1e-11);
  EXPECT_EQ(m.config.tol.nonneg_tol, 1e-9);

  // round trip
  const auto text = serialize_config(m);
  const auto again = parse_config(text);
  EXPECT_EQ(serialize_config(again), text);
  EXPECT_EQ(again.config.grid, m.config.grid);
  EXPECT_EQ(again.config.beta_sweep, m.config.beta_sweep);
  EXPECT_EQ(again.config.T, m.config.T);
}

TEST(ParseConfig, RoundTripOfAwkwardValues)
{
  RunManifest m = parse_config(kReference);
  m.config.c2 = 0.1 + 0.2;
  m.config.tol.cg_rel_tol = 3.3333333333333335e-11;
  m.snapshot_times = {1.0 / 3.0};
  const auto again = parse_config(serialize_config(m));
  EXPECT_EQ(again.config.c2, m.config.c2);
  EXPECT_EQ(again.config.tol.cg_rel_tol, m.config.tol.cg_rel_tol);
  EXPECT_EQ(again.snapshot_times, m.snapshot_times);
}

TEST(ParseConfig, EveryAdvertisedKeyParses)
{
  const auto text = "\n" + serialize_config(parse_config(kReference));
  for (const auto& [key, help] : config_keys()) {
    EXPECT_NE(text.find("\n" + key + " = "), std::string::npos) << key;
    EXPECT_FALSE(help.empty());
  }
}

TEST_F(TempDir, FrontsAndEnergyFiles)
{
  RunManifest m = parse_config("nx = 40\nny = 10\nn_steps = 20\nT = 1\nsnapshot_times = 0.5\n");
  m.output_dir = dir.string();
  const auto res = run(m.config, m.snapshot_times);
  write_run_outputs(m, res);

  const auto fronts = read_csv(dir / "fronts.csv");
  ASSERT_EQ(fronts.size(), 21u);
  EXPECT_EQ(fronts[0], (std::vector<std::string>{"t", "s", "sigma", "E_elastic", "dE_plastic", "dE_crack",
                                                 "E_total_incr"}));
  EXPECT_NEAR(std::stod(fronts[1][0]), 1.0 / 20.0, 1e-15);
  double prev = 0.1;
  for (std::size_t i = 1; i < fronts.size(); ++i) {
    const double s = std::stod(fronts[i][1]);
    EXPECT_GE(s, prev);
    EXPECT_EQ(std::stod(fronts[i][6]), res.records[i - 1].total);  // 17 digits round-trip
    prev = s;
  }
  const auto energy = read_csv(dir / "energy.csv");
  ASSERT_EQ(energy.size(), 21u);
  EXPECT_EQ(energy[0], (std::vector<std::string>{"t", "E_elastic", "E_plastic_cum", "E_crack_cum"}));
  EXPECT_TRUE(fs::exists(dir / "trace_t0.5.csv"));
  EXPECT_TRUE(fs::exists(dir / "field_t0.5.vtk"));
  EXPECT_TRUE(fs::exists(dir / "plot_fronts.gp"));
  EXPECT_TRUE(fs::exists(dir / "config.resolved"));
  EXPECT_FALSE(fs::exists(dir / "energy_full_domain.csv"));

  std::ifstream raw(dir / "fronts.csv", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(raw)), {});
  EXPECT_EQ(bytes.find('\r'), std::string::npos);
}

TEST_F(TempDir, TraceFile)
{
  RunManifest m = parse_config("nx = 40\nny = 10\nn_steps = 40\nT = 2\nsnapshot_times = 1.2\nbeta = 5\n");
  const auto res = run(m.config, m.snapshot_times);
  ASSERT_EQ(res.snapshots.size(), 1u);
  const auto& snap = res.snapshots.front();
  ASSERT_GT(snap.sigma_idx, snap.s_idx + 1) << "want a visible cohesive zone";
  write_trace(dir / "trace.csv", snap);
  const auto rows = read_csv(dir / "trace.csv");
  ASSERT_EQ(rows.size(), 42u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "u_bottom", "u_top", "in_cohesive_zone"}));
  int blocks = 0;
  int prev_flag = 0;
  for (std::size_t j = 0; j <= 40; ++j) {
    const auto& r = rows[j + 1];
    const double x = std::stod(r[0]);
    const int flag = std::stoi(r[3]);
    EXPECT_NEAR(std::stod(r[2]), boundary_profile(x, snap.t, 0.1, 0.2, 0.1), 1e-15);
    if (x >= snap.field.grid().x(snap.sigma_idx) - 1e-12) {
      EXPECT_EQ(std::stod(r[1]), 0.0);
    }
    EXPECT_EQ(flag, (j > snap.s_idx && j < snap.sigma_idx) ? 1 : 0);
    if (flag == 1 && prev_flag == 0)
      ++blocks;
    prev_flag = flag;
  }
  EXPECT_EQ(blocks, 1);
}

TEST_F(TempDir, VtkExportWithReflection)
{
  const Grid g({2.0, 0.5, 8, 4, 0.25});
  ScalarField u(g);
  for (std::size_t k = 0; k <= 4; ++k)
    for (std::size_t j = 0; j <= 8; ++j)
      u[g.node(j, k)] = 0.1 * g.y(k) / 0.5 + (k == 0 ? 0.01 * double(j) : 0.0);

  std::size_t dims[2] = {0, 0};
  export_field(dir / "plain.vtk", u, false);
  const auto plain = vtk_scalars(dir / "plain.vtk", "u", dims);
  EXPECT_EQ(dims[0], 9u);
  EXPECT_EQ(dims[1], 5u);
  ASSERT_EQ(plain.size(), 45u);

  export_field(dir / "full.vtk", u, true);
  const auto full = vtk_scalars(dir / "full.vtk", "u", dims);
  const auto lower = vtk_scalars(dir / "full.vtk", "u_lower_limit");
  EXPECT_EQ(dims[1], 9u);
  ASSERT_EQ(full.size(), 9u * 9u);
  ASSERT_EQ(lower.size(), 9u * 9u);
  for (std::size_t j = 0; j <= 8; ++j) {
    EXPECT_NEAR(full[j], -0.1, 1e-15);                    // y = -b
    EXPECT_NEAR(full[8 * 9 + j], 0.1, 1e-15);             // y = b
    EXPECT_EQ(full[4 * 9 + j], u.at(j, 0));               // y = 0 from above
    EXPECT_EQ(lower[4 * 9 + j], -u.at(j, 0));             // limit from below
    for (std::size_t row = 0; row <= 8; ++row)
      if (row != 4) {
        EXPECT_EQ(lower[row * 9 + j], full[row * 9 + j]);
      }
  }
  std::ifstream in(dir / "full.vtk");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("ORIGIN 0 -0.5 0"), std::string::npos);
  EXPECT_NE(text.find("DATASET STRUCTURED_POINTS"), std::string::npos);
}

TEST_F(TempDir, SweepSummary)
{
  std::vector<SweepRow> rows = {{20, 7, 0.07, 1.8, true, ""}, {40, 0, 0.0, 0.0, false, "solver failed"}};
  write_sweep_summary(dir / "sweep_summary.csv", rows);
  const auto csv = read_csv(dir / "sweep_summary.csv");
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], (std::vector<std::string>{"beta", "jump_count", "mean_cohesive_length", "final_s", "status"}));
  EXPECT_EQ(csv[1][0], "20");
  EXPECT_EQ(csv[1][1], "7");
}
