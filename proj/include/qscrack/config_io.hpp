#pragma once

// Run configuration (flat "key = value" text) and all file outputs.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>
#include <fmt/format.h>

#include "errors.hpp"
#include "evolution.hpp"
#include "fem.hpp"
#include "metrics.hpp"

namespace qscrack {

struct RunManifest
{
  EvolutionConfig config;
  std::string output_dir = "output";
  std::vector<double> snapshot_times;
  bool reflect_export = false;

  double beta() const noexcept { return config.material.beta; }
};

/// Accepted configuration keys with a one-line description each.
inline const std::vector<std::pair<std::string, std::string>>& config_keys()
{
  static const std::vector<std::pair<std::string, std::string>> keys = {
    {"a", "domain width (default 2)"},
    {"b", "half-height of the domain (default 0.5)"},
    {"nx", "elements along x (default 200)"},
    {"ny", "elements along y (default 50)"},
    {"s0", "initial crack tip, must be a mesh vertex (default 0.1)"},
    {"T", "final time (default 2.5)"},
    {"n_steps", "number of time steps (default 250)"},
    {"alpha", "shear stiffness (default 100)"},
    {"beta", "yield traction; a comma list defines a sweep, the first entry is used by run (default 20)"},
    {"gamma", "toughness (default 0.5)"},
    {"c1", "boundary profile amplitude (default 0.1)"},
    {"c2", "boundary profile slope (default 0.2)"},
    {"u0_mode", "zero | harmonic (default zero)"},
    {"cg_rel_tol", "conjugate gradient relative residual (default 1e-10)"},
    {"nonneg_tol", "nonnegativity slack relative to max w (default 1e-8)"},
    {"snapshot_times", "comma list of times for trace and field output (default none)"},
    {"output_dir", "output directory (default output)"},
    {"reflect_export", "true | false: export the odd reflection on the full domain (default false)"},
    {"sigma_scan", "incremental | exhaustive (default incremental)"},
    {"candidate_solver", "reduced | direct (default reduced)"},
    {"full_field_check", "true | false: require u >= 0 on every node, not just the path (default false)"},
  };
  return keys;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, std::string_view v)
{
  v = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, fmt::format("expected a number, got '{}'", v));
  return out;
}

inline std::size_t parse_size(const std::string& key, std::string_view v)
{
  v = trim(v);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key, fmt::format("expected a nonnegative integer, got '{}'", v));
  return out;
}

inline std::vector<double> parse_list(const std::string& key, std::string_view v)
{
  std::vector<double> out;
  v = trim(v);
  if (v.empty())
    return out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, v.substr(0, comma)));
    if (comma == std::string_view::npos)
      break;
    v = v.substr(comma + 1);
  }
  return out;
}

inline bool parse_bool(const std::string& key, std::string_view v)
{
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw ConfigError(key, fmt::format("expected true or false, got '{}'", v));
}

inline std::string join(std::span<const double> v)
{
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out += fmt::format("{}{:.17g}", k ? "," : "", v[k]);
  return out;
}

} // namespace detail

inline void validate_manifest(const RunManifest& m)
{
  validate_config(m.config);
  for (double t : m.snapshot_times)
    if (!(t >= 0.0) || t > m.config.T)
      throw ConfigError("snapshot_times", fmt::format("time {} outside [0, T]", t));
  if (m.output_dir.empty())
    throw ConfigError("output_dir", "must not be empty");
}

/// Parses and validates a configuration. Unknown or repeated keys are errors.
inline RunManifest parse_config(std::string_view text)
{
  RunManifest m;
  EvolutionConfig& c = m.config;
  std::vector<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("", fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto& keys = config_keys();
    if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == key; }))
      throw ConfigError(key, fmt::format("line {}: unknown key", line_no));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ConfigError(key, fmt::format("line {}: repeated key", line_no));
    seen.push_back(key);

    try {
      if (key == "a") c.grid.a = detail::parse_double(key, value);
      else if (key == "b") c.grid.b = detail::parse_double(key, value);
      else if (key == "nx") c.grid.nx = detail::parse_size(key, value);
      else if (key == "ny") c.grid.ny = detail::parse_size(key, value);
      else if (key == "s0") c.grid.s0 = detail::parse_double(key, value);
      else if (key == "T") c.T = detail::parse_double(key, value);
      else if (key == "n_steps") c.n_steps = detail::parse_size(key, value);
      else if (key == "alpha") c.material.alpha = detail::parse_double(key, value);
      else if (key == "beta") {
        auto list = detail::parse_list(key, value);
        if (list.empty())
          throw ConfigError(key, "expected at least one value");
        c.material.beta = list.front();
        c.beta_sweep = list.size() > 1 ? list : std::vector<double>{};
      }
      else if (key == "gamma") c.material.gamma = detail::parse_double(key, value);
      else if (key == "c1") c.c1 = detail::parse_double(key, value);
      else if (key == "c2") c.c2 = detail::parse_double(key, value);
      else if (key == "u0_mode") {
        if (value == "zero") c.u0_mode = U0Mode::Zero;
        else if (value == "harmonic") c.u0_mode = U0Mode::Harmonic;
        else throw ConfigError(key, fmt::format("expected zero or harmonic, got '{}'", value));
      }
      else if (key == "cg_rel_tol") c.tol.cg_rel_tol = detail::parse_double(key, value);
      else if (key == "nonneg_tol") c.tol.nonneg_tol = detail::parse_double(key, value);
      else if (key == "snapshot_times") m.snapshot_times = detail::parse_list(key, value);
      else if (key == "output_dir") m.output_dir = std::string(value);
      else if (key == "reflect_export") m.reflect_export = detail::parse_bool(key, value);
      else if (key == "sigma_scan") {
        if (value == "incremental") c.sigma_scan = SigmaScan::Incremental;
        else if (value == "exhaustive") c.sigma_scan = SigmaScan::Exhaustive;
        else throw ConfigError(key, fmt::format("expected incremental or exhaustive, got '{}'", value));
      }
      else if (key == "candidate_solver") {
        if (value == "reduced") c.solver = CandidateSolver::Reduced;
        else if (value == "direct") c.solver = CandidateSolver::Direct;
        else throw ConfigError(key, fmt::format("expected reduced or direct, got '{}'", value));
      }
      else if (key == "full_field_check") c.tol.full_field_check = detail::parse_bool(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(key, fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  try {
    validate_manifest(m);
  } catch (const MeshConformityError& e) {
    throw ConfigError("s0", e.what());
  }
  return m;
}

inline RunManifest read_config_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("", fmt::format("cannot read config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Writes a manifest back as config text; parse_config inverts it.
inline std::string serialize_config(const RunManifest& m)
{
  const auto& c = m.config;
  std::vector<double> betas = c.beta_sweep.empty() ? std::vector<double>{c.material.beta} : c.beta_sweep;
  std::string out;
  auto line = [&](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  line("a", num(c.grid.a));
  line("b", num(c.grid.b));
  line("nx", std::to_string(c.grid.nx));
  line("ny", std::to_string(c.grid.ny));
  line("s0", num(c.grid.s0));
  line("T", num(c.T));
  line("n_steps", std::to_string(c.n_steps));
  line("alpha", num(c.material.alpha));
  line("beta", detail::join(betas));
  line("gamma", num(c.material.gamma));
  line("c1", num(c.c1));
  line("c2", num(c.c2));
  line("u0_mode", c.u0_mode == U0Mode::Zero ? "zero" : "harmonic");
  line("cg_rel_tol", num(c.tol.cg_rel_tol));
  line("nonneg_tol", num(c.tol.nonneg_tol));
  line("snapshot_times", detail::join(m.snapshot_times));
  line("output_dir", m.output_dir);
  line("reflect_export", m.reflect_export ? "true" : "false");
  line("sigma_scan", c.sigma_scan == SigmaScan::Incremental ? "incremental" : "exhaustive");
  line("candidate_solver", c.solver == CandidateSolver::Reduced ? "reduced" : "direct");
  line("full_field_check", c.tol.full_field_check ? "true" : "false");
  return out;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(fmt::format("cannot open {} for writing", path.string()));
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path)
{
  out.close();
  if (!out)
    throw Error(fmt::format("write to {} failed", path.string()));
}

} // namespace detail

/// Time label used in per-snapshot file names, e.g. trace_t0.4.csv.
inline std::string time_label(double t) { return fmt::format("{:g}", t); }

inline void write_fronts(const std::filesystem::path& path, std::span<const StepRecord> records)
{
  auto out = detail::open_output(path);
  out << "t,s,sigma,E_elastic,dE_plastic,dE_crack,E_total_incr\n";
  for (const auto& r : records)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, r.s, r.sigma, r.elastic,
                       r.plastic, r.crack, r.total);
  detail::close_output(out, path);
}

/// Cumulative energy ledger; scale = 2 gives the full-domain values.
inline void write_energy(const std::filesystem::path& path, std::span<const StepRecord> records, double scale = 1.0)
{
  auto out = detail::open_output(path);
  out << "t,E_elastic,E_plastic_cum,E_crack_cum\n";
  for (const auto& r : records)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, scale * r.elastic, scale * r.plastic_cum,
                       scale * r.crack_cum);
  detail::close_output(out, path);
}

inline void write_trace(const std::filesystem::path& path, const Snapshot& snap)
{
  const Grid& grid = snap.field.grid();
  const auto bottom = bottom_trace(snap.field);
  auto out = detail::open_output(path);
  out << "x,u_bottom,u_top,in_cohesive_zone\n";
  for (std::size_t j = 0; j <= grid.nx(); ++j) {
    const int flag = (j > snap.s_idx && j < snap.sigma_idx) ? 1 : 0;
    out << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", grid.x(j), bottom[j], snap.w_top[j], flag);
  }
  detail::close_output(out, path);
}

/// Legacy ASCII VTK STRUCTURED_POINTS export. With reflect, the field is
/// extended to (0,a)x(-b,b) by u(x,-y) = -u(x,y); the y = 0 row keeps the
/// value from above and the limit from below is stored in u_lower_limit.
inline void export_field(const std::filesystem::path& path, const ScalarField& field, bool reflect,
                         const std::string& title = "antiplane displacement")
{
  const Grid& g = field.grid();
  const std::size_t rows = reflect ? 2 * g.ny() + 1 : g.ny() + 1;
  const std::size_t cols = g.nx() + 1;
  auto value = [&](std::size_t row, std::size_t j) {
    if (!reflect)
      return field.at(j, row);
    return row >= g.ny() ? field.at(j, row - g.ny()) : -field.at(j, g.ny() - row);
  };
  const std::size_t zero_row = reflect ? g.ny() : 0;

  auto out = detail::open_output(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << fmt::format("DIMENSIONS {} {} 1\n", cols, rows);
  out << fmt::format("ORIGIN 0 {:.17g} 0\n", reflect ? -g.b() : 0.0);
  out << fmt::format("SPACING {:.17g} {:.17g} 1\n", g.hx(), g.hy());
  out << fmt::format("POINT_DATA {}\n", rows * cols);
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (std::size_t row = 0; row < rows; ++row)
    for (std::size_t j = 0; j < cols; ++j)
      out << fmt::format("{:.17g}\n", value(row, j));
  out << "SCALARS u_lower_limit double 1\nLOOKUP_TABLE default\n";
  for (std::size_t row = 0; row < rows; ++row)
    for (std::size_t j = 0; j < cols; ++j)
      out << fmt::format("{:.17g}\n", row == zero_row ? -field.at(j, 0) : value(row, j));
  detail::close_output(out, path);
}

/// gnuplot scripts for the crack-front history and the snapshot traces.
inline void write_plot_scripts(const std::filesystem::path& dir, std::span<const Snapshot> snapshots, double a)
{
  {
    const auto path = dir / "plot_fronts.gp";
    auto out = detail::open_output(path);
    out << "set datafile separator ','\nset key autotitle columnhead\n"
           "set terminal pngcairo size 900,500\nset output 'fronts.png'\n"
           "set xlabel 't'\nset ylabel 'x'\n"
        << fmt::format("set yrange [0:{:.17g}]\n", a)
        << "plot 'fronts.csv' using 1:2 with steps lw 2 title 's (crack tip)', \\\n"
           "     'fronts.csv' using 1:3 with steps dt 2 title 'sigma (cohesive end)'\n";
    detail::close_output(out, path);
  }
  for (const auto& s : snapshots) {
    const std::string label = time_label(s.t);
    const auto path = dir / fmt::format("plot_trace_t{}.gp", label);
    auto out = detail::open_output(path);
    out << "set datafile separator ','\nset terminal pngcairo size 900,500\n"
        << fmt::format("set output 'trace_t{}.png'\n", label)
        << "set xlabel 'x'\n"
        << fmt::format("plot 'trace_t{0}.csv' using 1:2 with lines lw 2 title 'u(x,0)', \\\n"
                       "     'trace_t{0}.csv' using 1:3 with lines title 'u(x,b) = w(x)', \\\n"
                       "     'trace_t{0}.csv' using 1:($4 > 0 ? 0 : 1/0) with points pt 7 ps 0.4 title 'cohesive zone'\n",
                       label);
    detail::close_output(out, path);
  }
}

/// Writes every enabled output of a run into m.output_dir.
inline void write_run_outputs(const RunManifest& m, const RunResult& result)
{
  const std::filesystem::path dir = m.output_dir;
  std::filesystem::create_directories(dir);
  write_fronts(dir / "fronts.csv", result.records);
  write_energy(dir / "energy.csv", result.records);
  if (m.reflect_export)
    write_energy(dir / "energy_full_domain.csv", result.records, 2.0);
  for (const auto& s : result.snapshots) {
    const std::string label = time_label(s.t);
    write_trace(dir / fmt::format("trace_t{}.csv", label), s);
    export_field(dir / fmt::format("field_t{}.vtk", label), s.field, m.reflect_export,
                 fmt::format("antiplane displacement t={}", label));
  }
  write_plot_scripts(dir, result.snapshots, m.config.grid.a);
  {
    const auto path = dir / "config.resolved";
    auto out = detail::open_output(path);
    out << serialize_config(m);
    detail::close_output(out, path);
  }
}

struct SweepRow
{
  double beta = 0.0;
  std::size_t jump_count = 0;
  double mean_cohesive_length = 0.0;
  double final_s = 0.0;
  bool ok = false;
  std::string error;
};

inline void write_sweep_summary(const std::filesystem::path& path, std::span<const SweepRow> rows)
{
  auto out = detail::open_output(path);
  out << "beta,jump_count,mean_cohesive_length,final_s,status\n";
  for (const auto& r : rows)
    out << fmt::format("{:.17g},{},{:.17g},{:.17g},{}\n", r.beta, r.jump_count, r.mean_cohesive_length, r.final_s,
                       r.ok ? "ok" : "failed");
  detail::close_output(out, path);
}

} // namespace qscrack
