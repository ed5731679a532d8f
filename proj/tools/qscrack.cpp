// Command-line driver: run | sweep | convergence | validate.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include <qscrack/config_io.hpp>
#include <qscrack/convergence.hpp>
#include <qscrack/evolution.hpp>
#include <qscrack/metrics.hpp>
#include <qscrack/validation.hpp>

namespace fs = std::filesystem;
using namespace qscrack;

namespace {

std::string config_key_help()
{
  std::string out = "\nConfiguration file: flat 'key = value' lines, '#' starts a comment. Keys:\n";
  for (const auto& [key, text] : config_keys())
    out += fmt::format("  {:<18} {}\n", key, text);
  return out;
}

double hx_of(const EvolutionConfig& cfg) { return cfg.grid.a / double(cfg.grid.nx); }

void print_violations(const RunResult& res)
{
  for (const auto& r : res.records)
    for (const auto& v : r.violations)
      fmt::print(stderr, "invariant violated at step {} (t = {}): {}\n", r.step, r.t, v);
}

int cmd_run(RunManifest m)
{
  const auto& cfg = m.config;
  const auto res = run(cfg, m.snapshot_times);
  write_run_outputs(m, res);
  const double hx = hx_of(cfg);
  const auto& last = res.records.back();
  fmt::print("beta = {}: final s = {:.6g}, sigma = {:.6g}, jumps (>= 2hx) = {}, plastic dissipation = {:.6g}, "
             "crack energy = {:.6g}, total dissipation = {:.6g}\n",
             cfg.material.beta, last.s, last.sigma, jump_count(res.records, cfg.grid.s0, 2.0 * hx, hx),
             last.plastic_cum, last.crack_cum, last.plastic_cum + last.crack_cum);
  fmt::print("outputs written to {}\n", m.output_dir);
  print_violations(res);
  return res.violation_count() == 0 ? 0 : 3;
}

int cmd_sweep(RunManifest m, std::vector<double> betas, unsigned jobs)
{
  if (betas.empty())
    betas = m.config.beta_sweep.empty() ? std::vector<double>{m.config.material.beta} : m.config.beta_sweep;
  const fs::path root = m.output_dir;

  std::shared_ptr<const PathGreenOperator> op;
  if (m.config.solver == CandidateSolver::Reduced) {
    const FemContext ctx{Grid(m.config.grid)};
    op = std::make_shared<const PathGreenOperator>(ctx, Evolution::green_tolerance(m.config.tol));
  }

  auto member = [&](double beta) {
    SweepRow row;
    row.beta = beta;
    try {
      RunManifest mm = m;
      mm.config.material.beta = beta;
      mm.config.beta_sweep.clear();
      mm.output_dir = (root / fmt::format("beta_{:g}", beta)).string();
      const auto res = run(mm.config, mm.snapshot_times, op);
      write_run_outputs(mm, res);
      const double hx = hx_of(mm.config);
      row.jump_count = jump_count(res.records, mm.config.grid.s0, 2.0 * hx, hx);
      row.mean_cohesive_length = mean_cohesive_length(res.records);
      row.final_s = res.records.back().s;
      row.ok = res.violation_count() == 0;
      if (!row.ok)
        row.error = fmt::format("{} invariant violations", res.violation_count());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<SweepRow> rows(betas.size());
  jobs = std::max(1u, jobs);
  for (std::size_t start = 0; start < betas.size(); start += jobs) {
    std::vector<std::future<SweepRow>> pending;
    for (std::size_t k = start; k < std::min(betas.size(), start + jobs); ++k)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, member, betas[k]));
    for (std::size_t k = 0; k < pending.size(); ++k)
      rows[start + k] = pending[k].get();
  }

  write_sweep_summary(root / "sweep_summary.csv", rows);
  fmt::print("{:>10} {:>10} {:>16} {:>10}  status\n", "beta", "jumps", "mean(sigma-s)", "final s");
  bool ok = true;
  for (const auto& r : rows) {
    fmt::print("{:>10g} {:>10} {:>16.6g} {:>10.6g}  {}\n", r.beta, r.jump_count, r.mean_cohesive_length, r.final_s,
               r.ok ? "ok" : "FAILED: " + r.error);
    ok = ok && r.ok;
  }
  return ok ? 0 : 3;
}

int cmd_convergence(const RunManifest& m, std::size_t levels)
{
  const auto rep = convergence_study(m.config, levels);
  fmt::print("auxiliary problem: s = {:g}, sigma = {:g}, beta/alpha = {:g}\n", rep.s, rep.sigma, m.config.material.flux());
  fmt::print("{:>8} {:>16} {:>12} {:>18}\n", "nx", "H1 self-error", "order", "linear max error");
  bool ok = true;
  for (std::size_t l = 0; l < rep.nx.size(); ++l) {
    const std::string err = l < rep.h1_self_error.size() ? fmt::format("{:.6e}", rep.h1_self_error[l]) : "reference";
    const std::string ord = l < rep.observed_order.size() ? fmt::format("{:.4f}", rep.observed_order[l]) : "";
    fmt::print("{:>8} {:>16} {:>12} {:>18.3e}\n", rep.nx[l], err, ord, rep.manufactured_error[l]);
    ok = ok && rep.manufactured_error[l] <= 1e-9;
  }
  for (double r : rep.observed_order)
    ok = ok && r > 0.0;
  ok = ok && rep.errors_decrease();
  return ok ? 0 : 4;
}

int cmd_validate(const RunManifest& m)
{
  bool ok = true;
  for (const auto& c : validation_suite(m.config)) {
    fmt::print("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    ok = ok && c.passed;
  }
  return ok ? 0 : 5;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Quasi-static crack growth with a cohesive plastic zone on a straight path"};
  app.footer(config_key_help());
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string output;
  std::vector<double> betas;
  std::size_t levels = 5;
  unsigned jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output, "output directory (overrides output_dir)");
  };
  auto* run_cmd = app.add_subcommand("run", "run one evolution and write its outputs");
  add_common(run_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "run one evolution per beta value");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--beta", betas, "beta values (overrides the config)")->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "concurrent sweep members");
  auto* conv_cmd = app.add_subcommand("convergence", "mesh-convergence study of one auxiliary problem");
  add_common(conv_cmd);
  conv_cmd->add_option("--levels", levels, "number of nested meshes (>= 3)");
  auto* val_cmd = app.add_subcommand("validate", "run the self-check suite on small instances");
  add_common(val_cmd);
  for (auto* sub : {run_cmd, conv_cmd, val_cmd})
    sub->add_option("--jobs", jobs, "worker threads (unused, accepted for uniformity)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunManifest m = read_config_file(config_path);
    if (!output.empty())
      m.output_dir = output;
    if (*run_cmd)
      return cmd_run(std::move(m));
    if (*sweep_cmd)
      return cmd_sweep(std::move(m), betas, jobs);
    if (*conv_cmd)
      return cmd_convergence(m, levels);
    return cmd_validate(m);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
