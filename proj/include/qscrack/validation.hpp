#pragma once

// Self-checks run by the `validate` subcommand on small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cohesive.hpp"
#include "evolution.hpp"
#include "fem.hpp"
#include "path_operator.hpp"
#include "testing/dense_oracle.hpp"

namespace qscrack {

struct CheckResult
{
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Random nonnegative, nonincreasing top data with max value `scale`.
inline std::vector<double> random_profile(std::mt19937_64& rng, std::size_t n, double scale)
{
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<double> w(n);
  for (auto& v : w)
    v = u(rng);
  std::sort(w.begin(), w.end(), std::greater<>());
  w.front() = scale;
  return w;
}

/// CG auxiliary solutions against the dense quadrature/elimination oracle.
inline CheckResult check_dense_oracle(std::size_t cases, std::uint64_t seed = 1, double tolerance = 1e-10)
{
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t nx = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const std::size_t ny = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t s0 = std::uniform_int_distribution<std::size_t>(1, nx - 1)(rng);
    GridSpec spec{1.0 + double(c % 3), 0.5, nx, ny, 0.0};
    spec.s0 = spec.a * double(s0) / double(nx);
    const FemContext ctx{Grid(spec)};
    const std::size_t s = std::uniform_int_distribution<std::size_t>(0, nx)(rng);
    const std::size_t sigma = std::uniform_int_distribution<std::size_t>(s, nx)(rng);
    const double flux = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const auto w = random_profile(rng, nx + 1, std::uniform_real_distribution<double>(0.01, 1.0)(rng));

    const auto aux = solve_aux(ctx, w, s, sigma, flux, 1.0, 1e-14);
    const testing::DenseMesh mesh{spec.a, spec.b, nx, ny};
    const auto ref = testing::dense_aux_solution(mesh, w, s, sigma, flux);
    for (std::size_t p = 0; p < ref.size(); ++p)
      worst = std::max(worst, std::abs(aux.field[p] - ref[p]));
  }
  return {"cg matches dense oracle", worst <= tolerance,
          fmt::format("{} cases, max nodal difference {:.2e} (limit {:.0e})", cases, worst, tolerance)};
}

/// Incremental and exhaustive sigma scans return the same endpoint.
inline CheckResult check_sigma_scans(std::size_t cases, std::uint64_t seed = 2, std::size_t nx = 20,
                                     std::size_t ny = 10)
{
  std::mt19937_64 rng(seed);
  std::size_t mismatches = 0;
  std::string first;
  const GridSpec spec{2.0, 2.0 * double(ny) / double(nx), nx, ny, 2.0 / double(nx)};
  const FemContext ctx{Grid(spec)};
  Tolerances tol;
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, nx)(rng);
    Material mat;
    mat.alpha = 100.0;
    mat.beta = std::uniform_real_distribution<double>(2.0, 200.0)(rng);
    const auto w = random_profile(rng, nx + 1, std::uniform_real_distribution<double>(0.02, 0.2)(rng));
    const auto inc = find_sigma(ctx, w, s, s, mat, tol, SigmaScan::Incremental);
    const auto exh = find_sigma(ctx, w, s, s, mat, tol, SigmaScan::Exhaustive);
    if (inc.sigma_idx != exh.sigma_idx) {
      if (mismatches++ == 0)
        first = fmt::format(" first: s={} incremental={} exhaustive={}", s, inc.sigma_idx, exh.sigma_idx);
    }
  }
  return {"incremental and exhaustive sigma scans agree", mismatches == 0,
          fmt::format("{} cases on {}x{}, {} mismatches{}", cases, nx, ny, mismatches, first)};
}

/// Discrete comparison principle: larger top data gives a larger solution.
inline CheckResult check_comparison_principle(std::size_t cases, std::uint64_t seed = 3)
{
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  const GridSpec spec{2.0, 0.5, 20, 5, 0.1};
  const FemContext ctx{Grid(spec)};
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t s = std::uniform_int_distribution<std::size_t>(0, 20)(rng);
    const std::size_t sigma = std::uniform_int_distribution<std::size_t>(s, 20)(rng);
    const double flux = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto w = random_profile(rng, 21, 0.1);
    auto w2 = w;
    for (auto& v : w2)
      v += std::uniform_real_distribution<double>(0.0, 0.05)(rng);
    const auto u1 = solve_aux(ctx, w, s, sigma, flux, 1.0, 1e-13);
    const auto u2 = solve_aux(ctx, w2, s, sigma, flux, 1.0, 1e-13);
    for (std::size_t p = 0; p < u1.field.size(); ++p)
      worst = std::min(worst, u2.field[p] - u1.field[p]);
  }
  return {"comparison principle", worst >= -1e-12,
          fmt::format("{} cases, most negative u(w') - u(w) = {:.2e}", cases, worst)};
}

/// The configured boundary profile is admissible at every time level.
inline CheckResult check_profile(const EvolutionConfig& cfg)
{
  try {
    validate_config(cfg);
    return {"boundary profile admissible", true, fmt::format("{} time levels", cfg.n_steps + 1)};
  } catch (const Error& e) {
    return {"boundary profile admissible", false, e.what()};
  }
}

/// Reduced and direct candidate evaluation give the same evolution on a small mesh.
inline CheckResult check_solver_routes(const EvolutionConfig& base)
{
  EvolutionConfig cfg = base;
  cfg.grid.nx = 40;
  cfg.grid.ny = std::size_t(std::llround(40.0 * cfg.grid.b / cfg.grid.a));
  cfg.n_steps = std::min<std::size_t>(cfg.n_steps, 25);
  cfg.beta_sweep.clear();
  try {
    cfg.solver = CandidateSolver::Reduced;
    const auto reduced = run(cfg);
    cfg.solver = CandidateSolver::Direct;
    const auto direct = run(cfg);
    double energy_gap = 0.0;
    for (std::size_t i = 0; i < reduced.records.size(); ++i) {
      const auto& r = reduced.records[i];
      const auto& d = direct.records[i];
      if (r.s_idx != d.s_idx || r.sigma_idx != d.sigma_idx)
        return {"reduced and direct candidate solvers agree", false,
                fmt::format("step {}: reduced (s,sigma)=({},{}) direct ({},{})", r.step, r.s_idx, r.sigma_idx,
                            d.s_idx, d.sigma_idx)};
      energy_gap = std::max(energy_gap, std::abs(r.total - d.total) / std::max(1.0, std::abs(d.total)));
    }
    return {"reduced and direct candidate solvers agree", energy_gap <= 1e-7,
            fmt::format("{} steps on 40x{}, max relative energy gap {:.2e}", reduced.records.size(), cfg.grid.ny,
                        energy_gap)};
  } catch (const Error& e) {
    return {"reduced and direct candidate solvers agree", false, e.what()};
  }
}

inline std::vector<CheckResult> validation_suite(const EvolutionConfig& cfg)
{
  std::vector<CheckResult> out;
  out.push_back(check_dense_oracle(50));
  out.push_back(check_sigma_scans(50));
  out.push_back(check_comparison_principle(20));
  out.push_back(check_profile(cfg));
  out.push_back(check_solver_routes(cfg));
  return out;
}

} // namespace qscrack
