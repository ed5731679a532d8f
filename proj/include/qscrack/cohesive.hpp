#pragma once

// Cohesive-zone endpoint search and candidate evaluation for one time step,
// one CG solve per tested endpoint.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"
#include "fem.hpp"
#include "grid.hpp"
#include "types.hpp"

namespace qscrack {

/// Grid plus its assembled stiffness matrix, shared by all solves on the grid.
struct FemContext
{
  explicit FemContext(const Grid& g)
    : grid(g), stiffness(assemble_stiffness(g))
  {}

  Grid grid;
  SparseMatrix stiffness;
};

/// Solution of the auxiliary problem for fixed (s, sigma).
struct AuxSolution
{
  std::size_t s_idx = 0;
  std::size_t sigma_idx = 0;
  ScalarField field;
  double min_trace_value = 0.0;  // min of the bottom trace on [s, sigma]
  double min_field_value = 0.0;  // min over all nodes
  std::size_t cg_iterations = 0;
};

/// Laplace problem on the half domain: u = w on top, u = 0 on [sigma, a],
/// du/dy = beta/alpha on (s, sigma), traction free on (0, s) and the sides.
///
/// The cohesive condition du/dy = beta/alpha at y = 0 is an outward normal
/// derivative of -beta/alpha, so the edge load enters with a negative sign.
inline AuxSolution solve_aux(const FemContext& ctx, std::span<const double> w_top, std::size_t s_idx,
                             std::size_t sigma_idx, double beta, double alpha, double rel_tol,
                             std::span<const double> warm_start = {})
{
  const Grid& grid = ctx.grid;
  if (s_idx > sigma_idx || sigma_idx > grid.nx())
    throw Error(fmt::format("solve_aux: need s <= sigma <= nx, got s = {}, sigma = {}", s_idx, sigma_idx));
  BoundaryData bc{std::vector<double>(w_top.begin(), w_top.end()), s_idx, sigma_idx, beta / alpha};
  const auto load = assemble_cohesive_load(grid, s_idx, sigma_idx, -bc.flux);
  const auto sys = apply_dirichlet(ctx.stiffness, load, grid, bc);
  auto solved = solve_spd(sys, grid, rel_tol, warm_start);

  AuxSolution out{s_idx, sigma_idx, std::move(solved.field), 0.0, 0.0, solved.iterations};
  const auto v = out.field.values();
  out.min_trace_value = *std::min_element(v.begin() + std::ptrdiff_t(s_idx), v.begin() + std::ptrdiff_t(sigma_idx) + 1);
  out.min_field_value = *std::min_element(v.begin(), v.end());
  return out;
}

inline double nonnegativity_slack(const Tolerances& tol, std::span<const double> w_top)
{
  return tol.nonneg_tol * infinity_norm(w_top);
}

struct SigmaSearch
{
  std::size_t sigma_idx = 0;
  AuxSolution aux;
  std::size_t solves = 0;
};

/// Largest admissible cohesive endpoint sigma >= max(s, sigma_lower).
inline SigmaSearch find_sigma(const FemContext& ctx, std::span<const double> w_top, std::size_t s_idx,
                              std::size_t sigma_lower_idx, const Material& mat, const Tolerances& tol,
                              SigmaScan scan = SigmaScan::Incremental, std::span<const double> warm_start = {})
{
  const std::size_t last = ctx.grid.nx();
  const std::size_t start = std::max(s_idx, sigma_lower_idx);
  const double eps = nonnegativity_slack(tol, w_top);
  auto feasible = [&](const AuxSolution& aux) {
    return (tol.full_field_check ? aux.min_field_value : aux.min_trace_value) >= -eps;
  };

  std::size_t solves = 0;
  std::vector<double> guess(warm_start.begin(), warm_start.end());
  auto solve = [&](std::size_t sigma) {
    ++solves;
    auto aux = solve_aux(ctx, w_top, s_idx, sigma, mat.beta, mat.alpha, tol.cg_rel_tol, guess);
    guess.assign(aux.field.values().begin(), aux.field.values().end());
    return aux;
  };

  std::optional<AuxSolution> best;
  if (scan == SigmaScan::Incremental) {
    auto aux = solve(start);
    if (!feasible(aux))
      throw FeasibilityError(fmt::format(
        "nonnegativity failed at empty cohesive zone (s index {}, sigma index {}, min trace {:.3e})", s_idx, start,
        aux.min_trace_value));
    best = std::move(aux);
    for (std::size_t sigma = start + 1; sigma <= last; ++sigma) {
      auto next = solve(sigma);
      if (!feasible(next))
        break;
      best = std::move(next);
    }
  } else {
    for (std::size_t sigma = start; sigma <= last; ++sigma) {
      auto aux = solve(sigma);
      if (feasible(aux))
        best = std::move(aux);
    }
    if (!best)
      throw FeasibilityError(
        fmt::format("nonnegativity failed for every sigma in [{}, {}] (s index {})", start, last, s_idx));
  }
  const std::size_t sigma = best->sigma_idx;
  return SigmaSearch{sigma, std::move(*best), solves};
}

/// Incremental-energy breakdown of one candidate crack tip (half-domain forms).
struct CandidateResult
{
  std::size_t s_idx = 0;
  std::size_t sigma_idx = 0;
  double elastic = 0.0;
  double plastic = 0.0;
  double crack = 0.0;
  double total = 0.0;
  std::size_t solves = 0;
  std::vector<double> trace;           // bottom trace of u^s
  std::optional<ScalarField> field;    // present when the candidate was solved on the full grid
};

inline double crack_energy(const Grid& grid, const Material& mat, std::size_t s_idx, std::size_t s_idx_prev)
{
  return 0.5 * mat.gamma * (grid.x(s_idx) - grid.x(s_idx_prev));
}

/// Solves the incremental problem for a fixed crack tip s >= s_{i-1}.
inline CandidateResult solve_candidate(const FemContext& ctx, const EvolutionState& state,
                                       std::span<const double> w_top, std::size_t s_idx, const Material& mat,
                                       const Tolerances& tol, SigmaScan scan = SigmaScan::Incremental,
                                       std::span<const double> warm_start = {})
{
  const Grid& grid = ctx.grid;
  if (s_idx < state.s_idx_prev || s_idx > grid.nx())
    throw Error(fmt::format("solve_candidate: s index {} outside [{}, {}]", s_idx, state.s_idx_prev, grid.nx()));
  auto search = find_sigma(ctx, w_top, s_idx, state.sigma_idx_prev, mat, tol, scan, warm_start);

  CandidateResult c;
  c.s_idx = s_idx;
  c.sigma_idx = search.sigma_idx;
  c.solves = search.solves;
  c.trace = bottom_trace(search.aux.field);
  c.elastic = elastic_energy(search.aux.field, mat.alpha);
  c.plastic = mat.beta * path_abs_integral(grid, s_idx, c.trace, state.trace_prev);
  c.crack = crack_energy(grid, mat, s_idx, state.s_idx_prev);
  c.total = c.elastic + c.plastic + c.crack;
  c.field = std::move(search.aux.field);
  return c;
}

} // namespace qscrack
