#pragma once

// Mesh-convergence study of one auxiliary problem with a Dirichlet/Neumann
// transition on the crack path, plus a node-exactness check for the linear
// solution u = c y / b.

#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/core.h>

#include "cohesive.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "fem.hpp"

namespace qscrack {

struct ConvergenceReport
{
  std::vector<std::size_t> nx;
  std::vector<double> h1_self_error;   // against the finest level, last entry omitted
  std::vector<double> observed_order;  // log2(e_l / e_{l+1})
  std::vector<double> manufactured_error;  // max nodal error of u = c y / b per level
  double s = 0.0;
  double sigma = 0.0;

  bool errors_decrease() const
  {
    for (std::size_t l = 1; l < h1_self_error.size(); ++l)
      if (h1_self_error[l] > h1_self_error[l - 1])
        return false;
    return true;
  }
};

/// Smallest nx for which s0 is a vertex and the elements are square.
inline std::size_t conforming_base_nx(const GridSpec& spec)
{
  for (std::size_t n = 2; n <= 100000; ++n) {
    const double js = spec.s0 * double(n) / spec.a;
    const double ny = double(n) * spec.b / spec.a;
    if (std::abs(js - std::round(js)) < 1e-9 && std::abs(ny - std::round(ny)) < 1e-9 && std::round(ny) >= 1.0)
      return n;
  }
  throw ConfigError("s0", "no conforming square-element base mesh found");
}

/// Solves the (s0, sigma_mid) auxiliary problem with w = w(., t) on nested
/// grids nx = base * 2^l, l = 0..levels-1, with square elements.
inline ConvergenceReport convergence_study(const EvolutionConfig& cfg, std::size_t levels, double t = 0.0,
                                           std::size_t base_nx = 0)
{
  if (levels < 3)
    throw ConfigError("levels", "need at least 3 refinement levels");
  if (base_nx == 0)
    base_nx = conforming_base_nx(cfg.grid);
  const double rel_tol = std::min(cfg.tol.cg_rel_tol, 1e-12);

  ConvergenceReport rep;
  std::vector<ScalarField> solutions;
  std::size_t s_base = 0, sigma_base = 0;
  for (std::size_t l = 0; l < levels; ++l) {
    GridSpec spec = cfg.grid;
    spec.nx = base_nx << l;
    spec.ny = std::size_t(std::llround(double(spec.nx) * spec.b / spec.a));
    const FemContext ctx{Grid(spec)};
    const Grid& grid = ctx.grid;
    if (l == 0) {
      s_base = grid.s0_index();
      sigma_base = s_base + (grid.nx() - s_base) / 2;
      if (sigma_base == s_base)
        throw ConfigError("nx", "base mesh too coarse for a cohesive zone");
      rep.s = grid.x(s_base);
      rep.sigma = grid.x(sigma_base);
    }
    const std::size_t scale = std::size_t(1) << l;
    const auto w = profile_values(grid, cfg, t);
    auto aux = solve_aux(ctx, w, s_base * scale, sigma_base * scale, cfg.material.beta, cfg.material.alpha, rel_tol);
    rep.nx.push_back(spec.nx);
    solutions.push_back(std::move(aux.field));

    // u = c y / b: w = c, whole path fixed to zero
    const double c = cfg.c1;
    const std::vector<double> flat(grid.num_bottom(), c);
    const auto lin = solve_aux(ctx, flat, 0, 0, cfg.material.beta, cfg.material.alpha, rel_tol);
    double err = 0.0;
    for (std::size_t k = 0; k <= grid.ny(); ++k)
      for (std::size_t j = 0; j <= grid.nx(); ++j)
        err = std::max(err, std::abs(lin.field.at(j, k) - c * grid.y(k) / grid.b()));
    rep.manufactured_error.push_back(err);
  }

  const ScalarField& finest = solutions.back();
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    ScalarField u = solutions[l];
    while (u.grid().nx() < finest.grid().nx()) {
      GridSpec spec = u.grid().spec();
      spec.nx *= 2;
      spec.ny *= 2;
      u = prolongate(u, Grid(spec));
    }
    std::vector<double> diff(finest.size());
    for (std::size_t p = 0; p < diff.size(); ++p)
      diff[p] = u[p] - finest[p];
    rep.h1_self_error.push_back(std::sqrt(h1_norm_squared(finest.grid(), diff)));
  }
  for (std::size_t l = 0; l + 1 < rep.h1_self_error.size(); ++l)
    rep.observed_order.push_back(std::log2(rep.h1_self_error[l] / rep.h1_self_error[l + 1]));
  return rep;
}

} // namespace qscrack
