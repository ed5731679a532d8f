#pragma once

// Crack-path reduction of the auxiliary problems.
//
// All auxiliary problems on a grid share the same operator and differ only in
// which bottom nodes are fixed (those at or right of sigma), the top data w,
// and a load supported on the bottom edge. Let Z be the bottom-to-bottom block
// of the inverse of the stiffness with only the top row fixed. Fixing bottom
// node k in a system whose bottom Green's matrix is G replaces G by the Schur
// complement G - G(:,k) G(k,:) / G(k,k), so the Green's matrices G_sigma for
// every sigma follow from Z by successive rank-one downdates. The response to
// w and its Dirichlet energy follow the same recursion, so the bottom trace
// and the elastic energy of any (s, sigma) problem cost O((sigma - s)^2).

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <fmt/core.h>

#include "cohesive.hpp"
#include "errors.hpp"
#include "fem.hpp"

namespace qscrack {

/// Bottom-row Green's matrices G_sigma for every sigma in [s0, nx + 1].
/// Depends only on the grid; build once and share between runs.
class PathGreenOperator
{
public:
  PathGreenOperator(const FemContext& ctx, double rel_tol)
    : grid_(ctx.grid)
  {
    const std::size_t m = grid_.num_bottom();
    const std::vector<double> zero_top(m, 0.0);
    const BoundaryData bc{zero_top, 0, m, 0.0};

    std::vector<double> z(m * m, 0.0);
    std::vector<double> load(grid_.num_nodes(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      load[grid_.node(j, 0)] = 1.0;
      const auto sys = apply_dirichlet(ctx.stiffness, load, grid_, bc);
      const auto sol = solve_spd(sys, grid_, rel_tol);
      load[grid_.node(j, 0)] = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        z[i * m + j] = sol.field[grid_.node(i, 0)];
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double s = 0.5 * (z[i * m + j] + z[j * m + i]);
        z[i * m + j] = z[j * m + i] = s;
      }

    first_ = grid_.s0_index();
    green_.resize(m + 1 - first_);
    green_.back() = std::move(z);
    for (std::size_t sigma = m - 1; sigma + 1 > first_; --sigma) {
      const auto& prev = green_[sigma + 1 - first_];  // (sigma+1) x (sigma+1)
      const std::size_t np = sigma + 1;
      const double pivot = prev[sigma * np + sigma];
      if (!(pivot > 0.0))
        throw Error(fmt::format("path operator: nonpositive pivot {} at bottom node {}", pivot, sigma));
      std::vector<double> g(sigma * sigma);
      for (std::size_t i = 0; i < sigma; ++i) {
        const double ci = prev[i * np + sigma] / pivot;
        for (std::size_t j = 0; j < sigma; ++j)
          g[i * sigma + j] = prev[i * np + j] - ci * prev[sigma * np + j];
      }
      green_[sigma - first_] = std::move(g);
      if (sigma == 0)
        break;
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t first_sigma() const noexcept { return first_; }

  /// G_sigma(i, j) for free bottom nodes i, j < sigma; sigma may be nx + 1.
  double green(std::size_t sigma, std::size_t i, std::size_t j) const noexcept
  {
    return green_[sigma - first_][i * sigma + j];
  }

  std::span<const double> green_row(std::size_t sigma, std::size_t i) const noexcept
  {
    return std::span<const double>(green_[sigma - first_]).subspan(i * sigma, sigma);
  }

private:
  Grid grid_;
  std::size_t first_ = 0;
  std::vector<std::vector<double>> green_;
};

/// Response of the top data w_i for every Dirichlet start sigma, for one time step.
class PathResponse
{
public:
  PathResponse(const FemContext& ctx, std::shared_ptr<const PathGreenOperator> op, std::span<const double> w_top,
               double rel_tol, std::span<const double> warm_start = {})
    : op_(std::move(op))
  {
    const Grid& grid = ctx.grid;
    const std::size_t m = grid.num_bottom();
    const BoundaryData bc{std::vector<double>(w_top.begin(), w_top.end()), 0, m, 0.0};
    const std::vector<double> no_load(grid.num_nodes(), 0.0);
    const auto sys = apply_dirichlet(ctx.stiffness, no_load, grid, bc);
    auto sol = solve_spd(sys, grid, rel_tol, warm_start);
    free_field_.assign(sol.field.values().begin(), sol.field.values().end());

    const std::size_t first = op_->first_sigma();
    trace_.resize(m + 1 - first);
    energy_.resize(m + 1 - first);
    trace_.back() = bottom_trace(sol.field);
    energy_.back() = dirichlet_integral(grid, sol.field.values());
    for (std::size_t sigma = m - 1; sigma + 1 > first; --sigma) {
      const auto& t = trace_[sigma + 1 - first];
      const double pivot = op_->green(sigma + 1, sigma, sigma);
      const double c = t[sigma] / pivot;
      std::vector<double> next(sigma);
      for (std::size_t i = 0; i < sigma; ++i)
        next[i] = t[i] - c * op_->green(sigma + 1, i, sigma);
      energy_[sigma - first] = energy_[sigma + 1 - first] + t[sigma] * c;
      trace_[sigma - first] = std::move(next);
      if (sigma == 0)
        break;
    }
  }

  /// Bottom trace on [0, sigma) of the solution with no cohesive load.
  std::span<const double> trace(std::size_t sigma) const noexcept { return trace_[sigma - op_->first_sigma()]; }

  /// Integral of |grad u|^2 of the solution with no cohesive load.
  double dirichlet_energy(std::size_t sigma) const noexcept { return energy_[sigma - op_->first_sigma()]; }

  /// Solution with the whole bottom row free; reused as a CG warm start.
  std::span<const double> free_field() const noexcept { return free_field_; }

  const PathGreenOperator& op() const noexcept { return *op_; }

private:
  std::shared_ptr<const PathGreenOperator> op_;
  std::vector<std::vector<double>> trace_;
  std::vector<double> energy_;
  std::vector<double> free_field_;
};

/// Bottom trace and Dirichlet energy of u^{s,sigma} from the path reduction.
struct PathEvaluation
{
  std::vector<double> trace;   // [s, sigma) when partial, [0, nx] when full
  double min_trace = 0.0;      // min over [s, sigma]
  double dirichlet_energy = 0.0;
};

/// Cohesive load on the free bottom nodes [s, sigma) for outward flux -flux.
inline std::vector<double> path_cohesive_load(const Grid& grid, std::size_t s, std::size_t sigma, double flux)
{
  std::vector<double> l(sigma - s, -flux * grid.hx());
  if (!l.empty())
    l.front() *= 0.5;
  return l;
}

/// Evaluates (s, sigma). With full_trace the result covers every bottom node,
/// otherwise only [s, sigma) (enough for feasibility, energy and plastic terms).
inline PathEvaluation evaluate_path(const PathResponse& resp, std::size_t s, std::size_t sigma, double flux,
                                    bool full_trace = false)
{
  const PathGreenOperator& op = resp.op();
  const Grid& grid = op.grid();
  const auto l = path_cohesive_load(grid, s, sigma, flux);
  const auto tw = resp.trace(sigma);

  PathEvaluation ev;
  const std::size_t lo = full_trace ? 0 : s;
  std::vector<double> t(sigma - lo);
  for (std::size_t i = lo; i < sigma; ++i) {
    const auto row = op.green_row(sigma, i).subspan(s, sigma - s);
    double y = 0.0;
    for (std::size_t j = 0; j < l.size(); ++j)
      y += row[j] * l[j];
    t[i - lo] = tw[i] + y;
  }
  double load_work = 0.0;
  double mn = 0.0;  // node sigma is fixed to 0
  for (std::size_t i = s; i < sigma; ++i) {
    const double ti = t[i - lo];
    load_work += l[i - s] * (ti - tw[i]);
    mn = std::min(mn, ti);
  }
  ev.min_trace = mn;
  ev.dirichlet_energy = resp.dirichlet_energy(sigma) + load_work;
  if (full_trace)
    t.resize(grid.num_bottom(), 0.0);
  ev.trace = std::move(t);
  return ev;
}

} // namespace qscrack
