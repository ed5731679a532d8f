#pragma once

// Q1 finite elements on the structured half-domain grid: assembly, Dirichlet
// elimination, Jacobi-preconditioned CG, and exact integrals of bilinear fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"
#include "grid.hpp"

namespace qscrack {

/// Nodal values of a continuous piecewise-bilinear function on a Grid.
class ScalarField
{
public:
  explicit ScalarField(const Grid& grid)
    : grid_(grid), values_(grid.num_nodes(), 0.0)
  {}

  ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
  {
    if (values_.size() != grid_.num_nodes())
      throw Error(fmt::format("field has {} values, grid has {} nodes", values_.size(), grid_.num_nodes()));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t p) const noexcept { return values_[p]; }
  double& operator[](std::size_t p) noexcept { return values_[p]; }
  double at(std::size_t j, std::size_t k) const noexcept { return values_[grid_.node(j, k)]; }

  bool all_finite() const noexcept
  {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

/// Compressed sparse row matrix.
struct SparseMatrix
{
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  std::size_t nnz() const noexcept { return val.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const noexcept
  {
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        acc += val[k] * x[col[k]];
      y[r] = acc;
    }
  }

  double entry(std::size_t r, std::size_t c) const noexcept
  {
    const auto first = col.begin() + std::ptrdiff_t(row_ptr[r]);
    const auto last = col.begin() + std::ptrdiff_t(row_ptr[r + 1]);
    const auto it = std::lower_bound(first, last, c);
    return (it != last && *it == c) ? val[std::size_t(it - col.begin())] : 0.0;
  }

  std::vector<double> diagonal() const
  {
    std::vector<double> d(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      d[r] = entry(r, r);
    return d;
  }
};

/// Builds a CSR matrix from (row, col, value) triplets; duplicates are summed
/// in insertion order.
inline SparseMatrix compress(std::size_t rows, std::vector<std::tuple<std::size_t, std::size_t, double>> triplets)
{
  std::stable_sort(triplets.begin(), triplets.end(), [](const auto& l, const auto& r) {
    return std::tie(std::get<0>(l), std::get<1>(l)) < std::tie(std::get<0>(r), std::get<1>(r));
  });
  SparseMatrix m;
  m.rows = rows;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    const auto [r, c, v0] = triplets[i];
    double v = v0;
    std::size_t k = i + 1;
    for (; k < triplets.size() && std::get<0>(triplets[k]) == r && std::get<1>(triplets[k]) == c; ++k)
      v += std::get<2>(triplets[k]);
    m.col.push_back(c);
    m.val.push_back(v);
    ++m.row_ptr[r + 1];
    i = k;
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

/// Exact Q1 stiffness matrix of an hx x hy rectangle, nodes SW, SE, NE, NW.
inline std::array<std::array<double, 4>, 4> element_stiffness(double hx, double hy)
{
  static constexpr double kx[4][4] = {{2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}};
  static constexpr double ky[4][4] = {{2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
  const double rx = hy / hx / 6.0;
  const double ry = hx / hy / 6.0;
  std::array<std::array<double, 4>, 4> k{};
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      k[p][q] = rx * kx[p][q] + ry * ky[p][q];
  return k;
}

/// Exact Q1 mass matrix of an hx x hy rectangle, nodes SW, SE, NE, NW.
inline std::array<std::array<double, 4>, 4> element_mass(double hx, double hy)
{
  static constexpr double m[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
  std::array<std::array<double, 4>, 4> out{};
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      out[p][q] = hx * hy / 36.0 * m[p][q];
  return out;
}

/// Full (pre-elimination) stiffness matrix of the Laplacian on the grid.
inline SparseMatrix assemble_stiffness(const Grid& grid)
{
  const auto ke = element_stiffness(grid.hx(), grid.hy());
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;
  triplets.reserve(16 * grid.num_elements());
  for (std::size_t ey = 0; ey < grid.ny(); ++ey)
    for (std::size_t ex = 0; ex < grid.nx(); ++ex) {
      const auto nodes = grid.element_nodes(ex, ey);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          triplets.emplace_back(nodes[p], nodes[q], ke[p][q]);
    }
  return compress(grid.num_nodes(), std::move(triplets));
}

/// Load vector of the edge integral of flux * v over [x_s, x_sigma] on the
/// bottom edge, with v ranging over the hat functions.
inline std::vector<double> assemble_cohesive_load(const Grid& grid, std::size_t s_idx, std::size_t sigma_idx, double flux)
{
  if (s_idx > sigma_idx)
    throw Error(fmt::format("cohesive load: s index {} exceeds sigma index {}", s_idx, sigma_idx));
  if (sigma_idx > grid.nx())
    throw Error(fmt::format("cohesive load: sigma index {} outside bottom row", sigma_idx));
  std::vector<double> load(grid.num_nodes(), 0.0);
  const double h = grid.hx();
  for (std::size_t j = s_idx; j < sigma_idx; ++j) {
    load[grid.node(j, 0)] += 0.5 * flux * h;
    load[grid.node(j + 1, 0)] += 0.5 * flux * h;
  }
  return load;
}

/// Dirichlet data and cohesive Neumann data of one auxiliary problem.
struct BoundaryData
{
  std::vector<double> top_values;   // w at top nodes, length nx+1
  std::size_t s_idx = 0;            // start of the cohesive zone
  std::size_t sigma_idx = 0;        // bottom nodes >= sigma_idx are fixed to 0
  double flux = 0.0;                // Neumann flux on [s, sigma]
};

/// Reduced system on the free nodes after symmetric Dirichlet elimination.
struct LinearSystem
{
  SparseMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::size_t> free_nodes;          // free index -> grid node
  std::vector<std::ptrdiff_t> node_to_free;     // grid node -> free index or -1
  std::vector<double> dirichlet;                // full-length lifting g (0 on free nodes)

  std::size_t size() const noexcept { return free_nodes.size(); }
};

/// Nodal Dirichlet lifting: top row <- w, bottom nodes at or right of sigma <- 0.
inline std::vector<std::ptrdiff_t> dirichlet_mask(const Grid& grid, std::size_t sigma_idx, std::size_t bottom_end)
{
  std::vector<std::ptrdiff_t> mask(grid.num_nodes(), 0);
  for (std::size_t j = 0; j <= grid.nx(); ++j)
    mask[grid.top_node(j)] = 1;
  for (std::size_t j = sigma_idx; j < bottom_end; ++j)
    mask[grid.node(j, 0)] = 1;
  return mask;
}

/// Eliminates the Dirichlet nodes of bc from the full system (matrix, load).
/// A sigma_idx of nx+1 leaves the whole bottom row free.
inline LinearSystem apply_dirichlet(const SparseMatrix& full, std::span<const double> load, const Grid& grid,
                                    const BoundaryData& bc)
{
  if (bc.top_values.size() != grid.num_bottom())
    throw Error(fmt::format("boundary data has {} top values, grid needs {}", bc.top_values.size(), grid.num_bottom()));
  if (bc.sigma_idx > grid.nx() + 1)
    throw Error("boundary data: sigma index outside bottom row");

  const auto mask = dirichlet_mask(grid, bc.sigma_idx, grid.nx() + 1);
  LinearSystem sys;
  sys.dirichlet.assign(grid.num_nodes(), 0.0);
  for (std::size_t j = 0; j <= grid.nx(); ++j)
    sys.dirichlet[grid.top_node(j)] = bc.top_values[j];

  sys.node_to_free.assign(grid.num_nodes(), -1);
  for (std::size_t p = 0; p < grid.num_nodes(); ++p)
    if (!mask[p]) {
      sys.node_to_free[p] = std::ptrdiff_t(sys.free_nodes.size());
      sys.free_nodes.push_back(p);
    }

  const std::size_t n = sys.free_nodes.size();
  sys.rhs.assign(n, 0.0);
  sys.matrix.rows = n;
  sys.matrix.row_ptr.assign(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t p = sys.free_nodes[r];
    double b = load[p];
    for (std::size_t k = full.row_ptr[p]; k < full.row_ptr[p + 1]; ++k) {
      const std::size_t q = full.col[k];
      if (sys.node_to_free[q] >= 0) {
        sys.matrix.col.push_back(std::size_t(sys.node_to_free[q]));
        sys.matrix.val.push_back(full.val[k]);
      } else {
        b -= full.val[k] * sys.dirichlet[q];
      }
    }
    sys.matrix.row_ptr[r + 1] = sys.matrix.col.size();
    sys.rhs[r] = b;
  }
  return sys;
}

struct SolveResult
{
  ScalarField field;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

inline std::size_t cg_iteration_cap(std::size_t unknowns)
{
  return std::size_t(50.0 * std::sqrt(double(unknowns))) + 1000;
}

/// Jacobi-preconditioned conjugate gradient on the free nodes. The optional
/// initial guess is a full-length nodal vector; its free entries seed CG.
/// Returns the full nodal field with the Dirichlet values re-inserted.
inline SolveResult solve_spd(const LinearSystem& sys, const Grid& grid, double rel_tol,
                             std::span<const double> initial = {})
{
  if (!(rel_tol > 0.0))
    throw Error("solve_spd: relative tolerance must be positive");
  const std::size_t n = sys.size();
  const auto& A = sys.matrix;

  std::vector<double> x(n, 0.0);
  if (!initial.empty())
    for (std::size_t r = 0; r < n; ++r)
      x[r] = initial[sys.free_nodes[r]];

  const double bnorm = std::sqrt(std::inner_product(sys.rhs.begin(), sys.rhs.end(), sys.rhs.begin(), 0.0));

  auto finish = [&](std::size_t it, double res) {
    std::vector<double> full = sys.dirichlet;
    for (std::size_t r = 0; r < n; ++r)
      full[sys.free_nodes[r]] = x[r];
    return SolveResult{ScalarField(grid, std::move(full)), it, res};
  };

  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return finish(0, 0.0);
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  A.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = sys.rhs[i] - q[i];

  std::vector<double> inv_diag = A.diagonal();
  for (double& d : inv_diag)
    d = 1.0 / d;

  auto norm = [](const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); };

  double res = norm(r) / bnorm;
  if (res <= rel_tol)
    return finish(0, res);

  for (std::size_t i = 0; i < n; ++i)
    z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

  const std::size_t cap = cg_iteration_cap(n);
  for (std::size_t it = 1; it <= cap; ++it) {
    A.multiply(p, q);
    const double step = rz / std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * q[i];
    }
    res = norm(r) / bnorm;
    if (res <= rel_tol) {
      // confirm with the true residual, the recursive one drifts
      A.multiply(x, q);
      for (std::size_t i = 0; i < n; ++i)
        r[i] = sys.rhs[i] - q[i];
      res = norm(r) / bnorm;
      if (res <= rel_tol)
        return finish(it, res);
    }
    for (std::size_t i = 0; i < n; ++i)
      z[i] = inv_diag[i] * r[i];
    const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = z[i] + beta * p[i];
  }
  throw SolverError(fmt::format("conjugate gradient did not reach rel_tol {} in {} iterations (residual {})", rel_tol,
                                cap, res),
                    res, cap);
}

/// Integral of |grad u|^2 for a Q1 field, element by element from edge
/// differences: (hy/hx)(d0^2 + d0 d1 + d1^2)/3 per direction. Exactly zero
/// for constants and never negative.
inline double dirichlet_integral(const Grid& grid, std::span<const double> u)
{
  const double rx = grid.hy() / grid.hx() / 3.0;
  const double ry = grid.hx() / grid.hy() / 3.0;
  auto q = [](double d0, double d1) { return d0 * d0 + d0 * d1 + d1 * d1; };
  double total = 0.0;
  for (std::size_t ey = 0; ey < grid.ny(); ++ey)
    for (std::size_t ex = 0; ex < grid.nx(); ++ex) {
      const auto n = grid.element_nodes(ex, ey);  // SW, SE, NE, NW
      const double sw = u[n[0]], se = u[n[1]], ne = u[n[2]], nw = u[n[3]];
      total += rx * q(se - sw, ne - nw) + ry * q(nw - sw, ne - se);
    }
  return total;
}

/// (alpha/2) * integral of |grad u|^2 over the half domain, exact for Q1.
inline double elastic_energy(const ScalarField& field, double alpha)
{
  return 0.5 * alpha * dirichlet_integral(field.grid(), field.values());
}

/// Squared H1 norm (L2 plus gradient part) of a Q1 field, exact.
inline double h1_norm_squared(const Grid& grid, std::span<const double> u)
{
  const auto me = element_mass(grid.hx(), grid.hy());
  double l2 = 0.0;
  for (std::size_t ey = 0; ey < grid.ny(); ++ey)
    for (std::size_t ex = 0; ex < grid.nx(); ++ex) {
      const auto nodes = grid.element_nodes(ex, ey);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          l2 += u[nodes[p]] * me[p][q] * u[nodes[q]];
    }
  return l2 + dirichlet_integral(grid, u);
}

/// Nodal values along the bottom edge y = 0, increasing x.
inline std::vector<double> bottom_trace(const ScalarField& field)
{
  const Grid& g = field.grid();
  std::vector<double> out(g.num_bottom());
  for (std::size_t j = 0; j <= g.nx(); ++j)
    out[j] = field.at(j, 0);
  return out;
}

/// Nodal values along the top edge y = b, increasing x.
inline std::vector<double> top_trace(const ScalarField& field)
{
  const Grid& g = field.grid();
  std::vector<double> out(g.num_bottom());
  for (std::size_t j = 0; j <= g.nx(); ++j)
    out[j] = field.at(j, g.ny());
  return out;
}

/// Exact integral of |f - g| over [x_from, a] for piecewise-linear bottom data.
/// Elements where the difference changes sign are split at the root.
inline double path_abs_integral(const Grid& grid, std::size_t from_idx, std::span<const double> f,
                                std::span<const double> g)
{
  if (f.size() != g.size() || f.size() != grid.num_bottom())
    throw Error("path_abs_integral: trace lengths do not match the grid");
  const double h = grid.hx();
  double total = 0.0;
  for (std::size_t j = from_idx; j < grid.nx(); ++j) {
    const double d0 = f[j] - g[j];
    const double d1 = f[j + 1] - g[j + 1];
    if ((d0 >= 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0)) {
      total += 0.5 * h * std::abs(d0 + d1);
    } else {
      // two triangles meeting at the root
      const double a0 = std::abs(d0), a1 = std::abs(d1);
      total += 0.5 * h * (a0 * a0 + a1 * a1) / (a0 + a1);
    }
  }
  return total;
}

/// Bilinear prolongation of a field onto the grid refined twice in each direction.
inline ScalarField prolongate(const ScalarField& coarse, const Grid& fine)
{
  const Grid& c = coarse.grid();
  if (fine.nx() != 2 * c.nx() || fine.ny() != 2 * c.ny())
    throw Error("prolongate: fine grid must be the uniform refinement of the coarse one");
  ScalarField out(fine);
  for (std::size_t k = 0; k <= fine.ny(); ++k)
    for (std::size_t j = 0; j <= fine.nx(); ++j) {
      const std::size_t j0 = j / 2, k0 = k / 2;
      const std::size_t j1 = std::min(j0 + (j % 2), c.nx());
      const std::size_t k1 = std::min(k0 + (k % 2), c.ny());
      out[fine.node(j, k)] = 0.25 * (coarse.at(j0, k0) + coarse.at(j1, k0) + coarse.at(j0, k1) + coarse.at(j1, k1));
    }
  return out;
}

} // namespace qscrack
