#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/core.h>

#include "errors.hpp"

namespace qscrack {

/// Geometry and resolution of the half domain (0,a)x(0,b).
struct GridSpec
{
  double a = 2.0;
  double b = 0.5;
  std::size_t nx = 200;
  std::size_t ny = 50;
  double s0 = 0.1;

  bool operator==(const GridSpec&) const = default;
};

enum class Edge
{
  Bottom,
  Top,
  Left,
  Right,
};

/// Structured tensor-product mesh of congruent hx x hy rectangles.
///
/// Nodes are numbered row-major, bottom row first: node(j,k) = k*(nx+1) + j,
/// so bottom node j has global index j. The crack path is the bottom edge;
/// the top edge carries the Dirichlet data, left and right edges are
/// homogeneous Neumann.
class Grid
{
public:
  explicit Grid(const GridSpec& spec)
    : spec_(spec)
  {
    if (!(spec.a > 0.0) || !(spec.b > 0.0))
      throw ConfigError("a/b", "domain sizes must be positive");
    if (spec.nx < 2 || spec.ny < 1)
      throw ConfigError("nx/ny", "need nx >= 2 and ny >= 1");
    if (!(spec.s0 > 0.0) || !(spec.s0 < spec.a))
      throw ConfigError("s0", "initial crack tip must lie in (0, a)");
    hx_ = spec.a / double(spec.nx);
    hy_ = spec.b / double(spec.ny);
    s0_index_ = bottom_index_of(spec.s0);
  }

  const GridSpec& spec() const noexcept { return spec_; }
  std::size_t nx() const noexcept { return spec_.nx; }
  std::size_t ny() const noexcept { return spec_.ny; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  double a() const noexcept { return spec_.a; }
  double b() const noexcept { return spec_.b; }

  std::size_t num_nodes() const noexcept { return (spec_.nx + 1) * (spec_.ny + 1); }
  std::size_t num_bottom() const noexcept { return spec_.nx + 1; }
  std::size_t num_elements() const noexcept { return spec_.nx * spec_.ny; }

  std::size_t node(std::size_t j, std::size_t k) const noexcept { return k * (spec_.nx + 1) + j; }
  std::size_t top_node(std::size_t j) const noexcept { return node(j, spec_.ny); }

  double x(std::size_t j) const noexcept { return double(j) * hx_; }
  double y(std::size_t k) const noexcept { return double(k) * hy_; }

  /// Nodes of element (ex,ey) in SW, SE, NE, NW order.
  std::array<std::size_t, 4> element_nodes(std::size_t ex, std::size_t ey) const noexcept
  {
    return {node(ex, ey), node(ex + 1, ey), node(ex + 1, ey + 1), node(ex, ey + 1)};
  }

  bool on_edge(std::size_t p, Edge e) const noexcept
  {
    const std::size_t j = p % (spec_.nx + 1);
    const std::size_t k = p / (spec_.nx + 1);
    switch (e) {
      case Edge::Bottom: return k == 0;
      case Edge::Top: return k == spec_.ny;
      case Edge::Left: return j == 0;
      case Edge::Right: return j == spec_.nx;
    }
    return false;
  }

  /// Bottom-row index of a node abscissa; throws if x is not a vertex.
  std::size_t bottom_index_of(double xq) const
  {
    const double r = std::round(xq / hx_);
    if (!(r >= 0.0) || r > double(spec_.nx) || std::abs(r * hx_ - xq) > 1e-12 * spec_.a)
      throw MeshConformityError(
        fmt::format("mesh does not conform: x = {} is not a crack-path vertex (hx = {})", xq, hx_));
    return std::size_t(r);
  }

  /// Index of s0 in the bottom row; S_h is the bottom nodes [s0_index, nx].
  std::size_t s0_index() const noexcept { return s0_index_; }
  std::size_t last_index() const noexcept { return spec_.nx; }

  /// Abscissae of the discrete crack-path set S_h, strictly increasing.
  std::vector<double> crack_path_set() const
  {
    std::vector<double> out;
    out.reserve(spec_.nx + 1 - s0_index_);
    for (std::size_t j = s0_index_; j <= spec_.nx; ++j)
      out.push_back(x(j));
    return out;
  }

  /// True when the elements are close enough to square for the discrete
  /// comparison principle used by the monotonicity checks.
  bool aspect_ratio_bounded() const noexcept
  {
    const double r = hx_ / hy_;
    return r >= 1.0 / std::sqrt(2.0) - 1e-12 && r <= std::sqrt(2.0) + 1e-12;
  }

private:
  GridSpec spec_;
  double hx_ = 0.0;
  double hy_ = 0.0;
  std::size_t s0_index_ = 0;
};

inline Grid build_grid(const GridSpec& spec) { return Grid(spec); }

inline std::size_t bottom_index_of(const Grid& grid, double x) { return grid.bottom_index_of(x); }

} // namespace qscrack
