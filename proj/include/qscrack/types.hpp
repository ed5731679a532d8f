#pragma once

#include <cstddef>
#include <vector>

#include "fem.hpp"

namespace qscrack {

/// Shear stiffness, yield traction, and toughness.
struct Material
{
  double alpha = 100.0;
  double beta = 20.0;
  double gamma = 0.5;

  double flux() const noexcept { return beta / alpha; }
};

enum class SigmaScan
{
  Incremental,  // stop at the first infeasible sigma
  Exhaustive,   // test every sigma and keep the largest feasible one
};

struct Tolerances
{
  double cg_rel_tol = 1e-10;
  double nonneg_tol = 1e-8;      // relative to max |w_i|
  bool full_field_check = false; // check the whole field, not just the path trace
};

/// Everything the incremental problem at step i needs from step i-1.
struct EvolutionState
{
  explicit EvolutionState(const Grid& grid)
    : u_prev(grid)
  {}

  std::size_t step = 0;
  ScalarField u_prev;
  std::vector<double> trace_prev;  // bottom trace of u_prev
  std::size_t s_idx_prev = 0;
  std::size_t sigma_idx_prev = 0;
  double plastic_cum = 0.0;
  double crack_cum = 0.0;
};

inline double infinity_norm(std::span<const double> v)
{
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

} // namespace qscrack
