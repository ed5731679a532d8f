#pragma once

// Statistics of crack-front histories s(t), sigma(t).

#include <cstddef>
#include <span>
#include <vector>

#include "evolution.hpp"

namespace qscrack {

/// Crack-tip advance at each step, starting from s0.
inline std::vector<double> tip_increments(std::span<const StepRecord> records, double s0)
{
  std::vector<double> ds;
  ds.reserve(records.size());
  double prev = s0;
  for (const auto& r : records) {
    ds.push_back(r.s - prev);
    prev = r.s;
  }
  return ds;
}

/// Number of steps whose tip advance is at least threshold. Advances are
/// multiples of hx, so a threshold of k*hx is tested with half a cell of slack.
inline std::size_t jump_count(std::span<const StepRecord> records, double s0, double threshold, double hx)
{
  std::size_t n = 0;
  for (double d : tip_increments(records, s0))
    if (d >= threshold - 0.5 * hx)
      ++n;
  return n;
}

inline double mean_cohesive_length(std::span<const StepRecord> records)
{
  if (records.empty())
    return 0.0;
  double sum = 0.0;
  for (const auto& r : records)
    sum += r.sigma - r.s;
  return sum / double(records.size());
}

/// Fraction of steps with sigma - s <= max_length.
inline double fraction_short_zone(std::span<const StepRecord> records, double max_length, double hx)
{
  if (records.empty())
    return 0.0;
  std::size_t n = 0;
  for (const auto& r : records)
    if (r.sigma - r.s <= max_length + 0.5 * hx)
      ++n;
  return double(n) / double(records.size());
}

inline bool nondecreasing_fronts(std::span<const StepRecord> records, double s0)
{
  double s = s0, sigma = s0;
  for (const auto& r : records) {
    if (r.s < s || r.sigma < sigma)
      return false;
    s = r.s;
    sigma = r.sigma;
  }
  return true;
}

struct JumpEvent
{
  std::size_t step = 0;
  double t = 0.0;
  double size = 0.0;
  double plateau_before = 0.0;
  double plateau_after = 0.0;
};

/// Jumps of at least min_jump whose surrounding plateaus (time to the previous
/// and to the next tip motion) both last at least min_plateau. A jump with no
/// later motion only needs the plateau before it.
inline std::vector<JumpEvent> isolated_jumps(std::span<const StepRecord> records, double s0, double t0,
                                             double min_jump, double min_plateau, double hx)
{
  const auto ds = tip_increments(records, s0);
  std::vector<JumpEvent> out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (ds[k] < min_jump - 0.5 * hx)
      continue;
    // s(t) is constant between consecutive tip motions
    double start = t0;
    for (std::size_t m = k; m-- > 0;)
      if (ds[m] > 0.0) {
        start = records[m].t;
        break;
      }
    const double before = records[k].t - start;
    double end = records.back().t;
    bool reached_end = true;
    for (std::size_t m = k + 1; m < records.size(); ++m)
      if (ds[m] > 0.0) {
        end = records[m].t;
        reached_end = false;
        break;
      }
    const double after = end - records[k].t;
    const double tol = 1e-9;
    if (before >= min_plateau - tol && (reached_end || after >= min_plateau - tol))
      out.push_back({k + 1, records[k].t, ds[k], before, after});
  }
  return out;
}

} // namespace qscrack
