#pragma once

// Incremental quasi-static evolution: for every time step, minimize the
// incremental energy over the crack tip s in S_h (s >= s_{i-1}), with the
// displacement for each s obtained from the cohesive-zone search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cohesive.hpp"
#include "errors.hpp"
#include "fem.hpp"
#include "grid.hpp"
#include "path_operator.hpp"
#include "types.hpp"

namespace qscrack {

enum class U0Mode
{
  Zero,
  Harmonic,
};

/// How candidate crack tips are evaluated.
enum class CandidateSolver
{
  Reduced,  // crack-path Green's reduction, one CG solve per step
  Direct,   // one CG solve per tested (s, sigma)
};

struct EvolutionConfig
{
  GridSpec grid;
  Material material;
  double T = 2.5;
  std::size_t n_steps = 250;
  double c1 = 0.1;
  double c2 = 0.2;
  U0Mode u0_mode = U0Mode::Zero;
  Tolerances tol;
  SigmaScan sigma_scan = SigmaScan::Incremental;
  CandidateSolver solver = CandidateSolver::Reduced;
  std::size_t s_stride = 1;  // > 1 enables the stride-then-refine scan over s
  std::vector<double> beta_sweep;

  double time(std::size_t i) const noexcept { return double(i) * T / double(n_steps); }
};

/// Moving smoothed step w(x,t) = c1 (1/2 - atan((x - t - s0) c2 pi / c1) / pi).
inline double boundary_profile(double x, double t, double c1, double c2, double s0)
{
  return c1 * (0.5 - std::atan((x - t - s0) * c2 * std::numbers::pi / c1) / std::numbers::pi);
}

/// Top-edge nodal values of w_i (nodal interpolation).
inline std::vector<double> profile_values(const Grid& grid, const EvolutionConfig& cfg, double t)
{
  std::vector<double> w(grid.num_bottom());
  for (std::size_t j = 0; j <= grid.nx(); ++j)
    w[j] = boundary_profile(grid.x(j), t, cfg.c1, cfg.c2, grid.spec().s0);
  return w;
}

/// Checks the admissibility of a time-indexed family of nodal boundary data:
/// nonnegative, nonincreasing in x, nondecreasing in time, not identically zero.
inline void validate_profile(std::span<const std::vector<double>> w)
{
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& wi = w[i];
    bool nonzero = false;
    for (std::size_t j = 0; j < wi.size(); ++j) {
      if (!std::isfinite(wi[j]))
        throw ConfigError("profile", fmt::format("w_{} is not finite at node {}", i, j));
      if (wi[j] < 0.0)
        throw ConfigError("profile", fmt::format("w_{} is negative at node {}", i, j));
      if (j > 0 && wi[j] > wi[j - 1])
        throw ConfigError("profile", fmt::format("w_{} is not nonincreasing in x at node {}", i, j));
      nonzero = nonzero || wi[j] != 0.0;
    }
    if (!nonzero)
      throw ConfigError("profile", fmt::format("w_{} is identically zero", i));
    if (i > 0) {
      if (w[i - 1].size() != wi.size())
        throw ConfigError("profile", "profile arrays differ in length");
      for (std::size_t j = 0; j < wi.size(); ++j)
        if (wi[j] < w[i - 1][j])
          throw ConfigError("profile",
                            fmt::format("w is not nondecreasing in time: w_{} < w_{} at node {}", i, i - 1, j));
    }
  }
}

/// Rejects nonphysical parameters and inadmissible boundary data.
inline void validate_config(const EvolutionConfig& cfg)
{
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(key, fmt::format("must be positive, got {}", v));
  };
  positive("a", cfg.grid.a);
  positive("b", cfg.grid.b);
  positive("alpha", cfg.material.alpha);
  positive("beta", cfg.material.beta);
  positive("gamma", cfg.material.gamma);
  positive("T", cfg.T);
  positive("c1", cfg.c1);
  positive("c2", cfg.c2);
  positive("cg_rel_tol", cfg.tol.cg_rel_tol);
  if (!(cfg.tol.nonneg_tol >= 0.0))
    throw ConfigError("nonneg_tol", "must be nonnegative");
  if (cfg.n_steps < 1)
    throw ConfigError("n_steps", "must be at least 1");
  if (cfg.s_stride < 1)
    throw ConfigError("s_stride", "must be at least 1");
  for (double b : cfg.beta_sweep)
    positive("beta", b);
  if (cfg.grid.nx < 2)
    throw ConfigError("nx", "must be at least 2");
  if (cfg.grid.ny < 1)
    throw ConfigError("ny", "must be at least 1");
  if (!(cfg.grid.s0 > 0.0) || !(cfg.grid.s0 < cfg.grid.a))
    throw ConfigError("s0", "must lie in (0, a)");

  Grid grid(cfg.grid);
  std::vector<std::vector<double>> w;
  w.reserve(cfg.n_steps + 1);
  for (std::size_t i = 0; i <= cfg.n_steps; ++i)
    w.push_back(profile_values(grid, cfg, cfg.time(i)));
  validate_profile(w);
}

/// u_0: zero, or the harmonic field with u = w_0 on top and u = 0 on the whole path.
inline ScalarField initial_displacement(const EvolutionConfig& cfg, const FemContext& ctx)
{
  if (cfg.u0_mode == U0Mode::Zero)
    return ScalarField(ctx.grid);
  const auto w0 = profile_values(ctx.grid, cfg, 0.0);
  return solve_aux(ctx, w0, 0, 0, cfg.material.beta, cfg.material.alpha, cfg.tol.cg_rel_tol).field;
}

struct CandidateSummary
{
  std::size_t s_idx = 0;
  std::size_t sigma_idx = 0;
  double elastic = 0.0;
  double plastic = 0.0;
  double crack = 0.0;
  double total = 0.0;
};

/// Per-step output. Energies use the half-domain forms.
struct StepRecord
{
  std::size_t step = 0;
  double t = 0.0;
  std::size_t s_idx = 0;
  std::size_t sigma_idx = 0;
  double s = 0.0;
  double sigma = 0.0;
  double elastic = 0.0;
  double plastic = 0.0;  // incremental
  double crack = 0.0;    // incremental
  double total = 0.0;
  double plastic_cum = 0.0;
  double crack_cum = 0.0;
  std::size_t sigma_solves = 0;
  std::vector<CandidateSummary> candidates;

  // diagnostics of the accepted field
  double min_path_trace = 0.0;       // min of the accepted trace on [s, sigma]
  double min_field = 0.0;            // min over all nodes
  double min_trace_increment = 0.0;  // min over nodes of trace_i - trace_{i-1}
  double reduced_trace_gap = 0.0;    // max |CG trace - reduced trace| (reduced solver only)
  double nonneg_slack = 0.0;         // epsilon used for every nonnegativity test of this step
  bool trace_monotonicity_checked = false;
  std::vector<std::string> violations;
};

/// Relative tolerance under which two candidate energies count as equal.
inline constexpr double kTieTolerance = 1e-12;

/// Index of the minimizer in candidates, smallest s among ties.
inline std::size_t select_minimizer(std::span<const CandidateSummary> candidates)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates)
    best = std::min(best, c.total);
  const double slack = kTieTolerance * std::abs(best);
  std::size_t pick = candidates.size();
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (candidates[k].total <= best + slack && (pick == candidates.size() || candidates[k].s_idx < candidates[pick].s_idx))
      pick = k;
  return pick;
}

struct StepError : Error
{
  StepError(std::size_t step, const std::string& what)
    : Error(fmt::format("step {}: {}", step, what)), step(step)
  {}
  std::size_t step;
};

class Evolution
{
public:
  explicit Evolution(EvolutionConfig cfg, std::shared_ptr<const PathGreenOperator> op = nullptr)
    : cfg_(std::move(cfg)), ctx_(Grid(cfg_.grid)), state_(ctx_.grid)
  {
    validate_config(cfg_);
    if (cfg_.solver == CandidateSolver::Reduced) {
      if (op && !(op->grid().spec() == ctx_.grid.spec()))
        throw Error("path operator was built for a different grid");
      op_ = op ? std::move(op) : std::make_shared<const PathGreenOperator>(ctx_, green_tolerance(cfg_.tol));
    }
    state_.u_prev = initial_displacement(cfg_, ctx_);
    state_.trace_prev = bottom_trace(state_.u_prev);
    state_.s_idx_prev = ctx_.grid.s0_index();
    state_.sigma_idx_prev = ctx_.grid.s0_index();
  }

  /// CG tolerance for the Green's matrix columns; tighter than the per-step solves.
  static double green_tolerance(const Tolerances& tol) { return std::min(tol.cg_rel_tol, 1e-12); }

  const EvolutionConfig& config() const noexcept { return cfg_; }
  const Grid& grid() const noexcept { return ctx_.grid; }
  const FemContext& context() const noexcept { return ctx_; }
  const EvolutionState& state() const noexcept { return state_; }
  std::shared_ptr<const PathGreenOperator> path_operator() const noexcept { return op_; }
  bool finished() const noexcept { return state_.step >= cfg_.n_steps; }

  /// Boundary data of the step about to be taken, or of the last one.
  std::vector<double> current_profile() const { return profile_values(ctx_.grid, cfg_, cfg_.time(state_.step)); }

  StepRecord step()
  {
    const std::size_t i = state_.step + 1;
    try {
      return do_step(i);
    } catch (const StepError&) {
      throw;
    } catch (const Error& e) {
      throw StepError(i, e.what());
    }
  }

private:
  struct Evaluated
  {
    CandidateSummary summary;
    std::size_t solves = 0;
  };

  std::vector<std::size_t> s_candidates(const std::function<Evaluated(std::size_t)>& eval,
                                        std::vector<Evaluated>& out) const
  {
    const std::size_t first = state_.s_idx_prev;
    const std::size_t last = ctx_.grid.nx();
    std::vector<std::size_t> order;
    auto visit = [&](std::size_t s) {
      if (std::find(order.begin(), order.end(), s) != order.end())
        return;
      order.push_back(s);
      out.push_back(eval(s));
    };
    if (cfg_.s_stride <= 1) {
      for (std::size_t s = first; s <= last; ++s)
        visit(s);
      return order;
    }
    for (std::size_t s = first; s <= last; s += cfg_.s_stride)
      visit(s);
    visit(last);
    std::vector<CandidateSummary> coarse;
    for (const auto& e : out)
      coarse.push_back(e.summary);
    const std::size_t best = coarse[select_minimizer(coarse)].s_idx;
    const std::size_t lo = best > first + cfg_.s_stride ? best - cfg_.s_stride + 1 : first;
    const std::size_t hi = std::min(last, best + cfg_.s_stride - 1);
    for (std::size_t s = lo; s <= hi; ++s)
      visit(s);
    return order;
  }

  StepRecord do_step(std::size_t i)
  {
    const Grid& grid = ctx_.grid;
    const Material& mat = cfg_.material;
    const double t = cfg_.time(i);
    const auto w = profile_values(grid, cfg_, t);
    const double eps = nonnegativity_slack(cfg_.tol, w);

    std::vector<Evaluated> evaluated;
    std::optional<PathResponse> resp;
    std::optional<CandidateResult> best_direct;

    if (cfg_.solver == CandidateSolver::Reduced) {
      resp.emplace(ctx_, op_, w, cfg_.tol.cg_rel_tol, last_free_field_);
      last_free_field_.assign(resp->free_field().begin(), resp->free_field().end());
      s_candidates([&](std::size_t s) { return evaluate_reduced(*resp, s, eps); }, evaluated);
    } else {
      std::vector<double> warm(state_.u_prev.values().begin(), state_.u_prev.values().end());
      s_candidates(
        [&](std::size_t s) {
          auto c = solve_candidate(ctx_, state_, w, s, mat, cfg_.tol, cfg_.sigma_scan, warm);
          warm.assign(c.field->values().begin(), c.field->values().end());
          Evaluated e{{c.s_idx, c.sigma_idx, c.elastic, c.plastic, c.crack, c.total}, c.solves};
          if (!best_direct || c.total < best_direct->total)
            best_direct = std::move(c);
          return e;
        },
        evaluated);
    }

    StepRecord rec;
    rec.step = i;
    rec.t = t;
    rec.nonneg_slack = eps;
    for (const auto& e : evaluated) {
      rec.candidates.push_back(e.summary);
      rec.sigma_solves += e.solves;
    }
    const auto& chosen = rec.candidates[select_minimizer(rec.candidates)];
    rec.s_idx = chosen.s_idx;
    rec.sigma_idx = chosen.sigma_idx;
    rec.s = grid.x(chosen.s_idx);
    rec.sigma = grid.x(chosen.sigma_idx);
    rec.elastic = chosen.elastic;
    rec.plastic = chosen.plastic;
    rec.crack = chosen.crack;
    rec.total = chosen.total;

    // accepted displacement on the full grid
    ScalarField u = [&] {
      if (best_direct && best_direct->s_idx == chosen.s_idx)
        return std::move(*best_direct->field);
      return solve_aux(ctx_, w, chosen.s_idx, chosen.sigma_idx, mat.beta, mat.alpha, cfg_.tol.cg_rel_tol,
                       state_.u_prev.values())
        .field;
    }();
    const auto trace = bottom_trace(u);
    if (resp) {
      const auto ev = evaluate_path(*resp, chosen.s_idx, chosen.sigma_idx, mat.flux(), true);
      for (std::size_t j = 0; j < trace.size(); ++j)
        rec.reduced_trace_gap = std::max(rec.reduced_trace_gap, std::abs(trace[j] - ev.trace[j]));
    }

    check_invariants(rec, u, trace, eps);

    state_.step = i;
    state_.plastic_cum += rec.plastic;
    state_.crack_cum += rec.crack;
    state_.s_idx_prev = rec.s_idx;
    state_.sigma_idx_prev = rec.sigma_idx;
    state_.trace_prev = trace;
    state_.u_prev = std::move(u);
    rec.plastic_cum = state_.plastic_cum;
    rec.crack_cum = state_.crack_cum;
    return rec;
  }

  Evaluated evaluate_reduced(const PathResponse& resp, std::size_t s, double eps) const
  {
    const Grid& grid = ctx_.grid;
    const Material& mat = cfg_.material;
    const double flux = mat.flux();
    const std::size_t start = std::max(s, state_.sigma_idx_prev);
    std::size_t solves = 0;
    auto feasible = [&](const PathEvaluation& ev) { return ev.min_trace >= -eps; };

    std::optional<PathEvaluation> best;
    std::size_t best_sigma = start;
    if (cfg_.sigma_scan == SigmaScan::Incremental) {
      auto ev = evaluate_path(resp, s, start, flux);
      ++solves;
      if (!feasible(ev))
        throw FeasibilityError(fmt::format(
          "nonnegativity failed at empty cohesive zone (s index {}, sigma index {}, min trace {:.3e})", s, start,
          ev.min_trace));
      best = std::move(ev);
      for (std::size_t sigma = start + 1; sigma <= grid.nx(); ++sigma) {
        auto next = evaluate_path(resp, s, sigma, flux);
        ++solves;
        if (!feasible(next))
          break;
        best = std::move(next);
        best_sigma = sigma;
      }
    } else {
      for (std::size_t sigma = start; sigma <= grid.nx(); ++sigma) {
        auto ev = evaluate_path(resp, s, sigma, flux);
        ++solves;
        if (feasible(ev)) {
          best = std::move(ev);
          best_sigma = sigma;
        }
      }
      if (!best)
        throw FeasibilityError(fmt::format("nonnegativity failed for every sigma (s index {})", s));
    }

    std::vector<double> trace(grid.num_bottom(), 0.0);
    std::copy(best->trace.begin(), best->trace.end(), trace.begin() + std::ptrdiff_t(s));
    CandidateSummary c;
    c.s_idx = s;
    c.sigma_idx = best_sigma;
    c.elastic = 0.5 * mat.alpha * best->dirichlet_energy;
    c.plastic = mat.beta * path_abs_integral(grid, s, trace, state_.trace_prev);
    c.crack = crack_energy(grid, mat, s, state_.s_idx_prev);
    c.total = c.elastic + c.plastic + c.crack;
    return {c, solves};
  }

  void check_invariants(StepRecord& rec, const ScalarField& u, std::span<const double> trace, double eps) const
  {
    const Grid& grid = ctx_.grid;
    rec.min_path_trace = *std::min_element(trace.begin() + std::ptrdiff_t(rec.s_idx),
                                           trace.begin() + std::ptrdiff_t(rec.sigma_idx) + 1);
    rec.min_field = *std::min_element(u.values().begin(), u.values().end());
    rec.min_trace_increment = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < trace.size(); ++j)
      rec.min_trace_increment = std::min(rec.min_trace_increment, trace[j] - state_.trace_prev[j]);

    if (rec.s_idx < state_.s_idx_prev)
      rec.violations.push_back("crack tip moved backwards");
    if (rec.sigma_idx < state_.sigma_idx_prev)
      rec.violations.push_back("cohesive endpoint moved backwards");
    if (rec.min_path_trace < -eps)
      rec.violations.push_back(fmt::format("negative path trace {:.3e}", rec.min_path_trace));
    if (cfg_.tol.full_field_check && rec.min_field < -eps)
      rec.violations.push_back(fmt::format("negative field value {:.3e}", rec.min_field));
    rec.trace_monotonicity_checked = grid.aspect_ratio_bounded();
    if (rec.trace_monotonicity_checked && rec.min_trace_increment < -eps)
      rec.violations.push_back(fmt::format("path trace decreased in time by {:.3e}", -rec.min_trace_increment));
    if (!std::isfinite(rec.total) || !std::isfinite(rec.elastic))
      rec.violations.push_back("non-finite energy");
    for (const auto& c : rec.candidates)
      if (rec.total > c.total + kTieTolerance * std::abs(c.total))
        rec.violations.push_back(fmt::format("candidate s index {} has lower energy", c.s_idx));
  }

  EvolutionConfig cfg_;
  FemContext ctx_;
  EvolutionState state_;
  std::shared_ptr<const PathGreenOperator> op_;
  std::vector<double> last_free_field_;
};

/// Field snapshot at a time level.
struct Snapshot
{
  std::size_t step = 0;
  double t = 0.0;
  ScalarField field;
  std::vector<double> w_top;
  std::size_t s_idx = 0;
  std::size_t sigma_idx = 0;
};

struct RunResult
{
  std::vector<StepRecord> records;
  std::vector<Snapshot> snapshots;
  double initial_elastic = 0.0;

  std::size_t violation_count() const
  {
    std::size_t n = 0;
    for (const auto& r : records)
      n += r.violations.size();
    return n;
  }
};

/// Time step whose t_i is nearest to t.
inline std::size_t nearest_step(const EvolutionConfig& cfg, double t)
{
  const double r = std::round(t * double(cfg.n_steps) / cfg.T);
  return std::size_t(std::clamp(r, 0.0, double(cfg.n_steps)));
}

inline RunResult run(const EvolutionConfig& cfg, std::span<const double> snapshot_times = {},
                     std::shared_ptr<const PathGreenOperator> op = nullptr,
                     const std::function<void(const StepRecord&)>& on_step = {})
{
  Evolution evo(cfg, std::move(op));
  std::vector<std::size_t> wanted;
  for (double t : snapshot_times)
    wanted.push_back(nearest_step(cfg, t));

  RunResult out;
  out.initial_elastic = elastic_energy(evo.state().u_prev, cfg.material.alpha);
  auto snap = [&](std::size_t i) {
    if (std::find(wanted.begin(), wanted.end(), i) == wanted.end())
      return;
    const auto& st = evo.state();
    out.snapshots.push_back(Snapshot{i, cfg.time(i), st.u_prev, profile_values(evo.grid(), cfg, cfg.time(i)),
                                     st.s_idx_prev, st.sigma_idx_prev});
  };
  snap(0);
  out.records.reserve(cfg.n_steps);
  while (!evo.finished()) {
    out.records.push_back(evo.step());
    if (on_step)
      on_step(out.records.back());
    snap(out.records.back().step);
  }
  return out;
}

} // namespace qscrack
