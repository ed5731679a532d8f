#include <gtest/gtest.h>

#include <qscrack/cohesive.hpp>
#include <qscrack/evolution.hpp>
#include <qscrack/path_operator.hpp>
#include <qscrack/testing/dense_oracle.hpp>
#include <qscrack/validation.hpp>

using namespace qscrack;
namespace dense = qscrack::testing;

namespace {

FemContext make_ctx(std::size_t nx, std::size_t ny, double a = 2.0, double b = 0.5)
{
  return FemContext{Grid({a, b, nx, ny, a / double(nx)})};
}

Material material(double beta)
{
  Material m;
  m.beta = beta;
  return m;
}

} // namespace

TEST(Cohesive, EmptyZoneMatchesDenseOracleAndIsPositiveBehindTip)
{
  const auto ctx = make_ctx(8, 4);
  const std::vector<double> w(9, 0.1);
  for (std::size_t s : {2u, 5u}) {
    const auto aux = solve_aux(ctx, w, s, s, 20.0, 100.0, 1e-14);
    const auto ref = dense::dense_aux_solution({2.0, 0.5, 8, 4}, w, s, s, 0.0);
    for (std::size_t p = 0; p < ref.size(); ++p)
      EXPECT_NEAR(aux.field[p], ref[p], 1e-12);
    const auto trace = bottom_trace(aux.field);
    for (std::size_t j = 0; j < s; ++j)
      EXPECT_GT(trace[j], 0.0);
    for (std::size_t j = s; j <= 8; ++j)
      EXPECT_EQ(trace[j], 0.0);
  }
}

TEST(Cohesive, CohesiveZoneMatchesDenseOracle)
{
  const auto ctx = make_ctx(8, 4);
  std::vector<double> w(9);
  for (std::size_t j = 0; j <= 8; ++j)
    w[j] = 0.1 - 0.01 * double(j);
  const auto aux = solve_aux(ctx, w, 2, 6, 20.0, 100.0, 1e-14);
  const auto ref = dense::dense_aux_solution({2.0, 0.5, 8, 4}, w, 2, 6, 0.2);
  for (std::size_t p = 0; p < ref.size(); ++p)
    EXPECT_NEAR(aux.field[p], ref[p], 1e-12);
  for (std::size_t j = 6; j <= 8; ++j)
    EXPECT_EQ(aux.field.at(j, 0), 0.0);
  for (std::size_t j = 0; j <= 8; ++j)
    EXPECT_EQ(aux.field.at(j, 4), w[j]);
}

TEST(Cohesive, ZeroDataGivesZeroField)
{
  const auto ctx = make_ctx(8, 4);
  const std::vector<double> w(9, 0.0);
  const auto aux = solve_aux(ctx, w, 3, 3, 20.0, 100.0, 1e-10);
  for (double v : aux.field.values())
    EXPECT_EQ(v, 0.0);
}

TEST(Cohesive, LinearInBoundaryData)
{
  const auto ctx = make_ctx(16, 4);
  std::vector<double> w(17), w2(17);
  for (std::size_t j = 0; j <= 16; ++j) {
    w[j] = boundary_profile(ctx.grid.x(j), 0.3, 0.1, 0.2, 0.125);
    w2[j] = 2.0 * w[j];
  }
  const auto u = solve_aux(ctx, w, 3, 7, 0.0, 100.0, 1e-13);
  const auto u2 = solve_aux(ctx, w2, 3, 7, 0.0, 100.0, 1e-13);
  for (std::size_t p = 0; p < u.field.size(); ++p)
    EXPECT_NEAR(u2.field[p], 2.0 * u.field[p], 1e-12);
}

TEST(Cohesive, SolveAuxRejectsBadIndices)
{
  const auto ctx = make_ctx(8, 4);
  const std::vector<double> w(9, 0.1);
  EXPECT_THROW(solve_aux(ctx, w, 5, 4, 1.0, 1.0, 1e-10), Error);
  EXPECT_THROW(solve_aux(ctx, w, 5, 9, 1.0, 1.0, 1e-10), Error);
}

TEST(Cohesive, SmallYieldTractionOpensWholePath)
{
  const auto ctx = make_ctx(20, 10, 2.0, 1.0);
  const std::vector<double> w(21, 0.1);
  const auto res = find_sigma(ctx, w, 4, 4, material(1e-4), Tolerances{});
  EXPECT_EQ(res.sigma_idx, 20u);
  EXPECT_EQ(res.aux.sigma_idx, 20u);
  EXPECT_GE(res.aux.min_trace_value, 0.0);
}

TEST(Cohesive, HugeYieldTractionKeepsZoneEmpty)
{
  const auto ctx = make_ctx(20, 10, 2.0, 1.0);
  std::vector<double> w(21);
  for (std::size_t j = 0; j <= 20; ++j)
    w[j] = boundary_profile(ctx.grid.x(j), 0.0, 0.1, 0.2, 0.1);
  for (auto scan : {SigmaScan::Incremental, SigmaScan::Exhaustive}) {
    const auto res = find_sigma(ctx, w, 1, 1, material(1e4), Tolerances{}, scan);
    EXPECT_EQ(res.sigma_idx, 1u);
  }
}

TEST(Cohesive, SearchStartsAtLowerBound)
{
  const auto ctx = make_ctx(20, 10, 2.0, 1.0);
  const std::vector<double> w(21, 0.1);
  const auto res = find_sigma(ctx, w, 2, 9, material(1.0), Tolerances{});
  EXPECT_GE(res.sigma_idx, 9u);
}

TEST(Cohesive, InfeasibleEmptyZoneRaises)
{
  // sigma_lower far beyond s with a huge cohesive load: the trace on [s, sigma0] is negative
  const auto ctx = make_ctx(20, 10, 2.0, 1.0);
  const std::vector<double> w(21, 0.01);
  EXPECT_THROW(find_sigma(ctx, w, 1, 15, material(1e4), Tolerances{}), FeasibilityError);
  EXPECT_THROW(find_sigma(ctx, w, 1, 15, material(1e4), Tolerances{}, SigmaScan::Exhaustive), FeasibilityError);
}

TEST(Cohesive, CrackTerm)
{
  const Grid g({2.0, 0.5, 200, 50, 0.1});
  Material m;
  m.gamma = 0.5;
  EXPECT_NEAR(crack_energy(g, m, 15, 10), 0.0125, 1e-15);
  EXPECT_EQ(crack_energy(g, m, 10, 10), 0.0);
}

TEST(Cohesive, RepeatedDataReproducesPreviousMinimizer)
{
  EvolutionConfig cfg;
  cfg.grid = {2.0, 0.5, 40, 10, 0.1};
  cfg.n_steps = 50;
  cfg.solver = CandidateSolver::Direct;
  Evolution evo(cfg);
  for (int i = 0; i < 12; ++i)
    evo.step();
  const auto& st = evo.state();
  const auto w = evo.current_profile();
  const double prev_elastic = elastic_energy(st.u_prev, cfg.material.alpha);

  const auto same = solve_candidate(evo.context(), st, w, st.s_idx_prev, cfg.material, cfg.tol);
  EXPECT_NEAR(same.plastic, 0.0, 1e-9);
  EXPECT_EQ(same.crack, 0.0);
  EXPECT_EQ(same.sigma_idx, st.sigma_idx_prev);
  EXPECT_NEAR(same.total, prev_elastic, 1e-9 * prev_elastic);
  for (std::size_t p = 0; p < st.u_prev.size(); ++p)
    EXPECT_NEAR((*same.field)[p], st.u_prev[p], 1e-9);

  std::vector<CandidateSummary> all;
  for (std::size_t s = st.s_idx_prev; s <= evo.grid().nx(); ++s) {
    const auto c = solve_candidate(evo.context(), st, w, s, cfg.material, cfg.tol);
    EXPECT_GE(c.plastic, 0.0);
    EXPECT_NEAR(c.total, c.elastic + c.plastic + c.crack, 1e-15 * std::abs(c.total));
    all.push_back({c.s_idx, c.sigma_idx, c.elastic, c.plastic, c.crack, c.total});
  }
  EXPECT_EQ(all[select_minimizer(all)].s_idx, st.s_idx_prev);
}

TEST(Cohesive, CandidateBelowPreviousTipRejected)
{
  EvolutionConfig cfg;
  cfg.grid = {2.0, 0.5, 40, 10, 0.1};
  cfg.solver = CandidateSolver::Direct;
  Evolution evo(cfg);
  const auto w = evo.current_profile();
  EXPECT_THROW(solve_candidate(evo.context(), evo.state(), w, 1, cfg.material, cfg.tol), Error);
}

TEST(Cohesive, ScanStrategiesAgree)
{
  const auto r = check_sigma_scans(50, 2, 20, 10);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Cohesive, ComparisonPrinciple)
{
  const auto r = check_comparison_principle(20);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Cohesive, FullFieldCheckIsAtLeastAsStrict)
{
  const auto ctx = make_ctx(20, 10, 2.0, 1.0);
  std::vector<double> w(21);
  for (std::size_t j = 0; j <= 20; ++j)
    w[j] = boundary_profile(ctx.grid.x(j), 0.5, 0.1, 0.2, 0.1);
  Tolerances trace_only, full;
  full.full_field_check = true;
  for (double beta : {5.0, 20.0, 80.0}) {
    const auto a = find_sigma(ctx, w, 3, 3, material(beta), trace_only);
    const auto b = find_sigma(ctx, w, 3, 3, material(beta), full);
    EXPECT_LE(b.sigma_idx, a.sigma_idx);
  }
}

TEST(PathOperator, ReducedTraceMatchesDirectSolve)
{
  const auto ctx = make_ctx(24, 6);
  auto op = std::make_shared<const PathGreenOperator>(ctx, 1e-13);
  std::vector<double> w(25);
  for (std::size_t j = 0; j <= 24; ++j)
    w[j] = boundary_profile(ctx.grid.x(j), 0.4, 0.1, 0.2, 0.1);
  const PathResponse resp(ctx, op, w, 1e-13);
  const double flux = 0.2;
  for (std::size_t s = 1; s <= 24; s += 3)
    for (std::size_t sigma = s; sigma <= 24; sigma += 4) {
      const auto ev = evaluate_path(resp, s, sigma, flux, true);
      const auto aux = solve_aux(ctx, w, s, sigma, 20.0, 100.0, 1e-13);
      const auto trace = bottom_trace(aux.field);
      for (std::size_t j = 0; j <= 24; ++j)
        EXPECT_NEAR(ev.trace[j], trace[j], 1e-10) << "s=" << s << " sigma=" << sigma << " j=" << j;
      EXPECT_NEAR(ev.dirichlet_energy, dirichlet_integral(ctx.grid, aux.field.values()), 1e-10);
    }
}

TEST(PathOperator, SolverRoutesAgreeOnSmallEvolution)
{
  EvolutionConfig cfg;
  const auto r = check_solver_routes(cfg);
  EXPECT_TRUE(r.passed) << r.detail;
}
