#include "turnpike/diagnostics.hpp"

#include <gtest/gtest.h>

#include "turnpike/dynamic_solver.hpp"
#include "turnpike/models.hpp"

namespace turnpike {
namespace {

Vector tent(const Vector& grid, double horizon) {
  return (grid.array() - 0.5 * horizon).abs().matrix();
}

Trajectory steady_trajectory(const SteadyOptimum& s, double horizon, double dt) {
  Trajectory t;
  t.dt = dt;
  t.horizon = horizon;
  t.grid = uniform_grid(horizon, dt);
  const int np = static_cast<int>(t.grid.size());
  t.states = s.x_bar.replicate(1, np);
  t.controls = s.u_bar.replicate(1, np);
  t.adjoints = s.lambda_bar.replicate(1, np);
  return t;
}

GTEST_TEST(DeviationSeriesTest, SteadyTrajectoryIsZero) {
  const auto model = make_model("lq-tracking");
  const auto s = solve_steady(model.system, model.cost);
  const auto series = deviation_series(steady_trajectory(s, 5.0, 0.5), s, model.norms);
  EXPECT_EQ(series.d.norm(), 0.0);
  EXPECT_EQ(series.d_adj.norm(), 0.0);
}

GTEST_TEST(DeviationSeriesTest, SinglePointPerturbationInTheWeightedNorm) {
  const auto model = make_model("heat2d", {{"nx", 6}, {"ny", 3}});
  const int n = model.system.n_state;
  SteadyOptimum s;
  s.x_bar = Vector::LinSpaced(n, 0.0, 1.0);
  s.u_bar = Vector::Zero(model.system.n_control);
  s.lambda_bar = Vector::Zero(n);
  Trajectory t = steady_trajectory(s, 1.0, 0.5);
  const Vector v = Vector::LinSpaced(n, -0.3, 0.2);
  t.states.col(1) += v;
  const auto series = deviation_series(t, s, model.norms);
  EXPECT_EQ(series.d(0), 0.0);
  EXPECT_NEAR(series.d(1), model.norms.x.norm(v), 1e-14);
  EXPECT_EQ(series.d(2), 0.0);
}

GTEST_TEST(LargestIntervalTest, ZeroSeriesCoversTheHorizon) {
  const Vector grid = uniform_grid(10.0, 0.5);
  const auto f = largest_interval(grid, Vector::Zero(grid.size()), 1e-3);
  EXPECT_EQ(f.t1, 0.0);
  EXPECT_EQ(f.t2, 10.0);
  EXPECT_EQ(f.length, 10.0);
  EXPECT_EQ(f.fraction_of_horizon, 1.0);
}

GTEST_TEST(LargestIntervalTest, TentSeries) {
  const Vector grid = uniform_grid(10.0, 0.01);
  const auto f = largest_interval(grid, tent(grid, 10.0), 1.0);
  EXPECT_NEAR(f.t1, 4.0, 1e-12);
  EXPECT_NEAR(f.t2, 6.0, 1e-12);
  EXPECT_NEAR(f.length, 2.0, 1e-12);
}

GTEST_TEST(LargestIntervalTest, AlwaysAboveIsEmpty) {
  const Vector grid = uniform_grid(10.0, 0.5);
  const auto f = largest_interval(grid, Vector::Constant(grid.size(), 2.0), 1.0);
  EXPECT_TRUE(f.empty());
  EXPECT_EQ(f.length, 0.0);
}

GTEST_TEST(LargestIntervalTest, TiesGoToTheEarliestRun) {
  Vector grid(7), v(7);
  grid << 0, 1, 2, 3, 4, 5, 6;
  v << 0, 0, 5, 5, 5, 0, 0;
  const auto f = largest_interval(grid, v, 1.0);
  EXPECT_EQ(f.first_index, 0);
  EXPECT_EQ(f.last_index, 1);
}

GTEST_TEST(LargestIntervalTest, RejectsNonPositiveEpsilon) {
  const Vector grid = uniform_grid(1.0, 0.5);
  EXPECT_THROW(largest_interval(grid, grid, 0.0), ArgumentError);
}

GTEST_TEST(ExceedanceTest, ZeroSeries) {
  const Vector grid = uniform_grid(10.0, 0.5);
  EXPECT_EQ(exceedance_measure(grid, Vector::Zero(grid.size()), 0.1), 0.0);
}

GTEST_TEST(ExceedanceTest, TentSeriesIsTheComplementOfTheInterval) {
  // Coarse grid on purpose: linear crossings make the answer exact anyway.
  const Vector grid = uniform_grid(10.0, 0.3 + 1.0 / 30.0);
  EXPECT_NEAR(exceedance_measure(grid, tent(grid, 10.0), 1.0), 8.0, 1e-12);
  EXPECT_NEAR(sublevel_measure(grid, tent(grid, 10.0), 1.0), 2.0, 1e-12);
}

GTEST_TEST(ExpFitTest, ExactModelData) {
  const double horizon = 20.0;
  const Vector grid = uniform_grid(horizon, 0.05);
  Vector d(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    d(k) = 2.0 * (std::exp(-0.5 * grid(k)) + std::exp(-0.5 * (horizon - grid(k))));
  }
  const auto fit = fit_exponential(grid, d, horizon);
  EXPECT_NEAR(fit.c, 2.0, 2e-6);
  EXPECT_NEAR(fit.mu, 0.5, 5e-7);
  EXPECT_LE(fit.residual, 1e-8);
}

GTEST_TEST(ExpFitTest, FlatSeriesHasNoRate) {
  const Vector grid = uniform_grid(10.0, 0.1);
  const Vector d = Vector::Constant(grid.size(), 0.01);
  try {
    const auto fit = fit_exponential(grid, d, 10.0);
    EXPECT_LT(fit.mu, 1e-3);
  } catch (const FitUnavailable&) {
    SUCCEED();
  }
}

GTEST_TEST(ExpFitTest, TooFewSamples) {
  const Vector grid = uniform_grid(1.0, 0.2);
  EXPECT_THROW(fit_exponential(grid, Vector::Ones(grid.size()), 1.0), FitUnavailable);
}

GTEST_TEST(ExpFitTest, LqDecayRateIsTheHamiltonianEigenvalue) {
  const auto model = make_model("lq-tracking");
  const auto s = solve_steady(model.system, model.cost);
  SolveOptions opts;
  opts.dt = 0.01;
  opts.grad_tol = 1e-9;
  const auto traj = solve_ocp(model.system, model.cost, model.x0, 10.0, opts, s);
  const auto series = deviation_series(traj, s, model.norms);
  const auto fit = fit_exponential(series.grid, series.d, 10.0);
  EXPECT_NEAR(fit.mu / std::sqrt(2.0), 1.0, 0.10);
}

struct LqAudit {
  AuditSeries series;
  IntervalFinding interval;
  SemigroupBound bound;
  ObservabilityCertificate cert;
  double tol;
};

LqAudit lq_audit(double horizon) {
  const auto model = make_model("lq-tracking");
  const auto s = solve_steady(model.system, model.cost);
  SolveOptions opts;
  opts.dt = 0.01;
  opts.grad_tol = 1e-8;
  const auto traj = solve_ocp(model.system, model.cost, model.x0, horizon, opts, s);
  const auto dev = deviation_series(traj, s, model.norms);
  const auto rem = remainder_series(model.system, model.cost, traj, s);
  LqAudit out;
  out.series = audit_series(model.system, traj, s, rem);
  out.interval = largest_interval(dev.grid, dev.d, 1e-2);
  out.bound = semigroup_bound(-Matrix::Identity(1, 1));
  out.cert = observability_constant(-Matrix::Identity(1, 1), Matrix::Ones(1, 1), 1.0);
  out.tol = opts.grad_tol;
  return out;
}

GTEST_TEST(ExpStabAuditTest, SteadyTrajectoryNeedsNoConstant) {
  const auto model = make_model("lq-tracking");
  const auto s = solve_steady(model.system, model.cost);
  const auto traj = steady_trajectory(s, 10.0, 0.1);
  const auto rem = remainder_series(model.system, model.cost, traj, s);
  const auto series = audit_series(model.system, traj, s, rem);
  const auto interval = largest_interval(traj.grid, Vector::Zero(traj.grid.size()), 1e-2);
  const auto a = audit_expstab_bound(series, semigroup_bound(-Matrix::Identity(1, 1)), interval);
  EXPECT_EQ(a.c, 0.0);
  EXPECT_EQ(a.rho, 0.0);
  const auto cert = observability_constant(-Matrix::Identity(1, 1), Matrix::Ones(1, 1), 1.0);
  EXPECT_EQ(audit_excont_bound(cert, series, interval).c, 0.0);
}

GTEST_TEST(ExpStabAuditTest, LqConstantsStableAcrossHorizons) {
  std::vector<double> cs;
  for (double horizon : {10.0, 20.0, 40.0}) {
    const auto a = lq_audit(horizon);
    const auto audit = audit_expstab_bound(a.series, a.bound, a.interval, nullptr, std::nullopt,
                                           a.tol);
    ASSERT_TRUE(std::isfinite(audit.c));
    EXPECT_LE(audit.max_violation, 1e-12);
    cs.push_back(audit.c);
  }
  const double hi = *std::max_element(cs.begin(), cs.end());
  const double lo = *std::min_element(cs.begin(), cs.end());
  EXPECT_GT(lo, 0.0);
  EXPECT_LE(hi / lo, 2.0);
}

GTEST_TEST(ExpStabAuditTest, InjectedForcingInflatesTheBoundByAtMostTwoCSigma) {
  const auto a = lq_audit(20.0);
  const auto base = audit_expstab_bound(a.series, a.bound, a.interval, nullptr, std::nullopt,
                                        a.tol);
  const Vector sigma = Vector::Constant(a.series.grid.size(), 3e-3);
  const auto forced =
      audit_expstab_bound(a.series, a.bound, a.interval, &sigma, base.c, a.tol);
  EXPECT_GE(forced.bound, base.bound);
  EXPECT_LE(forced.bound - base.bound, 2.0 * base.c * 3e-3 + 1e-15);
}

GTEST_TEST(ExpStabAuditTest, UnusableInputs) {
  const auto a = lq_audit(10.0);
  EXPECT_THROW(audit_expstab_bound(a.series, SemigroupBound{}, a.interval), AuditUnavailable);
  EXPECT_THROW(audit_expstab_bound(a.series, a.bound, IntervalFinding{}), AuditUnavailable);
}

GTEST_TEST(ExContAuditTest, LqConstantsStableAcrossHorizons) {
  std::vector<double> cs;
  for (double horizon : {10.0, 20.0, 40.0}) {
    const auto a = lq_audit(horizon);
    const auto audit =
        audit_excont_bound(a.cert, a.series, a.interval, nullptr, nullptr, a.tol);
    ASSERT_TRUE(std::isfinite(audit.c));
    cs.push_back(audit.c);
  }
  const double hi = *std::max_element(cs.begin(), cs.end());
  const double lo = *std::min_element(cs.begin(), cs.end());
  EXPECT_GT(lo, 0.0);
  EXPECT_LE(hi / lo, 2.0);
}

GTEST_TEST(ExContAuditTest, InjectedSeriesEnterTheIntegrands) {
  const auto a = lq_audit(10.0);
  const auto& s = a.series;
  const int np = static_cast<int>(s.grid.size());
  Matrix sigma(1, np), rho_t(1, np);
  for (int k = 0; k < np; ++k) {
    sigma(0, k) = 1e-3 * std::sin(s.grid(k));
    rho_t(0, k) = 2e-3 * std::cos(0.5 * s.grid(k));
  }
  const auto audit = audit_excont_bound(a.cert, s, a.interval, &sigma, &rho_t);

  // Direct recomputation. The model is linear, so only r_J and the injected
  // terms contribute; t_c = 1 is a whole number of steps.
  const double dt = s.grid(1) - s.grid(0);
  const int w = static_cast<int>(std::lround(1.0 / dt));
  Vector g(np);
  for (int k = 0; k < np; ++k) {
    const double uc = s.r_ju(0, k) + sigma(0, k);
    const double yc = s.r_jx(0, k) + rho_t(0, k);
    g(k) = uc * uc + yc * yc;
  }
  double c = 0.0;
  for (int k = a.interval.first_index + w; k <= a.interval.last_index; ++k) {
    double integral = 0.0;
    for (int j = k - w; j < k; ++j) integral += 0.5 * dt * (g(j) + g(j + 1));
    const double lhs = s.dlam_norm(k) * s.dlam_norm(k);
    if (lhs > 0.0) c = std::max(c, lhs / integral);
  }
  EXPECT_NEAR(audit.c, c, 1e-9 * c);
  EXPECT_NEAR(audit.s1, a.interval.t1 + 1.0, 1e-12);
  EXPECT_NEAR(audit.s2, a.interval.t2, 1e-12);
}

GTEST_TEST(ExContAuditTest, UncontrollablePairIsUnavailable) {
  const auto a = lq_audit(10.0);
  ObservabilityCertificate none;
  none.t_c = 1.0;
  EXPECT_THROW(audit_excont_bound(none, a.series, a.interval), AuditUnavailable);
}

GTEST_TEST(WNormTest, ZeroAdjoint) {
  const Vector grid = uniform_grid(1.0, 0.1);
  const auto w = w_norm(Matrix::Zero(1, grid.size()), grid, to_sparse(-Matrix::Identity(1, 1)),
                        0, 10, InnerProduct::identity(1));
  EXPECT_EQ(w.w, 0.0);
}

GTEST_TEST(WNormTest, DecayingEigenvector) {
  // lambda(t) = e^{-t} v with A* v = -v: the integrand is 3 e^{-2t}.
  const Vector grid = uniform_grid(1.0, 1e-3);
  Matrix a_star(2, 2);
  a_star << -1, 0, 0, -4;
  Matrix lam(2, grid.size());
  for (int k = 0; k < grid.size(); ++k) lam.col(k) << std::exp(-grid(k)), 0.0;
  const auto w = w_norm(lam, grid, to_sparse(a_star), 0, static_cast<int>(grid.size()) - 1,
                        InnerProduct::identity(2));
  EXPECT_NEAR(w.w * w.w, 1.5 * (1.0 - std::exp(-2.0)), 1e-3);
}

GTEST_TEST(AdjointBoundTest, SteadyAdjointHasZeroRho) {
  const Vector grid = uniform_grid(5.0, 0.5);
  std::vector<AdjointSweepMember> sweep;
  for (double horizon : {5.0, 10.0}) {
    const Vector g = uniform_grid(horizon, 0.5);
    const Vector z = Vector::Zero(g.size());
    sweep.push_back({horizon, g, z, largest_interval(g, z, 0.1)});
  }
  const auto audit = audit_adjoint_bound(sweep);
  EXPECT_EQ(audit.rho[0], 0.0);
  EXPECT_EQ(audit.rho[1], 0.0);
  EXPECT_TRUE(audit.bounded);
}

GTEST_TEST(AdjointBoundTest, GrowthIsFlagged) {
  const Vector g = uniform_grid(4.0, 1.0);
  const Vector d = Vector::Zero(g.size());
  const auto interval = largest_interval(g, d, 0.1);
  std::vector<AdjointSweepMember> sweep{{4.0, g, Vector::Constant(5, 1.0), interval},
                                        {8.0, g, Vector::Constant(5, 1.2), interval}};
  EXPECT_FALSE(audit_adjoint_bound(sweep).bounded);
  sweep[1].dlam_norm.setConstant(1.05);
  EXPECT_TRUE(audit_adjoint_bound(sweep).bounded);
}

}  // namespace
}  // namespace turnpike
