#include "turnpike/ocp_core.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "turnpike/heat_model.hpp"
#include "turnpike/models.hpp"

namespace turnpike {
namespace {

SparseMatrix scalar(double v) { return to_sparse(Matrix::Constant(1, 1, v)); }

ControlSystem scalar_system(double a, double b, Nonlinearity f) {
  return make_system(scalar(a), scalar(b), std::move(f), InnerProduct::identity(1),
                     InnerProduct::identity(1));
}

Vector one(double v) { return Vector::Constant(1, v); }

heat::HeatModel small_heat() {
  heat::HeatConfig cfg;
  cfg.nx = 6;
  cfg.ny = 3;
  return heat::build_heat_system(cfg);
}

GTEST_TEST(EvalRhsTest, ZeroStateAndControl) {
  const auto sys = scalar_system(-1.0, 1.0, neg_cubic(1, 1));
  EXPECT_EQ(eval_rhs(sys, one(0.0), one(0.0))(0), 0.0);
}

GTEST_TEST(EvalRhsTest, ScalarLinearArithmetic) {
  const auto sys = scalar_system(-1.0, 1.0, zero_nonlinearity(1, 1));
  EXPECT_DOUBLE_EQ(eval_rhs(sys, one(2.0), one(1.0))(0), -1.0);
}

GTEST_TEST(EvalRhsTest, HeatAtRest) {
  const auto hm = small_heat();
  const Vector rhs = eval_rhs(hm.system, Vector::Zero(hm.system.n_state),
                              Vector::Zero(hm.system.n_control));
  EXPECT_EQ(rhs.lpNorm<Eigen::Infinity>(), 0.0);
}

GTEST_TEST(EvalRhsTest, DimensionMismatchThrows) {
  const auto sys = scalar_system(-1.0, 1.0, zero_nonlinearity(1, 1));
  EXPECT_THROW(eval_rhs(sys, Vector::Zero(2), one(0.0)), ArgumentError);
  EXPECT_THROW(eval_rhs(sys, one(0.0), Vector::Zero(3)), ArgumentError);
}

GTEST_TEST(LinearizeTest, LinearSystemIsItsOwnLinearization) {
  Matrix a(2, 2);
  a << -1, 2, 0, -3;
  Matrix b(2, 1);
  b << 1, 0.5;
  const auto sys = make_system(to_sparse(a), to_sparse(b), zero_nonlinearity(2, 1),
                               InnerProduct::identity(2), InnerProduct::identity(1));
  const auto lin = linearize_at(sys, Vector::Constant(2, 0.7), one(-0.2));
  EXPECT_TRUE(Matrix(lin.a).isApprox(a, 0.0));
  EXPECT_TRUE(Matrix(lin.b).isApprox(b, 0.0));
}

GTEST_TEST(LinearizeTest, ScalarCubicShiftsByThree) {
  const auto sys = scalar_system(-1.0, 1.0, neg_cubic(1, 1));
  const auto lin = linearize_at(sys, one(1.0), one(0.0));
  EXPECT_DOUBLE_EQ(Matrix(lin.a)(0, 0), -4.0);
}

GTEST_TEST(LinearizeTest, HeatJacobianIsLaplacianMinusCubicTerm) {
  const auto hm = small_heat();
  const int n = hm.system.n_state;
  Vector x_bar(n);
  for (int i = 0; i < n; ++i) x_bar(i) = 0.1 * std::sin(0.7 * i);
  const auto lin = linearize_at(hm.system, x_bar, Vector::Zero(hm.system.n_control));
  Matrix expected = Matrix(hm.system.lin_state_op);
  for (int i = 0; i < n; ++i) expected(i, i) -= 3.0 * x_bar(i) * x_bar(i);
  EXPECT_LE((Matrix(lin.a) - expected).lpNorm<Eigen::Infinity>(), 1e-12);
}

Trajectory constant_trajectory(const Vector& x, const Vector& u, const Vector& lam, int steps,
                               double dt) {
  Trajectory t;
  t.dt = dt;
  t.horizon = steps * dt;
  t.grid = uniform_grid(t.horizon, dt);
  t.states = x.replicate(1, steps + 1);
  t.controls = u.replicate(1, steps + 1);
  t.adjoints = lam.replicate(1, steps + 1);
  return t;
}

GTEST_TEST(RemainderTest, ConstantTrajectoryAtSteadyPairIsZero) {
  const auto hm = small_heat();
  const int n = hm.system.n_state;
  const int m = hm.system.n_control;
  const Vector x_bar = Vector::LinSpaced(n, -0.5, 0.5);
  const Vector u_bar = Vector::LinSpaced(m, 0.1, 0.3);
  const auto traj = constant_trajectory(x_bar, u_bar, Vector::Zero(n), 5, 0.1);
  const auto rem = remainder_series(hm.system, hm.cost, traj, x_bar, u_bar);
  EXPECT_LE(rem.r_f.lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(rem.r_fx_norm.lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(rem.r_fu_norm.lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(rem.r_jx.lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(rem.r_ju.lpNorm<Eigen::Infinity>(), 1e-12);
}

GTEST_TEST(RemainderTest, LinearQuadraticClosedForms) {
  Matrix q(2, 2);
  q << 2, 0.5, 0.5, 1;
  Matrix r = Matrix::Constant(1, 1, 3.0);
  Matrix a(2, 2);
  a << -1, 1, 0, -2;
  const auto sys = make_system(to_sparse(a), to_sparse(Matrix::Ones(2, 1)),
                               zero_nonlinearity(2, 1), InnerProduct::identity(2),
                               InnerProduct::identity(1));
  const auto cost = quadratic_tracking(to_sparse(q), Vector::Ones(2), to_sparse(r), one(0.2));
  Trajectory traj = constant_trajectory(Vector::Zero(2), one(0.0), Vector::Zero(2), 4, 0.25);
  for (int k = 0; k <= 4; ++k) {
    traj.states.col(k) << std::cos(k), std::sin(k);
    traj.controls(0, k) = 0.3 * k;
  }
  const Vector x_bar(Eigen::Vector2d(0.4, -0.1));
  const Vector u_bar = one(0.6);
  const auto rem = remainder_series(sys, cost, traj, x_bar, u_bar);
  for (int k = 0; k <= 4; ++k) {
    EXPECT_EQ(rem.r_f.col(k).norm(), 0.0);
    EXPECT_EQ(rem.r_fx_norm(k), 0.0);
    EXPECT_EQ(rem.r_fu_norm(k), 0.0);
    EXPECT_LE((rem.r_jx.col(k) - q * (traj.x(k) - x_bar)).norm(), 1e-14);
    EXPECT_LE((rem.r_ju.col(k) - r * (traj.u(k) - u_bar)).norm(), 1e-14);
  }
}

GTEST_TEST(RemainderTest, CubicOperatorNormIsLargestDiagonalChange) {
  const auto sys = make_system(to_sparse(-Matrix::Identity(3, 3)), to_sparse(Matrix::Ones(3, 1)),
                               neg_cubic(3, 1), InnerProduct::identity(3),
                               InnerProduct::identity(1));
  const auto cost = quadratic_tracking(to_sparse(Matrix::Identity(3, 3)), Vector::Zero(3),
                                       to_sparse(Matrix::Identity(1, 1)), one(0.0));
  Trajectory traj = constant_trajectory(Vector(Eigen::Vector3d(1.0, -2.0, 0.5)), one(0.0),
                                        Vector::Zero(3), 1, 1.0);
  const auto rem = remainder_series(sys, cost, traj, Vector::Zero(3), one(0.0));
  // f_x = -3 diag(x^2), so the change is diag(-3, -12, -0.75).
  EXPECT_NEAR(rem.r_fx_norm(0), 12.0, 1e-12);
  EXPECT_NEAR(rem.r_f(1, 0), 8.0, 1e-12);
}

// Samples the closed-form extremal of the scalar tracking problem on a fine
// grid. The continuous extremal satisfies the discrete optimality system up to
// the O(dt) truncation of implicit Euler.
Trajectory sampled_extremal(const oracle::LqExtremal& ex, double horizon, double dt) {
  Trajectory t;
  t.dt = dt;
  t.horizon = horizon;
  t.grid = uniform_grid(horizon, dt);
  const int np = static_cast<int>(t.grid.size());
  t.states.resize(1, np);
  t.controls.resize(1, np);
  t.adjoints.resize(1, np);
  for (int k = 0; k < np; ++k) {
    const Vector z = ex.z(t.grid(k));
    t.states(0, k) = z(0);
    t.adjoints(0, k) = z(1);
    t.controls(0, k) = z(1);  // u = u_d + b p / r with u_d = 0, b = r = 1
  }
  t.adjoints(0, np - 1) = 0.0;
  return t;
}

GTEST_TEST(KktResidualTest, AnalyticExtremalOnFineGrid) {
  const Matrix a = Matrix::Constant(1, 1, -1.0);
  const Matrix b = Matrix::Constant(1, 1, 1.0);
  const Matrix q = Matrix::Constant(1, 1, 1.0);
  const Matrix r = Matrix::Constant(1, 1, 1.0);
  const double horizon = 1.0;
  const oracle::LqExtremal ex(a, b, q, r, one(1.0), one(0.0), one(0.0), horizon);
  const auto model = make_model("lq-tracking");

  const auto coarse = kkt_residual(model.system, model.cost, sampled_extremal(ex, horizon, 1e-3));
  const auto fine = kkt_residual(model.system, model.cost, sampled_extremal(ex, horizon, 1e-6));
  EXPECT_LE(fine.dynamics, 1e-6);
  EXPECT_LE(fine.adjoint, 1e-6);
  EXPECT_LE(fine.stationarity, 1e-6);
  // First-order consistency: a thousandfold refinement shrinks the residual
  // by roughly a thousand.
  EXPECT_GT(coarse.dynamics / fine.dynamics, 500.0);
  EXPECT_GT(coarse.adjoint / fine.adjoint, 500.0);
}

GTEST_TEST(KktResidualTest, TerminalViolationIsReported) {
  const auto model = make_model("lq-tracking", {{"x_d", json::array({0.0})}});
  Trajectory t = constant_trajectory(one(0.0), one(0.0), one(0.0), 10, 0.1);
  t.adjoints(0, 10) = 0.37;
  EXPECT_GE(kkt_residual(model.system, model.cost, t).adjoint, 0.37);
}

GTEST_TEST(KktResidualTest, ZeroProblemZeroTrajectory) {
  const auto model = make_model("lq-tracking", {{"x_d", json::array({0.0})}});
  const auto t = constant_trajectory(one(0.0), one(0.0), one(0.0), 10, 0.1);
  const auto res = kkt_residual(model.system, model.cost, t);
  EXPECT_EQ(res.dynamics, 0.0);
  EXPECT_EQ(res.adjoint, 0.0);
  EXPECT_EQ(res.stationarity, 0.0);
}

GTEST_TEST(UniformGridTest, EndpointsAndDivisibility) {
  const Vector g = uniform_grid(10.0, 0.1);
  EXPECT_EQ(g.size(), 101);
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(100), 10.0);
  EXPECT_THROW(uniform_grid(1.0, 0.3), ArgumentError);
  EXPECT_THROW(uniform_grid(-1.0, 0.1), ArgumentError);
}

GTEST_TEST(DerivativeCheckTest, SuppliedDerivativesMatchDifferences) {
  const auto hm = small_heat();
  const auto check = check_derivatives(hm.system, hm.cost, 5, 7u, 0.5);
  EXPECT_LE(check.jac_x, 1e-6);
  EXPECT_LE(check.jac_u, 1e-6);
  EXPECT_LE(check.grad_x, 1e-6);
  EXPECT_LE(check.grad_u, 1e-6);
}

GTEST_TEST(InnerProductTest, RieszInvertsTheWeight) {
  const auto hm = small_heat();
  const InnerProduct& h1 = hm.weights.h1;
  const Vector v = Vector::LinSpaced(hm.system.n_state, -1.0, 2.0);
  EXPECT_LE((h1.riesz(h1.apply(v)) - v).norm(), 1e-10 * v.norm());
  EXPECT_NEAR(h1.norm(v) * h1.norm(v), v.dot(h1.apply(v)), 1e-10);
}

GTEST_TEST(InnerProductTest, RejectsNonSymmetricWeight) {
  Matrix w(2, 2);
  w << 1, 0.5, 0, 1;
  EXPECT_THROW(InnerProduct(to_sparse(w)), ArgumentError);
}

}  // namespace
}  // namespace turnpike
