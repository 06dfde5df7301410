#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "turnpike/linalg.hpp"

namespace turnpike {

/// Second derivatives of a scalar function of (x, u), split into blocks.
struct SecondOrder {
  SparseMatrix xx;  // n x n
  SparseMatrix xu;  // n x m, d^2 / dx du
  SparseMatrix uu;  // m x m
};

/// The nonlinear part f(x, u) of the dynamics together with its Jacobians.
///
/// `adjoint_hessian(x, u, nu)` returns the second derivatives of nu^T f(x, u).
/// It is optional; the steady solver falls back to differencing `jac_x`/`jac_u`.
struct Nonlinearity {
  std::string kind = "none";
  double coefficient = 0.0;
  std::function<Vector(const Vector&, const Vector&)> value;
  std::function<SparseMatrix(const Vector&, const Vector&)> jac_x;
  std::function<SparseMatrix(const Vector&, const Vector&)> jac_u;
  std::function<SecondOrder(const Vector&, const Vector&, const Vector&)> adjoint_hessian;
};

inline Nonlinearity zero_nonlinearity(int n, int m) {
  Nonlinearity f;
  f.kind = "none";
  f.value = [n](const Vector&, const Vector&) { return Vector::Zero(n).eval(); };
  f.jac_x = [n](const Vector&, const Vector&) { return SparseMatrix(n, n); };
  f.jac_u = [n, m](const Vector&, const Vector&) { return SparseMatrix(n, m); };
  f.adjoint_hessian = [n, m](const Vector&, const Vector&, const Vector&) {
    return SecondOrder{SparseMatrix(n, n), SparseMatrix(n, m), SparseMatrix(m, m)};
  };
  return f;
}

/// f(x) = -c x^3 entrywise, independent of u.
inline Nonlinearity neg_cubic(int n, int m, double c = 1.0) {
  Nonlinearity f;
  f.kind = "neg_cubic";
  f.coefficient = c;
  f.value = [c](const Vector& x, const Vector&) {
    return Vector(-c * x.array().cube());
  };
  f.jac_x = [c](const Vector& x, const Vector&) {
    return sparse_diagonal(-3.0 * c * x.array().square().matrix());
  };
  f.jac_u = [n, m](const Vector&, const Vector&) { return SparseMatrix(n, m); };
  f.adjoint_hessian = [c, n, m](const Vector& x, const Vector&, const Vector& nu) {
    return SecondOrder{sparse_diagonal(-6.0 * c * x.cwiseProduct(nu)), SparseMatrix(n, m),
                       SparseMatrix(m, m)};
  };
  return f;
}

inline Nonlinearity make_nonlinearity(const std::string& kind, int n, int m, double c) {
  if (kind == "none") return zero_nonlinearity(n, m);
  if (kind == "neg_cubic") return neg_cubic(n, m, c);
  throw ArgumentError("unknown nonlinearity kind '" + kind + "'");
}

/// Finite-dimensional realization of x' = Ax + Bu + f(x, u).
struct ControlSystem {
  int n_state = 0;
  int n_control = 0;
  SparseMatrix lin_state_op;  // n x n
  SparseMatrix control_op;    // n x m
  Nonlinearity nonlinearity;
  InnerProduct state_inner;
  InnerProduct control_inner;
  std::optional<InnerProduct> h1_inner;

  Vector f(const Vector& x, const Vector& u) const { return nonlinearity.value(x, u); }
  SparseMatrix jac_x(const Vector& x, const Vector& u) const { return nonlinearity.jac_x(x, u); }
  SparseMatrix jac_u(const Vector& x, const Vector& u) const { return nonlinearity.jac_u(x, u); }

  /// H1-type weight when available, else the state weight.
  const InnerProduct& h1_or_state() const { return h1_inner ? *h1_inner : state_inner; }

  void validate() const {
    require(n_state > 0 && n_control > 0, "system dimensions must be positive");
    require(lin_state_op.rows() == n_state && lin_state_op.cols() == n_state,
            "lin_state_op must be n x n");
    require(control_op.rows() == n_state && control_op.cols() == n_control,
            "control_op must be n x m");
    require(state_inner.dim() == n_state, "state_inner must be n x n");
    require(control_inner.dim() == n_control, "control_inner must be m x m");
    require(!h1_inner || h1_inner->dim() == n_state, "h1_inner must be n x n");
    require(static_cast<bool>(nonlinearity.value) && static_cast<bool>(nonlinearity.jac_x) &&
                static_cast<bool>(nonlinearity.jac_u),
            "nonlinearity callbacks missing");
  }
};

inline ControlSystem make_system(SparseMatrix a, SparseMatrix b, Nonlinearity f,
                                 InnerProduct state_inner, InnerProduct control_inner,
                                 std::optional<InnerProduct> h1 = std::nullopt) {
  ControlSystem sys;
  sys.n_state = static_cast<int>(a.rows());
  sys.n_control = static_cast<int>(b.cols());
  sys.lin_state_op = std::move(a);
  sys.control_op = std::move(b);
  sys.nonlinearity = std::move(f);
  sys.state_inner = std::move(state_inner);
  sys.control_inner = std::move(control_inner);
  sys.h1_inner = std::move(h1);
  sys.validate();
  return sys;
}

/// J(x, u) = 1/2 ||x - x_d||_Q^2 + 1/2 ||u - u_d||_R^2.
struct QuadraticTracking {
  SparseMatrix q;
  Vector x_d;
  SparseMatrix r;
  Vector u_d;
};

/// Running cost with Euclidean gradients. `hessian` is optional.
struct CostFunctional {
  std::function<double(const Vector&, const Vector&)> value;
  std::function<Vector(const Vector&, const Vector&)> grad_x;
  std::function<Vector(const Vector&, const Vector&)> grad_u;
  std::function<SecondOrder(const Vector&, const Vector&)> hessian;
  std::optional<QuadraticTracking> quadratic;
};

inline CostFunctional quadratic_tracking(SparseMatrix q, Vector x_d, SparseMatrix r, Vector u_d) {
  require(q.rows() == q.cols() && q.rows() == x_d.size(), "Q and x_d dimensions disagree");
  require(r.rows() == r.cols() && r.rows() == u_d.size(), "R and u_d dimensions disagree");
  QuadraticTracking data{std::move(q), std::move(x_d), std::move(r), std::move(u_d)};
  CostFunctional cost;
  cost.value = [data](const Vector& x, const Vector& u) {
    const Vector dx = x - data.x_d;
    const Vector du = u - data.u_d;
    return 0.5 * dx.dot(data.q * dx) + 0.5 * du.dot(data.r * du);
  };
  cost.grad_x = [data](const Vector& x, const Vector&) {
    return Vector(data.q * (x - data.x_d));
  };
  cost.grad_u = [data](const Vector&, const Vector& u) {
    return Vector(data.r * (u - data.u_d));
  };
  cost.hessian = [data](const Vector&, const Vector&) {
    return SecondOrder{data.q, SparseMatrix(data.q.rows(), data.r.rows()), data.r};
  };
  cost.quadratic = std::move(data);
  return cost;
}

struct SolverInfo {
  int iterations = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  bool converged = false;
};

/// Samples on a uniform grid t_k = k dt, k = 0..N. Column k of each matrix is
/// the value at t_k. Controls and adjoints with index k < N belong to the
/// interval [t_k, t_{k+1}]; controls(N) repeats controls(N-1) and adjoints(N)
/// is the terminal value.
struct Trajectory {
  Vector grid;
  Matrix states;    // n x (N+1)
  Matrix controls;  // m x (N+1)
  Matrix adjoints;  // n x (N+1)
  double horizon = 0.0;
  double dt = 0.0;
  SolverInfo solver_info;

  int steps() const { return static_cast<int>(grid.size()) - 1; }
  Vector x(int k) const { return states.col(k); }
  Vector u(int k) const { return controls.col(k); }
  Vector lambda(int k) const { return adjoints.col(k); }
};

/// Uniform grid 0, dt, ..., T. `dt` must divide `T` to within 1e-12.
inline Vector uniform_grid(double horizon, double dt) {
  require(horizon > 0.0 && dt > 0.0, "horizon and dt must be positive");
  const double steps = horizon / dt;
  const long n = std::lround(steps);
  require(n >= 1 && std::abs(n * dt - horizon) <= 1e-12 * std::max(1.0, horizon),
          "dt must divide the horizon");
  Vector grid(n + 1);
  for (long k = 0; k <= n; ++k) grid(k) = static_cast<double>(k) * dt;
  grid(n) = horizon;
  return grid;
}

struct RemainderSeries {
  Vector grid;
  Matrix r_f;          // n x (N+1)
  Vector r_fx_norm;    // ||f_x(x,u) - f_x(x_bar,u_bar)||_{L(X,Y)}
  Vector r_fu_norm;    // ||f_u(x,u) - f_u(x_bar,u_bar)||_{L(U,Y)}
  Matrix r_jx;         // n x (N+1), Euclidean gradient differences
  Matrix r_ju;         // m x (N+1)
  std::vector<SparseMatrix> r_fx;  // the difference matrices themselves
  std::vector<SparseMatrix> r_fu;
};

inline Vector eval_rhs(const ControlSystem& sys, const Vector& x, const Vector& u) {
  require(x.size() == sys.n_state, "eval_rhs: state dimension mismatch");
  require(u.size() == sys.n_control, "eval_rhs: control dimension mismatch");
  return sys.lin_state_op * x + sys.control_op * u + sys.f(x, u);
}

struct Linearization {
  SparseMatrix a;  // A + f_x(x_bar, u_bar)
  SparseMatrix b;  // B + f_u(x_bar, u_bar)
};

inline Linearization linearize_at(const ControlSystem& sys, const Vector& x_bar,
                                  const Vector& u_bar) {
  require(x_bar.size() == sys.n_state && u_bar.size() == sys.n_control,
          "linearize_at: dimension mismatch");
  return {sys.lin_state_op + sys.jac_x(x_bar, u_bar), sys.control_op + sys.jac_u(x_bar, u_bar)};
}

/// Remainder terms along `traj` relative to the steady pair. The Y-weight
/// defaults to the state weight.
inline RemainderSeries remainder_series(const ControlSystem& sys, const CostFunctional& cost,
                                        const Trajectory& traj, const Vector& x_bar,
                                        const Vector& u_bar,
                                        const InnerProduct* y_inner = nullptr) {
  const InnerProduct& y = y_inner ? *y_inner : sys.state_inner;
  const int np = static_cast<int>(traj.grid.size());
  RemainderSeries out;
  out.grid = traj.grid;
  out.r_f.resize(sys.n_state, np);
  out.r_jx.resize(sys.n_state, np);
  out.r_ju.resize(sys.n_control, np);
  out.r_fx_norm.resize(np);
  out.r_fu_norm.resize(np);
  const Vector f_bar = sys.f(x_bar, u_bar);
  const SparseMatrix fx_bar = sys.jac_x(x_bar, u_bar);
  const SparseMatrix fu_bar = sys.jac_u(x_bar, u_bar);
  const Vector jx_bar = cost.grad_x(x_bar, u_bar);
  const Vector ju_bar = cost.grad_u(x_bar, u_bar);
  for (int k = 0; k < np; ++k) {
    const Vector x = traj.x(k);
    const Vector u = traj.u(k);
    out.r_f.col(k) = sys.f(x, u) - f_bar;
    SparseMatrix dfx = sys.jac_x(x, u) - fx_bar;
    SparseMatrix dfu = sys.jac_u(x, u) - fu_bar;
    dfx.prune(0.0);
    dfu.prune(0.0);
    out.r_fx_norm(k) = operator_norm(dfx, sys.state_inner, y);
    out.r_fu_norm(k) = operator_norm(dfu, sys.control_inner, y);
    out.r_fx.push_back(std::move(dfx));
    out.r_fu.push_back(std::move(dfu));
    out.r_jx.col(k) = cost.grad_x(x, u) - jx_bar;
    out.r_ju.col(k) = cost.grad_u(x, u) - ju_bar;
  }
  return out;
}

struct KktResidual {
  double dynamics = 0.0;
  double adjoint = 0.0;
  double stationarity = 0.0;
};

/// Residuals of the discrete optimality system of the implicit Euler
/// transcription, with the multiplier paired as +lambda^T (x' - Ax - Bu - f):
///
///   (x_{k+1} - x_k)/dt = F(x_{k+1}, u_k)
///   (lambda_{k-1} - lambda_k)/dt = A_k^* lambda_{k-1} - J_x(x_k, u_{k-1}),  lambda_N = 0
///   J_u(x_{k+1}, u_k) = B_k^* lambda_k
///
/// with A_k^*, B_k^* adjoints in the state/control weights. Each residual is
/// the maximum over the grid of the corresponding norm (X for the first two,
/// U for the last); the adjoint residual includes ||lambda_N||_X.
inline KktResidual kkt_residual(const ControlSystem& sys, const CostFunctional& cost,
                                const Trajectory& traj) {
  const int n_steps = traj.steps();
  const double dt = traj.dt;
  const InnerProduct& wx = sys.state_inner;
  const InnerProduct& wu = sys.control_inner;
  KktResidual res;
  res.adjoint = wx.norm(traj.lambda(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    const Vector x1 = traj.x(k + 1);
    const Vector u = traj.u(k);
    const Vector dyn = (x1 - traj.x(k)) / dt - eval_rhs(sys, x1, u);
    res.dynamics = std::max(res.dynamics, wx.norm(dyn));

    const Vector nu_k = wx.apply(traj.lambda(k));
    const Vector nu_k1 = wx.apply(traj.lambda(k + 1));
    const SparseMatrix ax = sys.lin_state_op + sys.jac_x(x1, u);
    const SparseMatrix bx = sys.control_op + sys.jac_u(x1, u);
    // Row k+1 of the backward recursion couples lambda_k and lambda_{k+1}.
    const Vector adj_euc =
        (nu_k - nu_k1) / dt - ax.transpose() * nu_k + cost.grad_x(x1, u);
    res.adjoint = std::max(res.adjoint, wx.norm(wx.riesz(adj_euc)));

    const Vector stat_euc = cost.grad_u(x1, u) - bx.transpose() * nu_k;
    res.stationarity = std::max(res.stationarity, wu.norm(wu.riesz(stat_euc)));
  }
  return res;
}

/// Discrete objective sum_k dt J(x_{k+1}, u_k).
inline double discrete_objective(const CostFunctional& cost, const Matrix& states,
                                 const Matrix& controls, double dt) {
  double total = 0.0;
  const int n_steps = static_cast<int>(states.cols()) - 1;
  for (int k = 0; k < n_steps; ++k) {
    total += dt * cost.value(states.col(k + 1), controls.col(k));
  }
  return total;
}

/// Largest relative errors of the supplied derivatives against central
/// differences at random points (step 1e-6 scaled by the argument norm).
struct DerivativeCheck {
  double jac_x = 0.0;
  double jac_u = 0.0;
  double grad_x = 0.0;
  double grad_u = 0.0;
};

inline DerivativeCheck check_derivatives(const ControlSystem& sys, const CostFunctional& cost,
                                         int points, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&](int size) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v(i) = scale * normal(rng);
    return v;
  };
  auto rel = [](const Vector& exact, const Vector& approx) {
    return (exact - approx).norm() / std::max(1e-8, exact.norm());
  };
  DerivativeCheck out;
  for (int p = 0; p < points; ++p) {
    const Vector x = random_vector(sys.n_state);
    const Vector u = random_vector(sys.n_control);
    const Vector dx = random_vector(sys.n_state).normalized();
    const Vector du = random_vector(sys.n_control).normalized();
    const double hx = 1e-6 * std::max(1.0, x.norm());
    const double hu = 1e-6 * std::max(1.0, u.norm());

    const Vector fd_fx = (sys.f(x + hx * dx, u) - sys.f(x - hx * dx, u)) / (2 * hx);
    out.jac_x = std::max(out.jac_x, rel(sys.jac_x(x, u) * dx, fd_fx));
    const Vector fd_fu = (sys.f(x, u + hu * du) - sys.f(x, u - hu * du)) / (2 * hu);
    out.jac_u = std::max(out.jac_u, rel(sys.jac_u(x, u) * du, fd_fu));

    const double fd_jx =
        (cost.value(x + hx * dx, u) - cost.value(x - hx * dx, u)) / (2 * hx);
    const double an_jx = cost.grad_x(x, u).dot(dx);
    out.grad_x = std::max(out.grad_x, std::abs(an_jx - fd_jx) / std::max(1e-8, std::abs(an_jx)));
    const double fd_ju =
        (cost.value(x, u + hu * du) - cost.value(x, u - hu * du)) / (2 * hu);
    const double an_ju = cost.grad_u(x, u).dot(du);
    out.grad_u = std::max(out.grad_u, std::abs(an_ju - fd_ju) / std::max(1e-8, std::abs(an_ju)));
  }
  return out;
}

}  // namespace turnpike
