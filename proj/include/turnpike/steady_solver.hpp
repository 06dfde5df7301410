#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "turnpike/ocp_core.hpp"

namespace turnpike {

/// Steady optimal triple with the residuals of the steady optimality system.
struct SteadyOptimum {
  Vector x_bar;
  Vector u_bar;
  Vector lambda_bar;
  double adjoint_residual = 0.0;       // ||J_x - A^* lambda||_X
  double stationarity_residual = 0.0;  // ||J_u - B^* lambda||_U
  double dynamics_residual = 0.0;      // ||A x + B u + f||_X
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> residual_trace;
};

struct SteadyOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  double min_damping = 1e-10;
  int gradient_flow_steps = 50;
  /// Warm-start from the steady problem with f dropped.
  bool linear_warm_start = false;
  bool keep_trace = true;
};

struct SteadyGuess {
  Vector x;
  Vector u;
  Vector lambda;
};

namespace detail {

struct SteadyResidual {
  Vector euclid;  // stacked (R_x, R_u, R_dyn)
  double adjoint = 0.0;
  double stationarity = 0.0;
  double dynamics = 0.0;
  double merit() const {
    return std::sqrt(adjoint * adjoint + stationarity * stationarity + dynamics * dynamics);
  }
};

inline SteadyResidual steady_residual(const ControlSystem& sys, const CostFunctional& cost,
                                      const Vector& x, const Vector& u, const Vector& nu) {
  const int n = sys.n_state;
  const int m = sys.n_control;
  const SparseMatrix fx = sys.lin_state_op + sys.jac_x(x, u);
  const SparseMatrix fu = sys.control_op + sys.jac_u(x, u);
  SteadyResidual r;
  r.euclid.resize(2 * n + m);
  r.euclid.segment(0, n) = cost.grad_x(x, u) - fx.transpose() * nu;
  r.euclid.segment(n, m) = cost.grad_u(x, u) - fu.transpose() * nu;
  r.euclid.segment(n + m, n) = eval_rhs(sys, x, u);
  r.adjoint = sys.state_inner.norm(sys.state_inner.riesz(r.euclid.segment(0, n)));
  r.stationarity = sys.control_inner.norm(sys.control_inner.riesz(r.euclid.segment(n, m)));
  r.dynamics = sys.state_inner.norm(r.euclid.segment(n + m, n));
  return r;
}

inline SecondOrder nonlinearity_hessian(const ControlSystem& sys, const Vector& x,
                                        const Vector& u, const Vector& nu) {
  if (sys.nonlinearity.adjoint_hessian) return sys.nonlinearity.adjoint_hessian(x, u, nu);
  // Central differences of the gradients of nu^T f.
  const int n = sys.n_state;
  const int m = sys.n_control;
  auto grad = [&](const Vector& xx, const Vector& uu) {
    Vector g(n + m);
    g.head(n) = sys.jac_x(xx, uu).transpose() * nu;
    g.tail(m) = sys.jac_u(xx, uu).transpose() * nu;
    return g;
  };
  Matrix h(n + m, n + m);
  for (int j = 0; j < n + m; ++j) {
    Vector xp = x, xm = x, up = u, um = u;
    const double step = 1e-6 * std::max(1.0, j < n ? std::abs(x(j)) : std::abs(u(j - n)));
    if (j < n) {
      xp(j) += step;
      xm(j) -= step;
    } else {
      up(j - n) += step;
      um(j - n) -= step;
    }
    h.col(j) = (grad(xp, up) - grad(xm, um)) / (2 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
  return {to_sparse(h.topLeftCorner(n, n)), to_sparse(h.topRightCorner(n, m)),
          to_sparse(h.bottomRightCorner(m, m))};
}

inline SecondOrder cost_hessian(const ControlSystem& sys, const CostFunctional& cost,
                                const Vector& x, const Vector& u) {
  if (cost.hessian) return cost.hessian(x, u);
  const int n = sys.n_state;
  const int m = sys.n_control;
  Matrix h(n + m, n + m);
  for (int j = 0; j < n + m; ++j) {
    Vector xp = x, xm = x, up = u, um = u;
    const double step = 1e-6 * std::max(1.0, j < n ? std::abs(x(j)) : std::abs(u(j - n)));
    if (j < n) {
      xp(j) += step;
      xm(j) -= step;
    } else {
      up(j - n) += step;
      um(j - n) -= step;
    }
    Vector gp(n + m), gm(n + m);
    gp << cost.grad_x(xp, up), cost.grad_u(xp, up);
    gm << cost.grad_x(xm, um), cost.grad_u(xm, um);
    h.col(j) = (gp - gm) / (2 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
  return {to_sparse(h.topLeftCorner(n, n)), to_sparse(h.topRightCorner(n, m)),
          to_sparse(h.bottomRightCorner(m, m))};
}

inline void add_block(std::vector<Eigen::Triplet<double>>& t, const SparseMatrix& block,
                      int row0, int col0, double scale = 1.0, bool transpose = false) {
  for (int k = 0; k < block.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(block, k); it; ++it) {
      const auto r = static_cast<int>(transpose ? it.col() : it.row());
      const auto c = static_cast<int>(transpose ? it.row() : it.col());
      t.emplace_back(row0 + r, col0 + c, scale * it.value());
    }
  }
}

inline SparseMatrix steady_jacobian(const ControlSystem& sys, const CostFunctional& cost,
                                    const Vector& x, const Vector& u, const Vector& nu) {
  const int n = sys.n_state;
  const int m = sys.n_control;
  const SparseMatrix fx = sys.lin_state_op + sys.jac_x(x, u);
  const SparseMatrix fu = sys.control_op + sys.jac_u(x, u);
  const SecondOrder hj = cost_hessian(sys, cost, x, u);
  const SecondOrder hf = nonlinearity_hessian(sys, x, u, nu);
  std::vector<Eigen::Triplet<double>> t;
  add_block(t, hj.xx, 0, 0);
  add_block(t, hf.xx, 0, 0, -1.0);
  add_block(t, hj.xu, 0, n);
  add_block(t, hf.xu, 0, n, -1.0);
  add_block(t, fx, 0, n + m, -1.0, true);
  add_block(t, hj.xu, n, 0, 1.0, true);
  add_block(t, hf.xu, n, 0, -1.0, true);
  add_block(t, hj.uu, n, n);
  add_block(t, hf.uu, n, n, -1.0);
  add_block(t, fu, n, n + m, -1.0, true);
  add_block(t, fx, n + m, 0);
  add_block(t, fu, n + m, n);
  SparseMatrix jac(2 * n + m, 2 * n + m);
  jac.setFromTriplets(t.begin(), t.end());
  return jac;
}

}  // namespace detail

/// Damped Newton on the steady optimality system
///
///   J_x(x,u) - (A + f_x)^T nu = 0,  J_u(x,u) - (B + f_u)^T nu = 0,  Ax + Bu + f = 0,
///
/// with nu = W_X lambda. The step length is backtracked on the residual norm;
/// if backtracking stalls, a short gradient flow on 1/2 ||R||^2 is run before
/// Newton resumes.
inline SteadyOptimum solve_steady(const ControlSystem& sys, const CostFunctional& cost,
                                  const SteadyGuess& guess, const SteadyOptions& opts = {}) {
  sys.validate();
  const int n = sys.n_state;
  const int m = sys.n_control;
  require(guess.x.size() == n && guess.u.size() == m && guess.lambda.size() == n,
          "solve_steady: guess dimensions do not match the system");
  require(opts.tolerance > 0.0 && opts.max_iterations > 0, "solve_steady: bad options");

  Vector x = guess.x;
  Vector u = guess.u;
  Vector nu = sys.state_inner.apply(guess.lambda);

  if (opts.linear_warm_start) {
    ControlSystem linear = sys;
    linear.nonlinearity = zero_nonlinearity(n, m);
    SteadyOptions inner = opts;
    inner.linear_warm_start = false;
    const SteadyOptimum warm = solve_steady(linear, cost, guess, inner);
    x = warm.x_bar;
    u = warm.u_bar;
    nu = sys.state_inner.apply(warm.lambda_bar);
  }

  SteadyOptimum out;
  auto res = detail::steady_residual(sys, cost, x, u, nu);
  if (opts.keep_trace) out.residual_trace.push_back(res.merit());
  int iter = 0;
  Eigen::SparseLU<SparseMatrix> lu;
  while (std::max({res.adjoint, res.stationarity, res.dynamics}) > opts.tolerance) {
    if (iter >= opts.max_iterations) {
      throw ConvergenceError("steady solver did not converge in " +
                                 std::to_string(opts.max_iterations) + " iterations",
                             res.adjoint, res.stationarity, res.dynamics);
    }
    ++iter;
    const SparseMatrix jac = detail::steady_jacobian(sys, cost, x, u, nu);
    lu.compute(jac);
    if (lu.info() != Eigen::Success) {
      throw LinearAlgebraError(
          "singular steady KKT matrix; retry from a perturbed initial guess");
    }
    const Vector step = lu.solve(-res.euclid);
    if (!step.allFinite()) {
      throw LinearAlgebraError(
          "singular steady KKT matrix; retry from a perturbed initial guess");
    }

    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= opts.min_damping) {
      const Vector xt = x + alpha * step.segment(0, n);
      const Vector ut = u + alpha * step.segment(n, m);
      const Vector nut = nu + alpha * step.segment(n + m, n);
      auto trial = detail::steady_residual(sys, cost, xt, ut, nut);
      if (std::isfinite(trial.merit()) && trial.merit() <= (1.0 - 1e-4 * alpha) * res.merit()) {
        x = xt;
        u = ut;
        nu = nut;
        res = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Gradient flow on 1/2 ||R||^2.
      for (int s = 0; s < opts.gradient_flow_steps; ++s) {
        const SparseMatrix j = detail::steady_jacobian(sys, cost, x, u, nu);
        const Vector g = j.transpose() * res.euclid;
        double tau = 1.0;
        const double base = 0.5 * res.euclid.squaredNorm();
        while (tau > 1e-14) {
          const Vector xt = x - tau * g.segment(0, n);
          const Vector ut = u - tau * g.segment(n, m);
          const Vector nut = nu - tau * g.segment(n + m, n);
          auto trial = detail::steady_residual(sys, cost, xt, ut, nut);
          if (0.5 * trial.euclid.squaredNorm() <= base - 1e-4 * tau * g.squaredNorm()) {
            x = xt;
            u = ut;
            nu = nut;
            res = std::move(trial);
            break;
          }
          tau *= 0.5;
        }
      }
    }
    if (opts.keep_trace) out.residual_trace.push_back(res.merit());
  }

  out.x_bar = x;
  out.u_bar = u;
  out.lambda_bar = sys.state_inner.riesz(nu);
  out.adjoint_residual = res.adjoint;
  out.stationarity_residual = res.stationarity;
  out.dynamics_residual = res.dynamics;
  out.objective = cost.value(x, u);
  out.iterations = iter;
  return out;
}

inline SteadyOptimum solve_steady(const ControlSystem& sys, const CostFunctional& cost,
                                  const SteadyOptions& opts = {}) {
  return solve_steady(sys, cost,
                      {Vector::Zero(sys.n_state), Vector::Zero(sys.n_control),
                       Vector::Zero(sys.n_state)},
                      opts);
}

inline RemainderSeries remainder_series(const ControlSystem& sys, const CostFunctional& cost,
                                        const Trajectory& traj, const SteadyOptimum& steady,
                                        const InnerProduct* y_inner = nullptr) {
  return remainder_series(sys, cost, traj, steady.x_bar, steady.u_bar, y_inner);
}

}  // namespace turnpike
