#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/SparseLU>

#include "turnpike/lbfgs.hpp"
#include "turnpike/ocp_core.hpp"
#include "turnpike/steady_solver.hpp"

namespace turnpike {

struct SolveOptions {
  double dt = 0.1;
  int max_outer_iters = 1000;
  double grad_tol = 1e-6;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  int memory = 10;

  void validate() const {
    require(dt > 0.0, "dt must be positive");
    require(max_outer_iters >= 0, "max_outer_iters must be non-negative");
    require(grad_tol > 0.0 && newton_tol > 0.0 && armijo > 0.0, "tolerances must be positive");
    require(backtrack > 0.0 && backtrack < 1.0, "backtracking factor must lie in (0, 1)");
    require(memory > 0, "quasi-Newton memory must be positive");
  }
};

namespace detail {

inline bool has_constant_jacobian(const ControlSystem& sys) {
  return sys.nonlinearity.kind == "none";
}

inline SparseMatrix step_matrix(const ControlSystem& sys, const Vector& x, const Vector& u,
                                double dt) {
  SparseMatrix jac = sparse_identity(sys.n_state) - dt * (sys.lin_state_op + sys.jac_x(x, u));
  jac.makeCompressed();
  return jac;
}

inline void factor_or_throw(Eigen::SparseLU<SparseMatrix>& lu, const SparseMatrix& m,
                            const std::string& what) {
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw LinearAlgebraError(what);
}

}  // namespace detail

/// Implicit Euler sweep x_{k+1} = x_k + dt (A x_{k+1} + B u_k + f(x_{k+1}, u_k)).
/// `controls` holds one column per interval (extra trailing columns ignored).
/// Each step runs Newton with the step matrix I - dt (A + f_x), reusing one
/// factorization per step while the iteration contracts.
inline Matrix forward_solve(const ControlSystem& sys, const Matrix& controls, const Vector& x0,
                            const Vector& grid, const SolveOptions& opts = {}) {
  const int n_steps = static_cast<int>(grid.size()) - 1;
  require(n_steps >= 1, "forward_solve: grid needs at least two points");
  require(controls.rows() == sys.n_control && controls.cols() >= n_steps,
          "forward_solve: need one control per interval");
  require(x0.size() == sys.n_state, "forward_solve: x0 dimension mismatch");
  const double dt = grid(1) - grid(0);

  Matrix states(sys.n_state, n_steps + 1);
  states.col(0) = x0;
  Eigen::SparseLU<SparseMatrix> lu;
  const bool linear = detail::has_constant_jacobian(sys);
  if (linear) {
    detail::factor_or_throw(lu, detail::step_matrix(sys, x0, controls.col(0), dt),
                            "implicit Euler step matrix is singular");
  }
  for (int k = 0; k < n_steps; ++k) {
    const Vector xk = states.col(k);
    const Vector u = controls.col(k);
    if (linear) {
      states.col(k + 1) = lu.solve(xk + dt * (sys.control_op * u));
      continue;
    }
    Vector y = xk;
    Vector res = y - xk - dt * eval_rhs(sys, y, u);
    double res_norm = res.lpNorm<Eigen::Infinity>();
    bool factored = false;
    int it = 0;
    while (res_norm > opts.newton_tol) {
      if (it++ >= opts.newton_max_iters || !std::isfinite(res_norm)) {
        throw StiffStepError("implicit Euler Newton failed at step " + std::to_string(k), k);
      }
      if (!factored) {
        lu.compute(detail::step_matrix(sys, y, u, dt));
        if (lu.info() != Eigen::Success) {
          throw StiffStepError("singular step Jacobian at step " + std::to_string(k), k);
        }
        factored = true;
      }
      y -= Vector(lu.solve(res));
      res = y - xk - dt * eval_rhs(sys, y, u);
      const double next = res.lpNorm<Eigen::Infinity>();
      // Refactor when the frozen Jacobian stops contracting.
      if (next > 0.25 * res_norm) factored = false;
      res_norm = next;
    }
    states.col(k + 1) = y;
  }
  return states;
}

/// Exact discrete adjoint of the implicit Euler transcription of
/// sum_k dt J(x_{k+1}, u_k). Returns lambda in state coordinates (Riesz
/// representatives in the state weight), n x (N+1), with lambda_N = 0.
inline Matrix adjoint_solve(const ControlSystem& sys, const CostFunctional& cost,
                            const Matrix& states, const Matrix& controls, double dt) {
  const int n_steps = static_cast<int>(states.cols()) - 1;
  require(states.rows() == sys.n_state && n_steps >= 1, "adjoint_solve: bad state sequence");
  require(controls.rows() == sys.n_control && controls.cols() >= n_steps,
          "adjoint_solve: need one control per interval");
  Matrix adj(sys.n_state, n_steps + 1);
  adj.col(n_steps).setZero();
  Vector nu = Vector::Zero(sys.n_state);
  Eigen::SparseLU<SparseMatrix> lu;
  const bool linear = detail::has_constant_jacobian(sys);
  if (linear) {
    detail::factor_or_throw(
        lu,
        SparseMatrix(detail::step_matrix(sys, states.col(0), controls.col(0), dt).transpose()),
        "transposed implicit Euler step matrix is singular");
  }
  for (int j = n_steps; j >= 1; --j) {
    const Vector xj = states.col(j);
    const Vector u = controls.col(j - 1);
    if (!linear) {
      detail::factor_or_throw(
          lu, SparseMatrix(detail::step_matrix(sys, xj, u, dt).transpose()),
          "transposed implicit Euler step matrix is singular at step " + std::to_string(j));
    }
    const Vector rhs = nu - dt * cost.grad_x(xj, u);
    nu = lu.solve(rhs);
    adj.col(j - 1) = sys.state_inner.riesz(nu);
  }
  return adj;
}

/// Euclidean gradient of the discrete objective with respect to u_k, one
/// column per interval (m x N):
///   g_k = dt (J_u(x_{k+1}, u_k) - (B + f_u(x_{k+1}, u_k))^T W_X lambda_k).
inline Matrix reduced_gradient(const ControlSystem& sys, const CostFunctional& cost,
                               const Matrix& states, const Matrix& controls,
                               const Matrix& adjoints, double dt) {
  const int n_steps = static_cast<int>(states.cols()) - 1;
  Matrix grad(sys.n_control, n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const Vector x1 = states.col(k + 1);
    const Vector u = controls.col(k);
    const SparseMatrix bx = sys.control_op + sys.jac_u(x1, u);
    grad.col(k) =
        dt * (cost.grad_u(x1, u) - bx.transpose() * sys.state_inner.apply(adjoints.col(k)));
  }
  return grad;
}

/// U-weighted representative of the gradient: column k is the discrete
/// stationarity residual J_u - B_k^* lambda_k on interval k.
inline Matrix riesz_gradient(const ControlSystem& sys, const Matrix& grad, double dt) {
  Matrix out(grad.rows(), grad.cols());
  for (int k = 0; k < grad.cols(); ++k) out.col(k) = sys.control_inner.riesz(grad.col(k)) / dt;
  return out;
}

/// max_k ||column k||_U
inline double sup_control_norm(const ControlSystem& sys, const Matrix& per_interval) {
  double out = 0.0;
  for (int k = 0; k < per_interval.cols(); ++k) {
    out = std::max(out, sys.control_inner.norm(per_interval.col(k)));
  }
  return out;
}

/// Direct transcription of the finite-horizon problem: implicit Euler states,
/// exact discrete adjoints, limited-memory BFGS on the control sequence in the
/// L2(0,T;U) inner product. Converged when the sup-in-time U-norm of the
/// stationarity residual is at most `grad_tol`; otherwise the best iterate is
/// returned with `solver_info.converged == false`.
inline Trajectory solve_ocp(const ControlSystem& sys, const CostFunctional& cost,
                            const Vector& x0, double horizon, const SolveOptions& opts = {},
                            const std::optional<SteadyOptimum>& steady = std::nullopt,
                            const Matrix* initial_controls = nullptr) {
  sys.validate();
  opts.validate();
  require(x0.size() == sys.n_state, "solve_ocp: x0 dimension mismatch");
  const Vector grid = uniform_grid(horizon, opts.dt);
  const int n_steps = static_cast<int>(grid.size()) - 1;
  const int m = sys.n_control;
  const double dt = opts.dt;

  Matrix u0(m, n_steps);
  if (initial_controls) {
    require(initial_controls->rows() == m && initial_controls->cols() >= n_steps,
            "solve_ocp: initial controls have the wrong shape");
    u0 = initial_controls->leftCols(n_steps);
  } else if (steady) {
    u0 = steady->u_bar.replicate(1, n_steps);
  } else {
    u0.setZero();
  }

  auto unpack = [m, n_steps](const Vector& v) {
    return Eigen::Map<const Matrix>(v.data(), m, n_steps);
  };
  auto evaluate = [&](const Vector& v, Vector& grad) {
    const Matrix u = unpack(v);
    const Matrix x = forward_solve(sys, u, x0, grid, opts);
    const Matrix lam = adjoint_solve(sys, cost, x, u, dt);
    const Matrix g = reduced_gradient(sys, cost, x, u, lam, dt);
    grad = Eigen::Map<const Vector>(g.data(), g.size());
    return discrete_objective(cost, x, u, dt);
  };

  SearchSpace space;
  space.dot = [&](const Vector& a, const Vector& b) {
    double s = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      s += dt * sys.control_inner.dot(a.segment(k * m, m), b.segment(k * m, m));
    }
    return s;
  };
  space.riesz = [&](const Vector& g) {
    Vector out(g.size());
    for (int k = 0; k < n_steps; ++k) {
      out.segment(k * m, m) = sys.control_inner.riesz(g.segment(k * m, m)) / dt;
    }
    return out;
  };
  space.stop_norm = [&](const Vector& g) {
    double s = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      s = std::max(s, sys.control_inner.norm(g.segment(k * m, m)));
    }
    return s;
  };

  LbfgsOptions lopts;
  lopts.memory = opts.memory;
  lopts.max_iterations = opts.max_outer_iters;
  lopts.grad_tol = opts.grad_tol;
  lopts.armijo = opts.armijo;
  lopts.backtrack = opts.backtrack;
  const LbfgsResult result =
      minimize_lbfgs(evaluate, Eigen::Map<const Vector>(u0.data(), u0.size()), space, lopts);

  Trajectory traj;
  traj.grid = grid;
  traj.dt = dt;
  traj.horizon = horizon;
  traj.controls.resize(m, n_steps + 1);
  traj.controls.leftCols(n_steps) = unpack(result.x);
  traj.controls.col(n_steps) = traj.controls.col(n_steps - 1);
  traj.states = forward_solve(sys, traj.controls, x0, grid, opts);
  traj.adjoints = adjoint_solve(sys, cost, traj.states, traj.controls, dt);
  traj.solver_info.iterations = result.iterations;
  traj.solver_info.grad_norm = result.grad_norm;
  traj.solver_info.objective = result.value;
  traj.solver_info.converged = result.converged;
  return traj;
}

}  // namespace turnpike
