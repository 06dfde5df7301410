#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/ocp_core.hpp"
#include "turnpike/spectral.hpp"
#include "turnpike/steady_solver.hpp"

namespace turnpike {

/// Norms used to measure distance to the turnpike: X and U for state and
/// control, Y for the adjoint.
struct DeviationNorms {
  InnerProduct x;
  InnerProduct u;
  InnerProduct y;
  std::string x_label = "X";
  std::string u_label = "U";
  std::string y_label = "Y";
};

inline DeviationNorms default_norms(const ControlSystem& sys) {
  return {sys.state_inner, sys.control_inner, sys.state_inner, "state", "control", "state"};
}

struct DeviationSeries {
  Vector grid;
  Vector d;      // ||x - x_bar||_X + ||u - u_bar||_U
  Vector d_adj;  // ||lambda - lambda_bar||_Y
  std::string x_label;
  std::string u_label;
  std::string y_label;
};

inline DeviationSeries deviation_series(const Trajectory& traj, const SteadyOptimum& steady,
                                        const DeviationNorms& norms) {
  require(traj.states.rows() == steady.x_bar.size() &&
              traj.controls.rows() == steady.u_bar.size(),
          "deviation_series: dimension mismatch");
  const int np = static_cast<int>(traj.grid.size());
  DeviationSeries out{traj.grid, Vector(np), Vector(np), norms.x_label, norms.u_label,
                      norms.y_label};
  for (int k = 0; k < np; ++k) {
    out.d(k) = norms.x.norm(traj.x(k) - steady.x_bar) + norms.u.norm(traj.u(k) - steady.u_bar);
    out.d_adj(k) = norms.y.norm(traj.lambda(k) - steady.lambda_bar);
  }
  return out;
}

struct IntervalFinding {
  double epsilon = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double length = 0.0;
  double fraction_of_horizon = 0.0;
  int first_index = -1;  // -1 when empty
  int last_index = -1;
  bool empty() const { return first_index < 0; }
};

/// Longest contiguous closed run of grid points with values <= epsilon;
/// ties go to the earliest start.
inline IntervalFinding largest_interval(const Vector& grid, const Vector& values,
                                        double epsilon) {
  require(epsilon > 0.0, "largest_interval: epsilon must be positive");
  require(grid.size() == values.size() && grid.size() >= 1,
          "largest_interval: grid and values disagree");
  IntervalFinding best;
  best.epsilon = epsilon;
  double best_len = -1.0;
  int start = -1;
  const int np = static_cast<int>(grid.size());
  for (int k = 0; k <= np; ++k) {
    const bool inside = k < np && values(k) <= epsilon;
    if (inside && start < 0) start = k;
    if (!inside && start >= 0) {
      const double len = grid(k - 1) - grid(start);
      if (len > best_len) {
        best_len = len;
        best.first_index = start;
        best.last_index = k - 1;
      }
      start = -1;
    }
  }
  const double horizon = grid(np - 1) - grid(0);
  if (!best.empty()) {
    best.t1 = grid(best.first_index);
    best.t2 = grid(best.last_index);
    best.length = best.t2 - best.t1;
    best.fraction_of_horizon = horizon > 0.0 ? best.length / horizon : 0.0;
  }
  return best;
}

namespace detail {

/// Measure of {t : v(t) > eps} (or <= eps when `above` is false) for the
/// piecewise-linear interpolant of the samples.
inline double level_set_measure(const Vector& grid, const Vector& v, double eps, bool above) {
  double total = 0.0;
  for (Eigen::Index k = 0; k + 1 < grid.size(); ++k) {
    const double h = grid(k + 1) - grid(k);
    const bool a = v(k) > eps;
    const bool b = v(k + 1) > eps;
    double part;
    if (a == b) {
      part = a ? h : 0.0;
    } else {
      // Linear crossing inside the cell.
      const double s = (eps - v(k)) / (v(k + 1) - v(k));
      part = a ? s * h : (1.0 - s) * h;
    }
    total += above ? part : h - part;
  }
  return total;
}

}  // namespace detail

/// Lebesgue measure of {t : d(t) > epsilon}, cells split at the linear
/// crossing of the level.
inline double exceedance_measure(const Vector& grid, const Vector& values, double epsilon) {
  require(epsilon > 0.0, "exceedance_measure: epsilon must be positive");
  require(grid.size() == values.size(), "exceedance_measure: grid and values disagree");
  return detail::level_set_measure(grid, values, epsilon, true);
}

inline double sublevel_measure(const Vector& grid, const Vector& values, double epsilon) {
  return detail::level_set_measure(grid, values, epsilon, false);
}

/// d(t) ~ c (e^{-mu t} + e^{-mu (T - t)}).
struct ExpFit {
  double c = 0.0;
  double mu = 0.0;
  double residual = 0.0;  // RMS in log space
  int points = 0;
};

/// Least squares of log d against log c + log(e^{-mu t} + e^{-mu (T-t)}) by
/// Levenberg-Marquardt in (log c, mu), started from the slopes of the first
/// and last quarters of the usable samples.
inline ExpFit fit_exponential(const Vector& grid, const Vector& d, double horizon) {
  require(grid.size() == d.size(), "fit_exponential: grid and values disagree");
  std::vector<double> ts;
  std::vector<double> ys;
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (d(k) > 1e-14 && std::isfinite(d(k))) {
      ts.push_back(grid(k));
      ys.push_back(std::log(d(k)));
    }
  }
  const int np = static_cast<int>(ts.size());
  if (np < 10) throw FitUnavailable("fewer than 10 samples above 1e-14");

  auto slope_fit = [&](int lo, int hi) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const int cnt = hi - lo;
    for (int i = lo; i < hi; ++i) {
      st += ts[i];
      sy += ys[i];
      stt += ts[i] * ts[i];
      sty += ts[i] * ys[i];
    }
    const double denom = cnt * stt - st * st;
    const double slope = denom != 0.0 ? (cnt * sty - st * sy) / denom : 0.0;
    return std::pair{slope, (sy - slope * st) / cnt};
  };
  const int quarter = std::max(2, np / 4);
  const auto [slope_a, icpt_a] = slope_fit(0, quarter);
  const auto [slope_b, icpt_b] = slope_fit(np - quarter, np);
  double mu = 0.5 * (std::abs(slope_a) + std::abs(slope_b));
  if (!(mu > 1e-6)) mu = 1.0 / std::max(horizon, 1e-12);
  double log_c = icpt_a;

  auto model = [&](double t, double lc, double m) {
    // log(e^{-m t} + e^{-m (T-t)}) computed without underflow.
    const double a = -m * t;
    const double b = -m * (horizon - t);
    const double hi = std::max(a, b);
    return lc + hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  };
  auto sse = [&](double lc, double m) {
    double s = 0.0;
    for (int i = 0; i < np; ++i) {
      const double r = ys[i] - model(ts[i], lc, m);
      s += r * r;
    }
    return s;
  };

  double damping = 1e-3;
  double current = sse(log_c, mu);
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (int i = 0; i < np; ++i) {
      const double t = ts[i];
      const double a = -mu * t;
      const double b = -mu * (horizon - t);
      const double hi = std::max(a, b);
      const double ea = std::exp(a - hi);
      const double eb = std::exp(b - hi);
      const double dm = (-t * ea - (horizon - t) * eb) / (ea + eb);
      const Eigen::Vector2d g(1.0, dm);
      const double r = ys[i] - model(t, log_c, mu);
      jtj += g * g.transpose();
      jtr += g * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d lhs = jtj;
      lhs.diagonal() *= (1.0 + damping);
      const Eigen::Vector2d step = lhs.ldlt().solve(jtr);
      const double lc_new = log_c + step(0);
      const double mu_new = std::max(1e-12, mu + step(1));
      const double trial = sse(lc_new, mu_new);
      if (trial < current) {
        const double rel = (current - trial) / std::max(current, 1e-300);
        log_c = lc_new;
        mu = mu_new;
        current = trial;
        damping = std::max(1e-12, damping * 0.3);
        improved = true;
        if (rel < 1e-15 || step.norm() < 1e-14) it = 200;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }
  if (!(mu > 1e-6) || !std::isfinite(log_c)) {
    throw FitUnavailable("no exponential decay present in the series");
  }
  ExpFit out;
  out.c = std::exp(log_c);
  out.mu = mu;
  out.residual = std::sqrt(current / np);
  out.points = np;
  return out;
}

/// Series needed by the adjoint bound audits, in Y-norm where applicable.
struct AuditSeries {
  Vector grid;
  Matrix dlam;          // lambda - lambda_bar, n x (N+1)
  Vector dlam_norm;     // ||dlam||_Y
  Vector r_fx_norm;     // ||r_fx||_{L(X,Y)}
  Vector r_jx_norm;     // ||r_Jx||_Y of the Riesz representative
  Matrix r_jx;          // Riesz representatives of r_Jx (n x (N+1))
  Matrix r_ju;          // Riesz representatives of r_Ju (m x (N+1))
  std::vector<SparseMatrix> r_fx;
  std::vector<SparseMatrix> r_fu;
  InnerProduct x;
  InnerProduct u;
  InnerProduct y;
};

inline AuditSeries audit_series(const ControlSystem& sys, const Trajectory& traj,
                                const SteadyOptimum& steady, const RemainderSeries& rem,
                                const InnerProduct* y_inner = nullptr) {
  const InnerProduct& y = y_inner ? *y_inner : sys.state_inner;
  const int np = static_cast<int>(traj.grid.size());
  AuditSeries s;
  s.grid = traj.grid;
  s.dlam = traj.adjoints.colwise() - steady.lambda_bar;
  s.dlam_norm.resize(np);
  s.r_jx.resize(sys.n_state, np);
  s.r_ju.resize(sys.n_control, np);
  s.r_jx_norm.resize(np);
  for (int k = 0; k < np; ++k) {
    s.dlam_norm(k) = y.norm(s.dlam.col(k));
    s.r_jx.col(k) = sys.state_inner.riesz(rem.r_jx.col(k));
    s.r_ju.col(k) = sys.control_inner.riesz(rem.r_ju.col(k));
    s.r_jx_norm(k) = y.norm(s.r_jx.col(k));
  }
  s.r_fx_norm = rem.r_fx_norm;
  s.r_fx = rem.r_fx;
  s.r_fu = rem.r_fu;
  s.x = sys.state_inner;
  s.u = sys.control_inner;
  s.y = y;
  return s;
}

struct ExpStabAudit {
  double c = 0.0;       // smallest constant making the inequality hold
  double rho = 0.0;     // max over the interval of ||dlam||_Y
  double m = 0.0;
  double mu = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double s1 = 0.0;      // t1
  double s2 = 0.0;      // (t2 - t1) / 2, as stated for the shortened interval
  double bound = 0.0;   // max over [t1, t1 + (t2-t1)/2] of 2c (sup r_fx rho + sup r_Jx + sup sigma)
  double max_violation = 0.0;  // max over the interval of lhs - rhs with this c (<= 0)
};

/// Smallest c >= 0 with
///   ||dlam(t)|| <= M e^{-mu (t2 - t)} ||dlam(t2)|| + c (sup_{[t,t2]} ||r_fx|| rho
///                                                     + sup_{[t,t2]} ||r_Jx|| + sup_{[t,t2]} ||sigma||)
/// for every grid time t in [t1, t2]. `sigma_norm` injects an extra adjoint
/// forcing; `fixed_c` evaluates the bound with a given constant instead.
/// Times with ||dlam|| <= `resolution` (below what the solve resolves) are
/// treated as satisfied.
inline ExpStabAudit audit_expstab_bound(const AuditSeries& s, const SemigroupBound& bound,
                                        const IntervalFinding& interval,
                                        const Vector* sigma_norm = nullptr,
                                        std::optional<double> fixed_c = std::nullopt,
                                        double resolution = 0.0) {
  if (!bound.valid) throw AuditUnavailable("semigroup bound is not valid (A* not Hurwitz)");
  if (interval.empty()) throw AuditUnavailable("empty turnpike interval");
  const int i1 = interval.first_index;
  const int i2 = interval.last_index;
  ExpStabAudit out;
  out.m = bound.m;
  out.mu = bound.mu;
  out.t1 = s.grid(i1);
  out.t2 = s.grid(i2);
  out.s1 = out.t1;
  out.s2 = 0.5 * (out.t2 - out.t1);
  out.rho = s.dlam_norm.segment(i1, i2 - i1 + 1).maxCoeff();

  // Suprema over [t, t2], accumulated backwards.
  const int len = i2 - i1 + 1;
  Vector forcing(len);
  double sup_fx = 0.0, sup_jx = 0.0, sup_sigma = 0.0;
  for (int k = i2; k >= i1; --k) {
    sup_fx = std::max(sup_fx, s.r_fx_norm(k));
    sup_jx = std::max(sup_jx, s.r_jx_norm(k));
    if (sigma_norm) sup_sigma = std::max(sup_sigma, (*sigma_norm)(k));
    forcing(k - i1) = sup_fx * out.rho + sup_jx + sup_sigma;
  }
  auto transient = [&](int k) {
    return bound.m * std::exp(-bound.mu * (out.t2 - s.grid(k))) * s.dlam_norm(i2);
  };

  double c = 0.0;
  for (int k = i1; k <= i2; ++k) {
    const double excess = s.dlam_norm(k) - transient(k);
    if (excess <= 0.0 || s.dlam_norm(k) <= resolution) continue;
    const double f = forcing(k - i1);
    c = f > 0.0 ? std::max(c, excess / f) : std::numeric_limits<double>::infinity();
  }
  out.c = fixed_c.value_or(c);

  out.max_violation = -std::numeric_limits<double>::infinity();
  const double half = out.t1 + 0.5 * (out.t2 - out.t1);
  for (int k = i1; k <= i2; ++k) {
    const double rhs = transient(k) + out.c * forcing(k - i1);
    out.max_violation = std::max(out.max_violation, s.dlam_norm(k) - rhs);
    if (s.grid(k) <= half + 1e-12) {
      out.bound = std::max(out.bound, 2.0 * out.c * forcing(k - i1));
    }
  }
  return out;
}

struct ExContAudit {
  double c = 0.0;
  double t_c = 0.0;
  double alpha = 0.0;
  double s1 = 0.0;  // t1 + t_c
  double s2 = 0.0;  // t2
};

/// Smallest c with ||dlam(t)||_Y^2 <= c I(t) on [t1 + t_c, t2], where
///   I(t) = int_{t-t_c}^t ||r_fu^* dlam + r_Ju + sigma||_U^2 + ||-r_fx^* dlam + r_Jx + rho_T||_Y^2 ds
/// by the trapezoid rule. `sigma` (m x (N+1)) and `rho_t` (n x (N+1)) are the
/// optional injected forcings. Times with ||dlam|| <= `resolution` are
/// treated as satisfied.
inline ExContAudit audit_excont_bound(const ObservabilityCertificate& cert, const AuditSeries& s,
                                      const IntervalFinding& interval,
                                      const Matrix* sigma = nullptr,
                                      const Matrix* rho_t = nullptr, double resolution = 0.0) {
  if (!(cert.alpha > 0.0)) throw AuditUnavailable("(A, B) is not exactly controllable");
  if (interval.empty()) throw AuditUnavailable("empty turnpike interval");
  if (interval.length + 1e-12 < cert.t_c) {
    throw AuditUnavailable("turnpike interval shorter than the controllability time");
  }
  const int np = static_cast<int>(s.grid.size());
  Vector integrand(np);
  for (int k = 0; k < np; ++k) {
    Vector ucomp = s.r_ju.col(k);
    if (s.r_fu[k].nonZeros() > 0) {
      ucomp += s.u.riesz(s.r_fu[k].transpose() * s.y.apply(s.dlam.col(k)));
    }
    if (sigma) ucomp += sigma->col(k);
    Vector ycomp = s.r_jx.col(k);
    if (s.r_fx[k].nonZeros() > 0) {
      ycomp -= s.x.riesz(s.r_fx[k].transpose() * s.y.apply(s.dlam.col(k)));
    }
    if (rho_t) ycomp += rho_t->col(k);
    integrand(k) = s.u.dot(ucomp, ucomp) + s.y.dot(ycomp, ycomp);
  }
  // Trapezoid over [t - t_c, t] summed inside the window, so tiny late
  // integrals are not lost to cancellation against the early transient.
  auto window_integral = [&](int k) {
    const double lo = s.grid(k) - cert.t_c;
    double total = 0.0;
    int j = k;
    while (j > 0 && s.grid(j - 1) >= lo - 1e-12) {
      total += 0.5 * (s.grid(j) - s.grid(j - 1)) * (integrand(j) + integrand(j - 1));
      --j;
    }
    if (j > 0 && s.grid(j) > lo) {
      // Partial cell [lo, grid(j)] with the linearly interpolated integrand.
      const double w = (lo - s.grid(j - 1)) / (s.grid(j) - s.grid(j - 1));
      const double at_lo = integrand(j - 1) + w * (integrand(j) - integrand(j - 1));
      total += 0.5 * (s.grid(j) - lo) * (at_lo + integrand(j));
    }
    return total;
  };

  ExContAudit out;
  out.t_c = cert.t_c;
  out.alpha = cert.alpha;
  out.s1 = s.grid(interval.first_index) + cert.t_c;
  out.s2 = s.grid(interval.last_index);
  for (int k = interval.first_index; k <= interval.last_index; ++k) {
    const double t = s.grid(k);
    if (t + 1e-12 < out.s1) continue;
    if (s.dlam_norm(k) <= resolution) continue;
    const double lhs = s.dlam_norm(k) * s.dlam_norm(k);
    if (lhs == 0.0) continue;
    const double rhs = window_integral(k);
    out.c = rhs > 0.0 ? std::max(out.c, lhs / rhs) : std::numeric_limits<double>::infinity();
  }
  return out;
}

struct WNorm {
  double w = 0.0;
  Vector pointwise;  // surrogate interpolation norm of lambda(t), per grid point in range
};

/// w^2 = int (||lambda'||^2 + ||lambda||^2 + ||A* lambda||^2) dt over the grid
/// indices [first, last], trapezoid rule with central-difference derivatives
/// (one-sided at the ends). Norms in `y`; `pointwise` uses `h1` when given.
inline WNorm w_norm(const Matrix& lambda, const Vector& grid, const SparseMatrix& a_star,
                    int first, int last, const InnerProduct& y,
                    const InnerProduct* h1 = nullptr) {
  require(first >= 0 && last < grid.size() && last - first + 1 >= 3,
          "w_norm: need at least 3 points inside the grid");
  require(lambda.cols() == grid.size() && lambda.rows() == a_star.rows(),
          "w_norm: dimension mismatch");
  const int len = last - first + 1;
  Vector integrand(len);
  WNorm out;
  out.pointwise.resize(len);
  for (int i = 0; i < len; ++i) {
    const int k = first + i;
    Vector deriv;
    if (i == 0) {
      deriv = (lambda.col(k + 1) - lambda.col(k)) / (grid(k + 1) - grid(k));
    } else if (i == len - 1) {
      deriv = (lambda.col(k) - lambda.col(k - 1)) / (grid(k) - grid(k - 1));
    } else {
      deriv = (lambda.col(k + 1) - lambda.col(k - 1)) / (grid(k + 1) - grid(k - 1));
    }
    const Vector lam = lambda.col(k);
    const Vector alam = a_star * lam;
    integrand(i) = y.dot(deriv, deriv) + y.dot(lam, lam) + y.dot(alam, alam);
    out.pointwise(i) = h1 ? h1->norm(lam) : y.norm(lam);
  }
  double w2 = 0.0;
  for (int i = 1; i < len; ++i) {
    w2 += 0.5 * (grid(first + i) - grid(first + i - 1)) * (integrand(i) + integrand(i - 1));
  }
  out.w = std::sqrt(w2);
  return out;
}

struct AdjointBoundAudit {
  std::vector<double> horizons;
  std::vector<double> rho;
  bool bounded = true;  // no later horizon exceeds an earlier one by more than 10%
};

struct AdjointSweepMember {
  double horizon;
  Vector grid;
  Vector dlam_norm;
  IntervalFinding interval;
};

inline AdjointBoundAudit audit_adjoint_bound(const std::vector<AdjointSweepMember>& sweep,
                                             double tolerance = 0.10) {
  require(sweep.size() >= 2, "audit_adjoint_bound: need at least two horizons");
  AdjointBoundAudit out;
  for (const auto& member : sweep) {
    double rho = 0.0;
    if (!member.interval.empty()) {
      rho = member.dlam_norm
                .segment(member.interval.first_index,
                         member.interval.last_index - member.interval.first_index + 1)
                .maxCoeff();
    }
    out.horizons.push_back(member.horizon);
    out.rho.push_back(rho);
  }
  for (std::size_t j = 1; j < out.rho.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (out.rho[j] > (1.0 + tolerance) * out.rho[i] + 1e-15) out.bounded = false;
    }
  }
  return out;
}

/// Everything the diagnostics say about one solve.
struct TurnpikeReport {
  double horizon = 0.0;
  std::vector<IntervalFinding> state_intervals;
  std::vector<IntervalFinding> adjoint_intervals;
  std::vector<double> state_exceedance;
  std::vector<double> adjoint_exceedance;
  std::optional<ExpFit> fit;
  std::string fit_error;
  std::optional<ExpStabAudit> expstab;
  std::string expstab_error;
  std::optional<ExContAudit> excont;
  std::string excont_error;
  std::optional<WNorm> w;
  double rho = 0.0;
};

}  // namespace turnpike
