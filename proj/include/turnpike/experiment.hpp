#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/diagnostics.hpp"
#include "turnpike/dynamic_solver.hpp"
#include "turnpike/io.hpp"
#include "turnpike/models.hpp"
#include "turnpike/spectral.hpp"
#include "turnpike/steady_solver.hpp"

namespace turnpike {

struct ExperimentSpec {
  std::string model = "lq-tracking";
  json params = json::object();
  std::vector<double> horizons;  // empty: the model default
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  std::optional<double> dt;      // empty: the model default
  SolveOptions solve;            // dt is taken from `dt` or the model
  fs::path out_dir;              // empty: nothing is written
  std::uint64_t seed = 0;
  bool spectral = true;
  bool audits = true;
  bool w_norm = true;
  bool fits = true;
  bool dump_trajectory = true;
  bool derivative_check = false;
  /// Measure deviations relative to the turnpike size: d / (|x_bar|_X + |u_bar|_U)
  /// and d_adj / |lambda_bar|_Y.
  bool normalize = false;
  /// Level defining the interval used by the audits and rho; defaults to the
  /// middle entry of `epsilons`.
  std::optional<double> audit_epsilon;
  double t_c = 1.0;
  /// Adjoint deviations at or below this level are not audited; defaults to
  /// the solver's gradient tolerance.
  std::optional<double> audit_resolution;
  AdjointSign adjoint_sign = AdjointSign::lagrangian;

  void validate() const {
    require(!horizons.empty(), "experiment needs at least one horizon");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      require(horizons[i] > 0.0, "horizons must be positive");
      require(i == 0 || horizons[i] > horizons[i - 1], "horizons must be increasing");
    }
    require(!epsilons.empty(), "experiment needs at least one epsilon");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      require(epsilons[i] > 0.0, "epsilons must be positive");
      require(i == 0 || epsilons[i] < epsilons[i - 1], "epsilons must be decreasing");
    }
    require(!audit_epsilon || *audit_epsilon > 0.0, "audit epsilon must be positive");
    require(t_c > 0.0, "controllability time must be positive");
    solve.validate();
  }

  double audit_level() const {
    return audit_epsilon.value_or(epsilons[epsilons.size() / 2]);
  }
};

inline json to_json(const ExperimentSpec& s) {
  return {{"model", s.model},
          {"params", s.params},
          {"horizons", s.horizons},
          {"epsilons", s.epsilons},
          {"dt", s.dt ? json(*s.dt) : json(nullptr)},
          {"grad_tol", s.solve.grad_tol},
          {"max_outer_iters", s.solve.max_outer_iters},
          {"seed", s.seed},
          {"spectral", s.spectral},
          {"audits", s.audits},
          {"w_norm", s.w_norm},
          {"fits", s.fits},
          {"normalize", s.normalize},
          {"audit_epsilon", s.audit_level()},
          {"t_c", s.t_c},
          {"audit_resolution", s.audit_resolution.value_or(s.solve.grad_tol)},
          {"adjoint_sign", to_string(s.adjoint_sign)}};
}

/// Linearization at the turnpike and the certificates built from it.
/// A* and B* are adjoints in the state and control inner products.
struct SpectralCertificates {
  Matrix a;
  Matrix b;
  Matrix a_star;
  Matrix b_star;
  std::optional<SpectralSplit> split;
  HautusResult hautus;
  SemigroupBound semigroup;
  ObservabilityCertificate observability;
};

/// Throws DecompositionError when the spectrum touches the splitting line and
/// `split` is requested.
inline SpectralCertificates spectral_certificates(const Model& model, const SteadyOptimum& steady,
                                                  double t_c, bool split = true) {
  const ControlSystem& sys = model.system;
  const Linearization lin = linearize_at(sys, steady.x_bar, steady.u_bar);
  SpectralCertificates c;
  c.a = Matrix(lin.a);
  c.b = Matrix(lin.b);
  c.a_star = weighted_adjoint(c.a, sys.state_inner);
  // B*: X -> U, W_U^{-1} B^T W_X.
  const Matrix btw = c.b.transpose() * Matrix(sys.state_inner.weight());
  c.b_star.resize(sys.n_control, sys.n_state);
  for (int j = 0; j < sys.n_state; ++j) c.b_star.col(j) = sys.control_inner.riesz(btw.col(j));
  if (split) c.split = spectral_split(c.a_star, 0.0, c.b_star);
  c.hautus = hautus_detectable(c.a_star, c.b_star);
  c.semigroup = semigroup_bound(c.a_star, &model.norms.y);
  c.observability = observability_constant(c.a, c.b, t_c);
  return c;
}

inline json to_json(const SpectralCertificates& c) {
  json j;
  j["split"] = c.split ? to_json(*c.split) : json(nullptr);
  j["stability_margin"] = stability_margin(c.a_star);
  j["hautus"] = to_json(c.hautus);
  j["semigroup"] = to_json(c.semigroup);
  json obs = to_json(c.observability);
  // Large Gramians bloat the report without adding information.
  if (c.a.rows() > 50) obs.erase("gramian");
  j["observability"] = obs;
  return j;
}

struct RunRecord {
  double horizon = 0.0;
  Trajectory trajectory;
  DeviationSeries series;
  Vector d_scaled;      // series.d, divided by the turnpike size when normalizing
  Vector d_adj_scaled;
  KktResidual kkt;
  TurnpikeReport report;
  bool converged = false;
  fs::path dir;
};

struct ExperimentResult {
  ExperimentSpec spec;
  Model model;
  SteadyOptimum steady;
  std::optional<SpectralCertificates> certificates;
  std::vector<RunRecord> runs;
  double d_scale = 1.0;
  double d_adj_scale = 1.0;
  json summary;

  bool all_converged() const {
    return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.converged; });
  }
};

inline std::string horizon_dir_name(double horizon) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "T_%g", horizon);
  return buf.data();
}

namespace detail {

/// Norm curves for plotting: state in X, control in U, adjoint in Y and in the
/// H1-type weight.
inline void write_norms_csv(const fs::path& path, const Model& model, const Trajectory& traj) {
  const int np = static_cast<int>(traj.grid.size());
  std::vector<double> x(np), u(np), ly(np), lh(np);
  const InnerProduct& h1 = model.system.h1_or_state();
  for (int k = 0; k < np; ++k) {
    x[k] = model.norms.x.norm(traj.x(k));
    u[k] = model.norms.u.norm(traj.u(k));
    ly[k] = model.norms.y.norm(traj.lambda(k));
    lh[k] = h1.norm(traj.lambda(k));
  }
  write_csv(path, {"t", "x_h1", "u_l2b", "lam_l2", "lam_h1"}, {to_std(traj.grid), x, u, ly, lh});
}

inline TurnpikeReport build_report(const ExperimentSpec& spec, const Model& model,
                                   const SteadyOptimum& steady,
                                   const std::optional<SpectralCertificates>& certs,
                                   RunRecord& run) {
  const Trajectory& traj = run.trajectory;
  TurnpikeReport rep;
  rep.horizon = run.horizon;
  for (double eps : spec.epsilons) {
    rep.state_intervals.push_back(largest_interval(traj.grid, run.d_scaled, eps));
    rep.adjoint_intervals.push_back(largest_interval(traj.grid, run.d_adj_scaled, eps));
    rep.state_exceedance.push_back(exceedance_measure(traj.grid, run.d_scaled, eps));
    rep.adjoint_exceedance.push_back(exceedance_measure(traj.grid, run.d_adj_scaled, eps));
  }
  if (spec.fits) {
    try {
      rep.fit = fit_exponential(traj.grid, run.series.d, run.horizon);
    } catch (const FitUnavailable& e) {
      rep.fit_error = e.what();
    }
  }

  const IntervalFinding interval = largest_interval(traj.grid, run.d_scaled, spec.audit_level());
  if (!interval.empty()) {
    rep.rho = run.series.d_adj
                  .segment(interval.first_index, interval.last_index - interval.first_index + 1)
                  .maxCoeff();
  }
  if (!spec.audits && !spec.w_norm) return rep;

  const RemainderSeries rem =
      remainder_series(model.system, model.cost, traj, steady, &model.norms.y);
  const AuditSeries audit = audit_series(model.system, traj, steady, rem, &model.norms.y);
  const double resolution = spec.audit_resolution.value_or(spec.solve.grad_tol);
  if (spec.audits && certs) {
    try {
      rep.expstab = audit_expstab_bound(audit, certs->semigroup, interval, nullptr,
                                        std::nullopt, resolution);
    } catch (const AuditUnavailable& e) {
      rep.expstab_error = e.what();
    }
    try {
      rep.excont =
          audit_excont_bound(certs->observability, audit, interval, nullptr, nullptr, resolution);
    } catch (const AuditUnavailable& e) {
      rep.excont_error = e.what();
    }
  }
  if (spec.w_norm && certs && !interval.empty() &&
      interval.last_index - interval.first_index >= 2) {
    rep.w = w_norm(audit.dlam, traj.grid, to_sparse(certs->a_star), interval.first_index,
                   interval.last_index, model.norms.y,
                   model.system.h1_inner ? &*model.system.h1_inner : nullptr);
  }
  return rep;
}

inline json summary_row(const ExperimentSpec& spec, const RunRecord& run) {
  const TurnpikeReport& r = run.report;
  json row;
  row["horizon"] = run.horizon;
  row["converged"] = run.converged;
  row["epsilons"] = spec.epsilons;
  json nu = json::array(), theta = json::array();
  for (const auto& f : r.state_intervals) nu.push_back(f.length);
  for (const auto& f : r.adjoint_intervals) theta.push_back(f.length);
  row["nu"] = nu;
  row["theta"] = theta;
  row["state_exceedance"] = r.state_exceedance;
  row["adjoint_exceedance"] = r.adjoint_exceedance;
  row["fit_c"] = r.fit ? json(r.fit->c) : json(nullptr);
  row["fit_mu"] = r.fit ? json(r.fit->mu) : json(nullptr);
  row["rho"] = r.rho;
  row["expstab_c"] = r.expstab ? number_or_null(r.expstab->c) : json(nullptr);
  row["excont_c"] = r.excont ? number_or_null(r.excont->c) : json(nullptr);
  row["w"] = r.w ? json(r.w->w) : json(nullptr);
  return row;
}

inline void write_summary_csv(const fs::path& path, const ExperimentSpec& spec,
                              const std::vector<RunRecord>& runs) {
  std::vector<double> t, eps, nu, theta, ex, exa, mu, c, rho, es, ec, conv;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& run : runs) {
    const TurnpikeReport& r = run.report;
    for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
      t.push_back(run.horizon);
      eps.push_back(spec.epsilons[i]);
      nu.push_back(r.state_intervals[i].length);
      theta.push_back(r.adjoint_intervals[i].length);
      ex.push_back(r.state_exceedance[i]);
      exa.push_back(r.adjoint_exceedance[i]);
      c.push_back(r.fit ? r.fit->c : nan);
      mu.push_back(r.fit ? r.fit->mu : nan);
      rho.push_back(r.rho);
      es.push_back(r.expstab ? r.expstab->c : nan);
      ec.push_back(r.excont ? r.excont->c : nan);
      conv.push_back(run.converged ? 1.0 : 0.0);
    }
  }
  write_csv(path,
            {"T", "epsilon", "nu", "theta", "exceedance", "adjoint_exceedance", "fit_c", "fit_mu",
             "rho", "expstab_c", "excont_c", "converged"},
            {t, eps, nu, theta, ex, exa, c, mu, rho, es, ec, conv});
}

}  // namespace detail

/// Steady problem, certificates, and one dynamic solve per horizon, with the
/// report bundle written under `spec.out_dir` when it is set:
///   spec.json, model.json, steady.json, certificates.json, spectrum.csv,
///   summary.json, summary.csv, and per horizon T_<T>/ with norms.csv,
///   deviation.csv, report.json and trajectory.bin.
/// Non-converged solves are kept and flagged.
inline ExperimentResult run_experiment(ExperimentSpec spec) {
  ExperimentResult res;
  res.model = make_model(spec.model, spec.params);
  const Model& model = res.model;
  if (spec.horizons.empty()) spec.horizons = {model.default_horizon};
  spec.solve.dt = spec.dt.value_or(model.default_dt);
  spec.validate();
  for (double t : spec.horizons) uniform_grid(t, spec.solve.dt);  // fail before any work
  res.spec = spec;

  res.steady = solve_steady(model.system, model.cost, model.steady_options);
  const SteadyOptimum& steady = res.steady;
  if (spec.normalize) {
    const double s = model.norms.x.norm(steady.x_bar) + model.norms.u.norm(steady.u_bar);
    const double sa = model.norms.y.norm(steady.lambda_bar);
    res.d_scale = s > 0.0 ? s : 1.0;
    res.d_adj_scale = sa > 0.0 ? sa : 1.0;
  }
  if (spec.spectral || spec.audits || spec.w_norm) {
    res.certificates = spectral_certificates(model, steady, spec.t_c, spec.spectral);
  }

  const bool write = !spec.out_dir.empty();
  const double sign = sign_factor(spec.adjoint_sign);
  json spec_doc = to_json(spec);
  if (write) {
    write_json(spec.out_dir / "spec.json", spec_doc);
    write_json(spec.out_dir / "model.json", {{"model", model.name}, {"params", model.params}});
    json st = to_json(steady, spec.adjoint_sign);
    st["x_norm"] = model.norms.x.norm(steady.x_bar);
    st["u_norm"] = model.norms.u.norm(steady.u_bar);
    st["lambda_norm"] = model.norms.y.norm(steady.lambda_bar);
    write_json(spec.out_dir / "steady.json", st);
    if (res.certificates) {
      write_json(spec.out_dir / "certificates.json", to_json(*res.certificates));
      if (res.certificates->split) {
        write_spectrum_csv(spec.out_dir / "spectrum.csv", *res.certificates->split);
      }
    }
  }

  json rows = json::array();
  for (double horizon : spec.horizons) {
    RunRecord run;
    run.horizon = horizon;
    run.trajectory = solve_ocp(model.system, model.cost, model.x0, horizon, spec.solve, steady);
    run.converged = run.trajectory.solver_info.converged;
    run.kkt = kkt_residual(model.system, model.cost, run.trajectory);
    run.series = deviation_series(run.trajectory, steady, model.norms);
    run.d_scaled = run.series.d / res.d_scale;
    run.d_adj_scaled = run.series.d_adj / res.d_adj_scale;
    run.report = detail::build_report(spec, model, steady, res.certificates, run);
    rows.push_back(detail::summary_row(spec, run));

    if (write) {
      run.dir = spec.out_dir / horizon_dir_name(horizon);
      detail::write_norms_csv(run.dir / "norms.csv", model, run.trajectory);
      std::vector<std::string> head{"t", "d", "d_adj"};
      std::vector<std::vector<double>> cols{to_std(run.series.grid), to_std(run.series.d),
                                            to_std(run.series.d_adj)};
      if (spec.normalize) {
        head.insert(head.end(), {"d_normalized", "d_adj_normalized"});
        cols.push_back(to_std(run.d_scaled));
        cols.push_back(to_std(run.d_adj_scaled));
      }
      write_csv(run.dir / "deviation.csv", head, cols);
      json rep;
      rep["model"] = model.name;
      rep["params"] = model.params;
      rep["horizon"] = horizon;
      rep["dt"] = spec.solve.dt;
      rep["converged"] = run.converged;
      rep["solver"] = to_json(run.trajectory.solver_info);
      rep["kkt"] = to_json(run.kkt);
      rep["adjoint_sign"] = to_string(spec.adjoint_sign);
      rep["normalized"] = spec.normalize;
      rep["d_scale"] = res.d_scale;
      rep["d_adj_scale"] = res.d_adj_scale;
      rep["audit_epsilon"] = spec.audit_level();
      rep["norm_labels"] = {model.norms.x_label, model.norms.u_label, model.norms.y_label};
      rep["lambda_at_0"] = vector_to_json(sign * run.trajectory.lambda(0));
      rep["report"] = to_json(run.report);
      write_json(run.dir / "report.json", rep);
      if (spec.dump_trajectory) {
        write_trajectory_dump(run.dir / "trajectory.bin", run.trajectory, spec.adjoint_sign);
      }
    }
    res.runs.push_back(std::move(run));
  }

  res.summary = {{"model", model.name},
                 {"params", model.params},
                 {"epsilons", spec.epsilons},
                 {"all_converged", res.all_converged()},
                 {"runs", rows}};
  if (spec.derivative_check) {
    const DerivativeCheck dc = check_derivatives(model.system, model.cost, 20,
                                                 static_cast<unsigned>(spec.seed));
    res.summary["derivative_check"] = {
        {"jac_x", dc.jac_x}, {"jac_u", dc.jac_u}, {"grad_x", dc.grad_x}, {"grad_u", dc.grad_u}};
  }
  if (write) {
    write_json(spec.out_dir / "summary.json", res.summary);
    detail::write_summary_csv(spec.out_dir / "summary.csv", spec, res.runs);
  }
  return res;
}

/// One row of a cross-bundle comparison.
struct SweepRow {
  std::string source;
  double horizon = 0.0;
  bool converged = true;
  std::vector<double> nu;
  std::vector<double> theta;
  std::vector<double> exceedance;
  std::vector<double> delta_nu;  // against the previous row
  double rho = 0.0;
  double expstab_c = std::numeric_limits<double>::quiet_NaN();
  double excont_c = std::numeric_limits<double>::quiet_NaN();
};

struct SweepSummary {
  std::string model;
  std::vector<double> epsilons;
  std::vector<SweepRow> rows;  // sorted by horizon, stable
  std::vector<std::string> flags;
  bool nu_increasing = true;
  bool theta_increasing = true;
  bool rho_bounded = true;
};

namespace detail {

inline double optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j[key].get<double>();
}

struct LoadedBundle {
  std::string model;
  json params;
  std::vector<double> epsilons;
  std::vector<SweepRow> rows;
};

inline SweepRow row_from_summary(const json& r, const std::string& source) {
  SweepRow row;
  row.source = source;
  row.horizon = r.at("horizon").get<double>();
  row.converged = r.value("converged", true);
  row.nu = r.at("nu").get<std::vector<double>>();
  row.theta = r.at("theta").get<std::vector<double>>();
  row.exceedance = r.at("state_exceedance").get<std::vector<double>>();
  row.rho = r.value("rho", 0.0);
  row.expstab_c = optional_number(r, "expstab_c");
  row.excont_c = optional_number(r, "excont_c");
  return row;
}

/// A bundle is an experiment directory (summary.json) or a single run
/// directory (report.json).
inline LoadedBundle load_bundle(const fs::path& path) {
  LoadedBundle b;
  if (fs::exists(path / "summary.json")) {
    const json s = read_json(path / "summary.json");
    b.model = s.at("model").get<std::string>();
    b.params = s.value("params", json::object());
    b.epsilons = s.at("epsilons").get<std::vector<double>>();
    for (const auto& r : s.at("runs")) b.rows.push_back(row_from_summary(r, path.string()));
    return b;
  }
  if (fs::exists(path / "report.json")) {
    const json r = read_json(path / "report.json");
    b.model = r.at("model").get<std::string>();
    b.params = r.value("params", json::object());
    const json& rep = r.at("report");
    SweepRow row;
    row.source = path.string();
    row.horizon = r.at("horizon").get<double>();
    row.converged = r.value("converged", true);
    for (const auto& f : rep.at("state_intervals")) {
      b.epsilons.push_back(f.at("epsilon").get<double>());
      row.nu.push_back(f.at("length").get<double>());
    }
    for (const auto& f : rep.at("adjoint_intervals")) row.theta.push_back(f.at("length").get<double>());
    row.exceedance = rep.at("state_exceedance").get<std::vector<double>>();
    row.rho = rep.value("rho", 0.0);
    if (rep.contains("expstab") && !rep["expstab"].is_null()) {
      row.expstab_c = number_from(rep["expstab"].at("c"));
    }
    if (rep.contains("excont") && !rep["excont"].is_null()) {
      row.excont_c = number_from(rep["excont"].at("c"));
    }
    b.rows.push_back(std::move(row));
    return b;
  }
  throw ArgumentError(path.string() + " is not a report bundle");
}

inline json params_without_horizon(json p) {
  if (p.is_object()) p.erase("T");
  return p;
}

}  // namespace detail

/// Merges bundles of the same model into one table sorted by horizon and
/// flags missing growth of nu(T) and theta(T), empty intervals, rho growth
/// beyond 10% and non-converged solves. Bundles of different models,
/// parameters or epsilon levels are rejected with ArgumentError.
inline SweepSummary compare_runs(const std::vector<fs::path>& bundles) {
  require(bundles.size() >= 2, "compare needs at least two bundles");
  SweepSummary out;
  json params;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    detail::LoadedBundle b = detail::load_bundle(bundles[i]);
    if (i == 0) {
      out.model = b.model;
      out.epsilons = b.epsilons;
      params = detail::params_without_horizon(b.params);
    } else {
      if (b.model != out.model) {
        throw ArgumentError("incompatible bundles: models '" + out.model + "' and '" + b.model +
                            "'");
      }
      if (detail::params_without_horizon(b.params) != params) {
        throw ArgumentError("incompatible bundles: model parameters differ");
      }
      if (b.epsilons != out.epsilons) {
        throw ArgumentError("incompatible bundles: epsilon levels differ");
      }
    }
    for (auto& r : b.rows) out.rows.push_back(std::move(r));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.horizon < b.horizon; });

  auto fmt = [](double v) { return format_double(v); };
  const std::size_t ne = out.epsilons.size();
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    SweepRow& row = out.rows[k];
    row.delta_nu.assign(ne, 0.0);
    if (!row.converged) out.flags.push_back("solve at T=" + fmt(row.horizon) + " did not converge");
    for (std::size_t e = 0; e < ne; ++e) {
      if (row.nu[e] <= 0.0) {
        out.flags.push_back("empty or degenerate interval at T=" + fmt(row.horizon) +
                            ", eps=" + fmt(out.epsilons[e]));
      }
    }
    if (k == 0) continue;
    const SweepRow& prev = out.rows[k - 1];
    for (std::size_t e = 0; e < ne; ++e) row.delta_nu[e] = row.nu[e] - prev.nu[e];
    if (!(row.horizon > prev.horizon)) continue;
    for (std::size_t e = 0; e < ne; ++e) {
      if (!(row.nu[e] > prev.nu[e])) {
        out.nu_increasing = false;
        out.flags.push_back("nu does not increase from T=" + fmt(prev.horizon) + " to T=" +
                            fmt(row.horizon) + " at eps=" + fmt(out.epsilons[e]));
      }
      if (!(row.theta[e] > prev.theta[e])) {
        out.theta_increasing = false;
        out.flags.push_back("theta does not increase from T=" + fmt(prev.horizon) + " to T=" +
                            fmt(row.horizon) + " at eps=" + fmt(out.epsilons[e]));
      }
    }
  }
  for (std::size_t j = 1; j < out.rows.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (out.rows[j].rho > 1.1 * out.rows[i].rho + 1e-15) {
        out.rho_bounded = false;
        out.flags.push_back("rho grows by more than 10% from T=" + fmt(out.rows[i].horizon) +
                            " to T=" + fmt(out.rows[j].horizon));
      }
    }
  }
  return out;
}

inline json to_json(const SweepSummary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"source", r.source},
                    {"horizon", r.horizon},
                    {"converged", r.converged},
                    {"nu", r.nu},
                    {"theta", r.theta},
                    {"exceedance", r.exceedance},
                    {"delta_nu", r.delta_nu},
                    {"rho", r.rho},
                    {"expstab_c", number_or_null(r.expstab_c)},
                    {"excont_c", number_or_null(r.excont_c)}});
  }
  return {{"model", s.model},
          {"epsilons", s.epsilons},
          {"rows", rows},
          {"nu_increasing", s.nu_increasing},
          {"theta_increasing", s.theta_increasing},
          {"rho_bounded", s.rho_bounded},
          {"flags", s.flags}};
}

}  // namespace turnpike
