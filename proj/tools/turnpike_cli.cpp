// Command-line front end: single runs, horizon sweeps, bundle comparison and
// the heat reference field.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "turnpike/experiment.hpp"
#include "turnpike/io.hpp"

namespace {

using namespace turnpike;

enum Exit : int { kOk = 0, kUsage = 2, kNotConverged = 3, kAssumption = 4 };

constexpr const char* kOutEnv = "TURNPIKE_OUT";

fs::path default_root() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? fs::path(env) : fs::path("turnpike_out");
}

struct RunArgs {
  std::string model = "lq-tracking";
  std::string params;
  std::vector<double> horizons;
  std::vector<double> eps;
  std::optional<double> dt;
  std::string grid;
  std::string out;
  std::string adjoint_sign = "lagrangian";
  double grad_tol = 1e-6;
  int max_iters = 1000;
  double t_c = 1.0;
  std::optional<double> audit_eps;
  std::uint64_t seed = 0;
  bool normalize = false;
  bool no_spectral = false;
  bool no_audits = false;
  bool no_w_norm = false;
  bool no_fit = false;
  bool no_dump = false;
  bool check_derivatives = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a, bool many_horizons) {
  cmd->add_option("--model", a.model, "registered model: lq1d, lq-tracking, heat2d")
      ->capture_default_str();
  cmd->add_option("--params", a.params, "model parameters as JSON text or @file");
  auto* horizon = cmd->add_option("--horizon", a.horizons,
                                  "horizon T; several (increasing) give one run each")
                      ->delimiter(',');
  if (many_horizons) horizon->required()->expected(2, -1);
  cmd->add_option("--eps", a.eps, "epsilon levels (decreasing; default 0.1,0.01,0.001)")
      ->delimiter(',');
  cmd->add_option("--dt", a.dt, "time step (model default if omitted)");
  cmd->add_option("--grid", a.grid, "heat grid as NXxNY, e.g. 30x10");
  cmd->add_option("--out", a.out,
                  std::string("output directory (default $") + kOutEnv + "/<model>)");
  cmd->add_option("--adjoint-sign", a.adjoint_sign,
                  "sign of emitted adjoints: lagrangian or flipped")
      ->capture_default_str();
  cmd->add_option("--grad-tol", a.grad_tol, "stationarity tolerance")->capture_default_str();
  cmd->add_option("--max-iters", a.max_iters, "optimizer iteration cap")->capture_default_str();
  cmd->add_option("--t-c", a.t_c, "controllability time for the Gramian certificate")
      ->capture_default_str();
  cmd->add_option("--audit-eps", a.audit_eps, "epsilon defining the audited interval");
  cmd->add_option("--seed", a.seed, "seed for randomized checks")->capture_default_str();
  cmd->add_flag("--normalize", a.normalize, "measure deviations relative to the turnpike size");
  cmd->add_flag("--no-spectral", a.no_spectral, "skip the spectral split");
  cmd->add_flag("--no-audits", a.no_audits, "skip the bound audits");
  cmd->add_flag("--no-w-norm", a.no_w_norm, "skip the W-norm");
  cmd->add_flag("--no-fit", a.no_fit, "skip the exponential fit");
  cmd->add_flag("--no-dump", a.no_dump, "do not write trajectory.bin");
  cmd->add_flag("--check-derivatives", a.check_derivatives,
                "finite-difference check of the model derivatives");
}

json parse_params(const std::string& text) {
  if (text.empty()) return json::object();
  if (text.front() == '@') return read_json(text.substr(1));
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("--params: ") + e.what());
  }
}

void apply_grid(const std::string& grid, json& params) {
  if (grid.empty()) return;
  int nx = 0, ny = 0;
  char sep = 0;
  if (std::sscanf(grid.c_str(), "%d%c%d", &nx, &sep, &ny) != 3 || (sep != 'x' && sep != 'X')) {
    throw ArgumentError("--grid expects NXxNY, got '" + grid + "'");
  }
  params["nx"] = nx;
  params["ny"] = ny;
}

ExperimentSpec make_spec(const RunArgs& a) {
  ExperimentSpec s;
  s.model = a.model;
  s.params = parse_params(a.params);
  if (!a.grid.empty()) {
    if (a.model != "heat2d") throw ArgumentError("--grid applies to heat2d only");
    apply_grid(a.grid, s.params);
  }
  s.horizons = a.horizons;
  if (!a.eps.empty()) s.epsilons = a.eps;
  s.dt = a.dt;
  s.solve.grad_tol = a.grad_tol;
  s.solve.max_outer_iters = a.max_iters;
  s.out_dir = a.out.empty() ? default_root() / a.model : fs::path(a.out);
  s.seed = a.seed;
  s.spectral = !a.no_spectral;
  s.audits = !a.no_audits;
  s.w_norm = !a.no_w_norm;
  s.fits = !a.no_fit;
  s.dump_trajectory = !a.no_dump;
  s.derivative_check = a.check_derivatives;
  s.normalize = a.normalize;
  s.audit_epsilon = a.audit_eps;
  s.t_c = a.t_c;
  s.adjoint_sign = adjoint_sign_from_string(a.adjoint_sign);
  return s;
}

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_gnuplot_script(const ExperimentResult& r) {
  std::ofstream gp(r.spec.out_dir / "norms.gp");
  gp << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't'\n";
  for (const auto& run : r.runs) {
    const std::string f = horizon_dir_name(run.horizon) + "/norms.csv";
    gp << "set title 'T = " << cell(run.horizon) << "'\n"
       << "plot '" << f << "' using 1:2 with lines, '' using 1:3 with lines, "
       << "'' using 1:4 with lines, '' using 1:5 with lines\n"
       << "pause -1\n";
  }
}

void print_experiment(const ExperimentResult& r) {
  std::cout << "model " << r.model.name << ", output " << r.spec.out_dir.string() << '\n';
  std::cout << "steady: |x_bar| = " << cell(r.model.norms.x.norm(r.steady.x_bar))
            << ", |u_bar| = " << cell(r.model.norms.u.norm(r.steady.u_bar))
            << ", |lambda_bar| = " << cell(r.model.norms.y.norm(r.steady.lambda_bar)) << '\n';
  std::cout << "T\teps\tnu\ttheta\texceed\tfit_mu\trho\tconverged\n";
  for (const auto& run : r.runs) {
    const TurnpikeReport& rep = run.report;
    for (std::size_t e = 0; e < r.spec.epsilons.size(); ++e) {
      std::cout << cell(run.horizon) << '\t' << cell(r.spec.epsilons[e]) << '\t'
                << cell(rep.state_intervals[e].length) << '\t'
                << cell(rep.adjoint_intervals[e].length) << '\t'
                << cell(rep.state_exceedance[e]) << '\t'
                << (rep.fit ? cell(rep.fit->mu) : std::string("-")) << '\t' << cell(rep.rho)
                << '\t' << (run.converged ? "yes" : "NO") << '\n';
    }
  }
}

void print_summary(const SweepSummary& s) {
  std::cout << "model " << s.model << '\n' << "T\teps\tnu\tdelta_nu\ttheta\trho\texpstab_c\texcont_c\n";
  for (const auto& row : s.rows) {
    for (std::size_t e = 0; e < s.epsilons.size(); ++e) {
      std::cout << cell(row.horizon) << '\t' << cell(s.epsilons[e]) << '\t' << cell(row.nu[e])
                << '\t' << cell(row.delta_nu[e]) << '\t' << cell(row.theta[e]) << '\t'
                << cell(row.rho) << '\t' << cell(row.expstab_c) << '\t' << cell(row.excont_c)
                << '\n';
    }
  }
  for (const auto& f : s.flags) std::cout << "flag: " << f << '\n';
}

int run_command(const RunArgs& a, bool sweep) {
  ExperimentSpec spec = make_spec(a);
  const ExperimentResult r = run_experiment(spec);
  write_gnuplot_script(r);
  print_experiment(r);
  if (sweep && r.runs.size() >= 2) {
    std::vector<fs::path> dirs;
    for (const auto& run : r.runs) dirs.push_back(run.dir);
    const SweepSummary s = compare_runs(dirs);
    write_json(r.spec.out_dir / "comparison.json", to_json(s));
    print_summary(s);
  }
  if (!r.all_converged()) {
    std::cerr << "warning: at least one solve did not converge (bundle flagged)\n";
    return kNotConverged;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turnpike experiments: long-horizon optimal control solves and diagnostics"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "solve one or more horizons and write a report bundle");
  add_run_options(run, run_args, false);

  RunArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "horizon sweep with a cross-horizon comparison");
  add_run_options(sweep, sweep_args, true);

  std::vector<std::string> bundles;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "compare report bundles of the same model");
  compare->add_option("bundles", bundles, "bundle directories")->required()->expected(2, -1);
  compare->add_option("--out", compare_out, "write the comparison as JSON to this file");

  std::string ref_grid;
  std::string ref_params;
  std::string ref_out;
  auto* ref = app.add_subcommand("reference-field", "write the heat reference field as CSV");
  ref->add_option("--grid", ref_grid, "grid as NXxNY (default 30x10)");
  ref->add_option("--params", ref_params, "heat parameters as JSON text or @file");
  ref->add_option("--out", ref_out,
                  std::string("CSV file (default $") + kOutEnv + "/reference_field.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_command(run_args, false);
    if (*sweep) return run_command(sweep_args, true);
    if (*compare) {
      std::vector<fs::path> paths(bundles.begin(), bundles.end());
      const SweepSummary s = compare_runs(paths);
      print_summary(s);
      if (!compare_out.empty()) write_json(compare_out, to_json(s));
      return kOk;
    }
    if (*ref) {
      json params = parse_params(ref_params);
      apply_grid(ref_grid, params);
      const heat::HeatConfig cfg = detail::heat_config_from_json(params);
      const fs::path out = ref_out.empty() ? default_root() / "reference_field.csv" : fs::path(ref_out);
      write_reference_csv(out, cfg);
      std::cout << "wrote " << out.string() << '\n';
      return kOk;
    }
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DecompositionError& e) {
    std::cerr << "assumption violated: " << e.what() << '\n';
    return kAssumption;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNotConverged;
  } catch (const StiffStepError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
