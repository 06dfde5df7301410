#include "turnpike/experiment.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

namespace turnpike {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("turnpike_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentSpec lq_spec(std::vector<double> horizons, const fs::path& out = {}) {
  ExperimentSpec spec;
  spec.model = "lq-tracking";
  spec.horizons = std::move(horizons);
  spec.dt = 0.01;
  spec.solve.grad_tol = 1e-8;
  spec.epsilons = {1e-2};
  spec.out_dir = out;
  return spec;
}

GTEST_TEST(CliReportTest, ZeroProblemSitsOnTheTurnpike) {
  auto spec = lq_spec({5.0});
  spec.params = {{"x_d", json::array({0.0})}};
  spec.epsilons = {0.1, 1e-3};
  const auto res = run_experiment(spec);
  ASSERT_EQ(res.runs.size(), 1u);
  const auto& run = res.runs[0];
  EXPECT_TRUE(run.converged);
  EXPECT_EQ(run.trajectory.states.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(run.trajectory.adjoints.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(run.series.d.maxCoeff(), 0.0);
  for (const auto& f : run.report.state_intervals) EXPECT_DOUBLE_EQ(f.length, 5.0);
  for (const auto& f : run.report.adjoint_intervals) EXPECT_DOUBLE_EQ(f.length, 5.0);
  for (double ex : run.report.state_exceedance) EXPECT_EQ(ex, 0.0);
}

GTEST_TEST(CliReportTest, LqSweepGrows) {
  const fs::path dir = scratch("sweep");
  const auto res = run_experiment(lq_spec({10.0, 20.0, 40.0}, dir));
  ASSERT_TRUE(res.all_converged());
  std::vector<fs::path> dirs;
  for (const auto& r : res.runs) dirs.push_back(r.dir);
  const SweepSummary s = compare_runs(dirs);
  EXPECT_TRUE(s.nu_increasing);
  EXPECT_TRUE(s.theta_increasing);
  EXPECT_TRUE(s.flags.empty()) << to_json(s).dump(2);
  ASSERT_EQ(s.rows.size(), 3u);
  // Each doubling of the horizon adds about the added length to nu.
  EXPECT_NEAR(s.rows[1].delta_nu[0], 10.0, 0.5);
  EXPECT_NEAR(s.rows[2].delta_nu[0], 20.0, 0.5);
  // The experiment bundle itself loads the same rows.
  const SweepSummary whole = compare_runs({dir, dirs[0]});
  EXPECT_EQ(whole.rows.size(), 4u);
}

GTEST_TEST(CliReportTest, IdenticalBundlesCompareClean) {
  const fs::path dir = scratch("same");
  const auto res = run_experiment(lq_spec({10.0}, dir));
  const fs::path run = res.runs[0].dir;
  const SweepSummary s = compare_runs({run, run});
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.rows[1].delta_nu[0], 0.0);
  EXPECT_EQ(s.rows[0].rho, s.rows[1].rho);
  EXPECT_EQ(s.rows[0].theta, s.rows[1].theta);
  EXPECT_TRUE(s.rho_bounded);
}

GTEST_TEST(CliReportTest, IncompatibleBundles) {
  const fs::path a = scratch("inc_a");
  const fs::path b = scratch("inc_b");
  const fs::path c = scratch("inc_c");
  run_experiment(lq_spec({5.0}, a));
  auto other = lq_spec({5.0}, b);
  other.model = "lq1d";
  run_experiment(other);
  auto eps = lq_spec({5.0}, c);
  eps.epsilons = {0.1};
  run_experiment(eps);
  EXPECT_THROW(compare_runs({a, b}), ArgumentError);
  EXPECT_THROW(compare_runs({a, c}), ArgumentError);
  EXPECT_THROW(compare_runs({a}), ArgumentError);
  EXPECT_THROW(compare_runs({a, scratch("empty")}), ArgumentError);
}

GTEST_TEST(CliReportTest, NonTurnpikeModelIsFlagged) {
  // Unstable dynamics with no state cost: the optimum lets the state drift
  // away from the steady point, so no interval exists and nothing grows.
  ExperimentSpec spec;
  spec.model = "lq1d";
  spec.params = {{"a", 1.0}, {"q", 0.0}, {"x0", 1.0}};
  spec.horizons = {5.0, 10.0};
  spec.dt = 0.01;
  spec.epsilons = {1e-2};
  spec.out_dir = scratch("nonturnpike");
  const auto res = run_experiment(spec);
  std::vector<fs::path> dirs;
  for (const auto& r : res.runs) dirs.push_back(r.dir);
  const SweepSummary s = compare_runs(dirs);
  EXPECT_FALSE(s.nu_increasing);
  EXPECT_FALSE(s.flags.empty());
  bool empty_flag = false;
  for (const auto& f : s.flags) empty_flag |= f.find("empty") != std::string::npos;
  EXPECT_TRUE(empty_flag);
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TURNPIKE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

GTEST_TEST(CliReportTest, ExitCodes) {
  const fs::path dir = scratch("exit");
  const std::string out = (dir / "lq").string();
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("run --model nope --out " + out), 2);
  EXPECT_EQ(cli("run --model lq-tracking --horizon 5 --dt 0.3 --out " + out), 2);
  EXPECT_EQ(cli("sweep --model lq-tracking --horizon 5 --out " + out), 2);
  EXPECT_EQ(cli("run --model lq-tracking --horizon 5 --dt 0.01 --eps 0.01 --out " + out), 0);
  EXPECT_TRUE(fs::exists(dir / "lq" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "lq" / horizon_dir_name(5.0) / "trajectory.bin"));
  EXPECT_EQ(cli("run --model lq-tracking --horizon 5 --dt 0.01 --grad-tol 1e-14 --max-iters 1 "
                "--out " + (dir / "cap").string()),
            3);
  EXPECT_EQ(cli("compare " + out + " " + (dir / "nowhere").string()), 2);
  EXPECT_EQ(cli("compare " + out + " " + out + " --out " + (dir / "cmp.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "cmp.json"));
  EXPECT_EQ(cli("reference-field --grid 12x4 --out " + (dir / "ref.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ref.csv"));
}

}  // namespace
}  // namespace turnpike
