#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.h"
#include "koopctl/errors.h"
#include "koopctl/io.h"
#include "koopctl/pipeline.h"

namespace koopctl {
namespace {

namespace fs = std::filesystem;

RunConfig cfg_in(const std::string& preset, const std::string& dir) {
  RunConfig c = RunConfig::preset(preset);
  c.output_dir = testing::scratch_dir(dir).string();
  return c;
}

int count_rows(const fs::path& csv) {
  const std::string s = read_text_file(csv);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n')) - 1;
}

TEST(Config, PresetsValidate) {
  for (const char* p : {"cooked_up", "cooked_up_xy", "pendulum"}) EXPECT_NO_THROW(RunConfig::preset(p).validate());
  EXPECT_THROW(RunConfig::preset("nope"), ValidationError);
}

TEST(Config, JsonOverridesAndRoundTrip) {
  const Json j = {{"preset", "pendulum"},
                  {"c_r", 0.03},
                  {"sampling", {{"d", 100}, {"seed", 8}}},
                  {"region", {{"mode", "heuristic"}, {"Rz", 5.0}}},
                  {"theorem", 2}};
  const RunConfig c = RunConfig::from_json(j);
  EXPECT_EQ(c.example, "pendulum");
  EXPECT_EQ(c.c_r, 0.03);
  EXPECT_EQ(c.samples_per_batch, 100);
  EXPECT_EQ(c.seed, 8u);
  EXPECT_EQ(c.region.mode, "heuristic");
  EXPECT_EQ(c.theorem, 2);
  EXPECT_EQ(RunConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(Config, RejectsBadValues) {
  RunConfig c = RunConfig::preset("cooked_up");
  c.c_r = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RunConfig::preset("cooked_up");
  c.delta = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RunConfig::preset("cooked_up");
  c.samples_per_batch = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RunConfig::preset("cooked_up");
  c.theorem = 3;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Collect, FilesAndDeterminism) {
  const RunConfig c = cfg_in("cooked_up", "collect");
  ASSERT_EQ(cmd_collect(c).exit_code, kExitOk);
  const fs::path dir = c.output_path() / "samples";
  EXPECT_EQ(count_rows(dir / "samples_u0.csv"), 5000);
  EXPECT_EQ(count_rows(dir / "samples_u1.csv"), 5000);
  const std::string first = read_text_file(dir / "samples_u1.csv");
  cmd_collect(c);
  EXPECT_EQ(read_text_file(dir / "samples_u1.csv"), first);
  EXPECT_TRUE(fs::exists(dir / "manifest_collect.json"));
}

TEST(Collect, SmokeSingleRow) {
  RunConfig c = cfg_in("cooked_up", "collect1");
  c.samples_per_batch = 1;
  cmd_collect(c);
  EXPECT_EQ(count_rows(c.output_path() / "samples" / "samples_u0.csv"), 1);
}

TEST(Fit, MissingDataIsBadInput) {
  const RunConfig c = cfg_in("cooked_up", "fit_missing");
  EXPECT_EQ(cmd_fit(c).exit_code, kExitBadInput);
}

class CookedUpPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg = new RunConfig(cfg_in("cooked_up", "pipeline"));
    ASSERT_EQ(cmd_collect(*cfg).exit_code, kExitOk);
    ASSERT_EQ(cmd_fit(*cfg).exit_code, kExitOk);
  }
  static void TearDownTestSuite() { delete cfg; }
  static RunConfig* cfg;
};
RunConfig* CookedUpPipeline::cfg = nullptr;

TEST_F(CookedUpPipeline, DesignFeasibleWithDecoupledGain) {
  const CommandResult r = cmd_design(*cfg);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const Json j = read_json_file(cfg->output_path() / "design.json");
  const Matrix K = matrix_from_json(j.at("design").at("K"));
  EXPECT_LT(std::abs(K(0, 0)), 0.05);
  EXPECT_TRUE(fs::exists(cfg->output_path() / "roa.dat"));
  EXPECT_TRUE(fs::exists(cfg->output_path() / "manifest_design.json"));
}

TEST_F(CookedUpPipeline, AbsurdRemainderIsInfeasible) {
  RunConfig c = *cfg;
  c.c_r = 10.0;
  const CommandResult r = cmd_design(c);
  EXPECT_EQ(r.exit_code, kExitInfeasible);
  EXPECT_NE(r.message.find("constraint"), std::string::npos) << r.message;
}

TEST_F(CookedUpPipeline, VerifyConvergesAndIsDeterministic) {
  ASSERT_EQ(cmd_design(*cfg).exit_code, kExitOk);
  const CommandResult r = cmd_verify(*cfg);
  EXPECT_EQ(r.exit_code, kExitOk) << r.message;
  const Json v = read_json_file(cfg->output_path() / "verify.json");
  EXPECT_EQ(v["design"]["converged"], 20);
  EXPECT_EQ(v["design"]["audit_passed"], 20);
  EXPECT_TRUE(v.contains("lqr"));
  std::map<std::string, std::string> before;
  for (const char* f : {"surrogate.json", "design.json", "verify.json", "roa.dat"}) {
    before[f] = read_text_file(cfg->output_path() / f);
  }
  cmd_fit(*cfg);
  cmd_design(*cfg);
  cmd_verify(*cfg);
  for (const auto& [f, text] : before) EXPECT_EQ(read_text_file(cfg->output_path() / f), text) << f;
  for (const char* m : {"manifest_fit.json", "manifest_design.json", "manifest_verify.json"}) {
    const Json j = read_json_file(cfg->output_path() / m);
    EXPECT_TRUE(j.contains("inputs"));
    EXPECT_TRUE(j.contains("config"));
  }
}

TEST_F(CookedUpPipeline, FarStartIsRecordedNotAsserted) {
  const FittedModel model = fit_model(*cfg);
  const DesignRun run = run_design(*cfg, model);
  ASSERT_TRUE(run.design);
  SimOptions sim;
  sim.horizon = 5.0;
  const BatchVerification b =
      verify_batch(model.plant, *run.design, model.lifting, {Vector(Eigen::Vector2d(400, 400))}, sim);
  EXPECT_EQ(b.total, 1);
  EXPECT_FALSE(b.to_json()["trajectories"][0]["termination"].get<std::string>().empty());
}

TEST(Design, PendulumBothTheoremsFeasible) {
  RunConfig c = cfg_in("pendulum", "pend");
  const FittedModel model = fit_model(c);
  for (int theorem : {1, 2}) {
    c.theorem = theorem;
    const DesignRun run = run_design(c, model);
    EXPECT_TRUE(run.design) << run.outcome.diagnosis;
  }
}

TEST(Design, HeuristicPendulumTheorem2Schedules) {
  RunConfig c = cfg_in("pendulum", "pend_h");
  c.region.mode = "heuristic";
  c.region.Rz = 5.0;
  c.theorem = 2;
  const FittedModel model = fit_model(c);
  Json log;
  const UncertaintyRegion r = make_region(c, model.surrogate, &log);
  EXPECT_NEAR(spectral_norm(r.Q()), 1.0, 1e-12);
  EXPECT_LT(max_eigenvalue(r.Q()), 0.0);
  // Shape step runs without the invariance inequality; the final design has it.
  bool capped = false;
  for (const auto& con : log.at("step1_constraints")) {
    EXPECT_NE(con.at("name"), "invariance");
    capped = capped || con.at("name") == "trace_cap";
  }
  EXPECT_TRUE(capped);
  const DesignRun run = run_design(c, model);
  ASSERT_TRUE(run.design) << run.outcome.diagnosis;
  EXPECT_TRUE(run.outcome.problem.has_constraint("invariance"));
  EXPECT_TRUE(run.design->scheduled());
}

// Starts with V <= 0.99 never leave V <= 1 + 1e-4 over the full horizon.
TEST(Design, RoaInvarianceMonteCarlo) {
  struct Item {
    std::string preset;
    std::string mode;
    int theorem;
  };
  for (const Item& it : {Item{"cooked_up", "explicit", 1}, Item{"pendulum", "explicit", 1},
                         Item{"pendulum", "explicit", 2}, Item{"pendulum", "heuristic", 1},
                         Item{"pendulum", "heuristic", 2}}) {
    RunConfig c = cfg_in(it.preset, "inv");
    c.theorem = it.theorem;
    if (it.mode == "heuristic") {
      c.region.mode = "heuristic";
      c.region.Rz = 5.0;
    }
    const FittedModel model = fit_model(c);
    const DesignRun run = run_design(c, model);
    ASSERT_TRUE(run.design) << run.outcome.diagnosis;
    const double cap = c.roa_cap > 0 ? c.roa_cap : default_ray_cap(model.plant.state_box());
    const auto starts = sample_roa_starts(*run.design, model.lifting, 100, 23, cap, 0.99);
    ASSERT_EQ(starts.size(), 100u);
    const BatchVerification b = verify_batch(model.plant, *run.design, model.lifting, starts, SimOptions{});
    double worst = 0.0;
    for (const Trajectory& t : b.trajectories)
      for (double v : t.V) worst = std::max(worst, v);
    EXPECT_LE(worst, 1.0 + 1e-4) << it.preset << " " << it.mode << " theorem " << it.theorem;
  }
}

#ifdef KOOPCTL_CLI
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(KOOPCTL_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = testing::scratch_dir("cli");
  const std::string out = " -o " + dir.string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("design --theorem 3" + out), kExitBadInput);
  EXPECT_EQ(run_cli("fit -p cooked_up" + out), kExitBadInput);
  EXPECT_EQ(run_cli("collect -p cooked_up -d 500" + out), kExitOk);
  EXPECT_EQ(run_cli("fit -p cooked_up" + out), kExitOk);
  EXPECT_EQ(run_cli("design -p cooked_up --c-r 10" + out), kExitInfeasible);
  EXPECT_EQ(run_cli("verify -p cooked_up" + out), kExitBadInput);
  EXPECT_EQ(run_cli("design -p cooked_up" + out), kExitOk);
  EXPECT_EQ(run_cli("verify -p cooked_up --starts 5 --no-lqr" + out), kExitOk);
  EXPECT_EQ(run_cli("reproduce fig9" + out), kExitBadInput);
}
#endif

}  // namespace
}  // namespace koopctl
