#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "mvib/experiment.hpp"

using namespace mvib;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mvib_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig smoke_config(const fs::path& out) {
  ExperimentConfig c = parse_config(R"({
    "seeds": [7],
    "generator": {"n_views": 2},
    "n_samples": 300,
    "probe_samples": 1500,
    "probe_epochs": [1],
    "model": {"encoder_widths": [8], "bottleneck_hidden": 6, "bottleneck_dim": 3},
    "train": {"epochs": 2, "warmup_epochs": 1}
  })");
  c.output_dir = out.string();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MVIB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAndRejectsUnknownKeys) {
  const ExperimentConfig c = parse_config(R"({"seeds": [3, 4], "generator": {"n_views": 2}})");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(c.resolved_model().n_views, 2u);
  EXPECT_EQ(c.train.epochs, 200u);
  EXPECT_THROW(parse_config(R"({"sedes": [3]})"), InvalidArgument);
  EXPECT_THROW(parse_config("[1]"), InvalidArgument);
  EXPECT_THROW(parse_config("{"), InvalidArgument);
  EXPECT_THROW(parse_config(R"({"seeds": "x"})"), InvalidArgument);
}

TEST(Config, FlagsOverrideTheFile) {
  ExperimentConfig c = parse_config(R"({"seeds": [1, 2], "output_dir": "a", "train": {"epochs": 5}})");
  apply_overrides(c, {9, std::string("b"), std::string("ce+vsd"), 3});
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{9}));
  EXPECT_EQ(c.output_dir, "b");
  EXPECT_EQ(c.loss_modes, (std::vector<std::string>{"ce+vsd"}));
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_THROW(apply_overrides(c, {{}, {}, std::string("bogus"), {}}), InvalidArgument);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.loss_modes = {"ce+vcd+vmd"};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.generator.n_views = 2;
  EXPECT_NO_THROW(c.validate());
  c.probe_samples = 1000;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.probe_samples = 0;
  EXPECT_NO_THROW(c.validate());
  c.seeds.clear();
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Verify, DefaultSuitePasses) {
  const VerifyOutcome o = verify_identities({});
  EXPECT_EQ(o.exit_code, kExitOk);
  EXPECT_TRUE(o.failed.empty());
  ASSERT_FALSE(o.max_residuals.empty());
  for (const auto& [name, r] : o.max_residuals) EXPECT_LT(r, 1e-10) << name;
}

TEST(Verify, BrokenChainRuleIsNamed) {
  VerifyHooks hooks;
  hooks.chain_rule_cmi = [](const JointPMF& p, const Names& a, const Names& b, const Names& c) {
    return conditional_mutual_info(p, a, b, c) + 1e-6;
  };
  const fs::path out = scratch("verify_broken");
  ExperimentConfig c;
  c.output_dir = out.string();
  c.verify.n_systems = 20;
  std::ostringstream log;
  EXPECT_EQ(run_verify(c, log, hooks), kExitFailure);
  EXPECT_NE(log.str().find("chain-rule: fail"), std::string::npos) << log.str();
  EXPECT_NE(log.str().find("failed identities: chain-rule"), std::string::npos) << log.str();
  const auto report = nlohmann::json::parse(detail::read_text(out / "verify.json"));
  EXPECT_EQ(report["identities"]["chain-rule"]["status"], "fail");
  fs::remove_all(out);
}

TEST(Verify, SingleViewSettingReportsTheDegeneration) {
  VerifySettings s;
  s.n_views = 1;
  s.n_systems = 20;
  const VerifyOutcome o = verify_identities(s);
  EXPECT_EQ(o.exit_code, kExitOk);
  bool found = false;
  for (const auto& [name, r] : o.max_residuals) found |= name == "corollary2-n1";
  EXPECT_TRUE(found);
}

TEST(Experiment, SmokeRunWritesEverythingDeterministically) {
  const fs::path out = scratch("smoke");
  const ExperimentConfig c = smoke_config(out);
  std::ostringstream log;
  const ExperimentOutcome first = run_experiment(c, log);
  EXPECT_EQ(first.exit_code, kExitOk);
  for (const char* mode : {"ce-only", "ce+mv2d"}) {
    const fs::path dir = out / mode / "seed_7";
    for (const char* f : {"metrics.csv", "probe.json", "checkpoint.bin"}) EXPECT_TRUE(fs::exists(dir / f)) << dir / f;
  }
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  const std::string metrics = detail::read_text(out / "ce+mv2d" / "seed_7" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("# config: ", 0), 0u);
  const auto probe = nlohmann::json::parse(detail::read_text(out / "ce+mv2d" / "seed_7" / "probe.json"));
  EXPECT_TRUE(probe["probes"].contains("1"));
  EXPECT_TRUE(probe["probes"].contains("2"));

  std::ostringstream again;
  run_experiment(c, again);
  EXPECT_EQ(detail::read_text(out / "ce+mv2d" / "seed_7" / "metrics.csv"), metrics);
  EXPECT_EQ(again.str(), log.str());

  std::ostringstream eval_log;
  EXPECT_EQ(run_eval(c, eval_log), kExitOk);
  const auto eval = nlohmann::json::parse(detail::read_text(out / "eval.json"));
  EXPECT_DOUBLE_EQ(eval["results"]["ce+mv2d/seed_7"]["accuracy"].get<double>(), first.runs[1].test_accuracy);

  std::ostringstream report_log;
  EXPECT_EQ(run_report(c, report_log), kExitOk);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  fs::remove_all(out);
}

TEST(Experiment, DivergenceIsRecorded) {
  const fs::path out = scratch("diverge");
  ExperimentConfig c = smoke_config(out);
  c.train.optimizer.kind = "sgd-momentum";
  c.train.optimizer.lr = 1e6;
  c.train.epochs = 10;
  c.loss_modes = {"ce-only"};
  std::ostringstream log;
  const ExperimentOutcome o = run_experiment(c, log);
  EXPECT_EQ(o.exit_code, kExitDivergence);
  EXPECT_EQ(o.runs[0].status.rfind("diverged", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "ce-only" / "seed_7" / "metrics.csv"));
  fs::remove_all(out);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  fs::create_directories(out);
  EXPECT_EQ(run_cli("--out " + (out / "v").string() + " verify"), 0);
  EXPECT_TRUE(fs::exists(out / "v" / "verify.json"));
  EXPECT_EQ(run_cli("--bogus-flag verify"), 2);
  EXPECT_EQ(run_cli("--loss-mode nonsense verify"), 2);

  const fs::path bad = out / "bad.json";
  detail::write_text(bad, R"({"unknown_key": 1})");
  EXPECT_EQ(run_cli("--config " + bad.string() + " verify"), 2);

  const fs::path diverge = out / "diverge.json";
  detail::write_text(diverge, R"({"n_samples": 300, "probe_samples": 0, "loss_modes": ["ce-only"],
    "model": {"encoder_widths": [8]},
    "train": {"epochs": 10, "warmup_epochs": 1, "optimizer": {"kind": "sgd-momentum", "lr": 1e6}}})");
  EXPECT_EQ(run_cli("--config " + diverge.string() + " --out " + (out / "d").string() + " train"), 3);

  EXPECT_EQ(run_cli("--out " + (out / "g").string() + " gen-data"), 0);
  EXPECT_TRUE(fs::exists(out / "g" / "data" / "train.csv"));
  EXPECT_EQ(run_cli("--out " + (out / "empty").string() + " eval"), 1);
  fs::remove_all(out);
}
