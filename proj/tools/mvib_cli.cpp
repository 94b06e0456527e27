// mvib: verify identities, generate data, train, evaluate and report.
//
//   mvib [--config file.json] [--seed N] [--out DIR] [--loss-mode M] [--epochs N] <command>
//
// Without a command the config's "command" field is used.
// Exit status: 0 ok, 1 identity failure, 2 usage error, 3 training divergence.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "mvib/experiment.hpp"

namespace {

int dispatch(const std::string& command, const mvib::ExperimentConfig& config) {
  if (command == "verify") return mvib::run_verify(config, std::cout);
  if (command == "gen-data") return mvib::run_gen_data(config, std::cout);
  if (command == "train") return mvib::run_experiment(config, std::cout).exit_code;
  if (command == "eval") return mvib::run_eval(config, std::cout);
  if (command == "report") return mvib::run_report(config, std::cout);
  std::cerr << "unknown command '" << command << "'\n";
  return mvib::kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view information bottleneck toolkit"};
  app.set_version_flag("--version", "mvib 1.0");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> loss_mode;
  std::optional<std::size_t> epochs;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Run a single seed (overrides the config's seed list)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--loss-mode", loss_mode, "ce-only | ce+vsd | ce+vcd+vmd | ce+mv2d");
  app.add_option("--epochs", epochs, "Training epochs");

  std::string command;
  const std::pair<const char*, const char*> commands[] = {
      {"verify", "Check the information identities on random discrete systems"},
      {"gen-data", "Write the synthetic splits as CSV"},
      {"train", "Train every (loss mode, seed) run and write metrics, checkpoints and probes"},
      {"eval", "Evaluate saved checkpoints on the test split"},
      {"report", "Decompose the discrete world and flatten summary.json if present"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough()->callback([&command, name] { command = name; });
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mvib::kExitUsage;
  }

  try {
    mvib::ExperimentConfig config = config_path.empty() ? mvib::ExperimentConfig{} : mvib::load_config(config_path);
    mvib::apply_overrides(config, {seed, out, loss_mode, epochs});
    if (command.empty()) command = config.command;
    config.command = command;
    config.validate();
    return dispatch(command, config);
  } catch (const mvib::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mvib::kExitUsage;
  } catch (const mvib::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return mvib::kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mvib::kExitFailure;
  }
}
