#pragma once

// Config-driven commands behind the command-line tool.
//
// Config precedence, lowest to highest: built-in defaults, the JSON config
// file, then command-line flags. Every output file embeds the resolved config.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvib/checkpoint.hpp"
#include "mvib/model.hpp"
#include "mvib/oracle.hpp"
#include "mvib/probe.hpp"
#include "mvib/random_pmf.hpp"
#include "mvib/synth.hpp"
#include "mvib/train.hpp"
#include "mvib/venn.hpp"

namespace mvib {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitDivergence = 3 };

struct VerifySettings {
  std::size_t n_systems = 200;
  std::uint64_t seed = 2024;
  std::size_t n_views = 2;  // 1 also runs the single-view degeneration on its own
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VerifySettings, n_systems, seed, n_views)

struct ExperimentConfig {
  std::string command = "train";
  GeneratorSpec generator;
  ModelSpec model;  // n_views, input_dims and n_classes follow the generator when input_dims is empty
  TrainConfig train;
  DiscreteSpec discrete;
  VerifySettings verify;
  std::string output_dir = "mvib_out";
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> loss_modes{"ce-only", "ce+mv2d"};
  std::size_t n_samples = 3000;
  std::size_t probe_samples = 5000;
  std::vector<std::size_t> probe_epochs{10};
  std::size_t probe_bins = 3;
  bool linear_probes = true;

  ModelSpec resolved_model() const {
    ModelSpec m = model;
    if (m.input_dims.empty()) {
      m.n_views = generator.n_views;
      m.input_dims.assign(generator.n_views, generator.view_dim());
      m.n_classes = generator.n_classes;
    }
    return m;
  }

  void validate() const {
    generator.validate();
    train.validate();
    const ModelSpec m = resolved_model();
    m.validate();
    if (m.n_views != generator.n_views || m.n_classes != generator.n_classes) {
      throw InvalidArgument("config: model and generator disagree on views or classes");
    }
    for (std::size_t d : m.input_dims) {
      if (d != generator.view_dim()) throw InvalidArgument("config: model input dims must match the generator view dim");
    }
    if (seeds.empty()) throw InvalidArgument("config: seeds must be nonempty");
    if (loss_modes.empty()) throw InvalidArgument("config: loss_modes must be nonempty");
    for (const auto& name : loss_modes) {
      const LossMode mode = parse_loss_mode(name);
      if (mode == LossMode::kCeVcdVmd && generator.n_views != 2) {
        throw InvalidArgument("config: loss mode ce+vcd+vmd needs exactly two views");
      }
    }
    if (n_samples < 10) throw InvalidArgument("config: n_samples must be >= 10");
    if (probe_bins < 2) throw InvalidArgument("config: probe_bins must be >= 2");
    if (probe_samples > 0) {
      // largest plug-in tables: y x z_1 .. z_n, and binned readout x nuisance
      const double cells = std::max(std::pow(static_cast<double>(m.n_classes), static_cast<double>(m.n_views + 1)),
                                    static_cast<double>(probe_bins * probe_bins));
      if (static_cast<double>(probe_samples) < static_cast<double>(kMinSamplesPerCell) * cells) {
        throw InvalidArgument("config: probe_samples " + std::to_string(probe_samples) + " is below " +
                              std::to_string(kMinSamplesPerCell) + " x " + std::to_string(static_cast<std::size_t>(cells)) +
                              " plug-in cells");
      }
    }
    if (verify.n_views != 1 && verify.n_views != 2) throw InvalidArgument("config: verify.n_views must be 1 or 2");
    if (output_dir.empty()) throw InvalidArgument("config: output_dir must be nonempty");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, command, generator, model, train, discrete, verify,
                                                output_dir, seeds, loss_modes, n_samples, probe_samples, probe_epochs,
                                                probe_bins, linear_probes)

/// Parses a config; unknown top-level keys are rejected.
inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
  const nlohmann::json known = ExperimentConfig{};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

struct FlagOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> loss_mode;
  std::optional<std::size_t> epochs;
};

inline void apply_overrides(ExperimentConfig& config, const FlagOverrides& flags) {
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.out) config.output_dir = *flags.out;
  if (flags.loss_mode) {
    (void)parse_loss_mode(*flags.loss_mode);
    config.loss_modes = {*flags.loss_mode};
  }
  if (flags.epochs) config.train.epochs = *flags.epochs;
}

inline std::string config_echo(const ExperimentConfig& config) { return nlohmann::json(config).dump(); }

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verify

/// Conditional mutual information as seen by one identity check.
using CmiFunction = std::function<double(const JointPMF&, const Names&, const Names&, const Names&)>;

/// Replaceable pieces of the identity suite, so tests can break one on purpose.
struct VerifyHooks {
  CmiFunction chain_rule_cmi = [](const JointPMF& p, const Names& a, const Names& b, const Names& c) {
    return conditional_mutual_info(p, a, b, c);
  };
};

struct VerifyOutcome {
  std::vector<std::pair<std::string, double>> max_residuals;  // in check order
  std::vector<std::string> failed;
  nlohmann::ordered_json report;
  int exit_code = kExitOk;
};

namespace detail {

// Random pmf over 3..5 variables with cardinalities 2..4, plus a random split
// of its variables into nonempty a, nonempty b and a possibly empty rest.
struct RandomQuery {
  JointPMF pmf;
  Names a, b, c;
};

inline RandomQuery random_query(Rng& rng) {
  const std::size_t k = 3 + rng.index(3);
  std::vector<VariableSpec> vars;
  for (std::size_t i = 0; i < k; ++i) vars.push_back({std::string(1, static_cast<char>('a' + i)), 2 + rng.index(3)});
  const double zeros = rng.uniform() < 0.3 ? 0.3 : 0.0;
  RandomQuery q{random_pmf(rng, vars, zeros), {}, {}, {}};
  std::vector<std::string> names;
  for (const auto& v : vars) names.push_back(v.name);
  rng.shuffle(names);
  q.a.push_back(names[0]);
  q.b.push_back(names[1]);
  for (std::size_t i = 2; i < names.size(); ++i) {
    const std::size_t where = rng.index(3);
    (where == 0 ? q.a : where == 1 ? q.b : q.c).push_back(names[i]);
  }
  return q;
}

inline ViewSystem random_view_system(Rng& rng, std::size_t n_views) {
  ViewSystemShape shape;
  shape.n_views = n_views;
  shape.label_card = 2 + rng.index(2);
  shape.observation_card = 2 + rng.index(2);
  shape.representation_card = 2 + rng.index(2);
  const JointPMF pmf = random_markov_pmf(rng, shape);
  Names v, z;
  for (std::size_t i = 0; i < n_views; ++i) {
    v.push_back("v" + std::to_string(i + 1));
    z.push_back("z" + std::to_string(i + 1));
  }
  return ViewSystem(pmf, "y", v, z);
}

}  // namespace detail

inline constexpr double kLimitGrid[] = {0.0, 0.25, 0.5, 0.75, 1.0};

/// Runs every identity over random systems and records its worst residual.
inline VerifyOutcome verify_identities(const VerifySettings& settings, const VerifyHooks& hooks = {}) {
  VerifyOutcome out;
  Rng rng(settings.seed);
  std::map<std::string, double> worst;
  std::vector<std::string> order;
  auto note = [&](const std::string& name, double residual) {
    if (!worst.count(name)) {
      order.push_back(name);
      worst[name] = 0.0;
    }
    if (std::isnan(residual) || residual > worst[name]) worst[name] = std::isnan(residual) ? INFINITY : residual;
  };

  for (std::size_t s = 0; s < settings.n_systems; ++s) {
    const auto q = detail::random_query(rng);
    const Names bc = detail::join(q.b, q.c);
    // I(a; b,c) = I(a; c) + I(a; b | c)
    const double lhs = mutual_info(q.pmf, q.a, bc);
    const double rhs = (q.c.empty() ? 0.0 : mutual_info(q.pmf, q.a, q.c)) + hooks.chain_rule_cmi(q.pmf, q.a, q.b, q.c);
    note("chain-rule", std::abs(lhs - rhs));
    note("posterior-kl",
         std::abs(conditional_mutual_info(q.pmf, q.a, q.b, q.c) - expected_posterior_kl(q.pmf, q.a, bc, q.c)));
  }

  const std::size_t n_sys_views = settings.n_views;
  for (std::size_t s = 0; s < settings.n_systems; ++s) {
    const ViewSystem sys = detail::random_view_system(rng, n_sys_views);
    const auto& pmf = sys.pmf();
    for (std::size_t i = 0; i < sys.n_views(); ++i) {
      const std::string& v = sys.observations()[i];
      const std::string& z = sys.representations()[i];
      note("eq6", std::abs(mutual_info(pmf, {v}, {z}) - predictive_info(sys, i) - superfluous_info(sys, i)));
      const double specific =
          sys.n_views() == 1 ? 0.0
                             : expected_posterior_kl(pmf, {sys.label()}, sys.representations(), sys.other_representations(i));
      note("eq7", std::abs(predictive_info(sys, i) - specific - consistent_info(sys, i)));
      note("data-processing", std::max(0.0, predictive_info(sys, i) - mutual_info(pmf, {sys.label()}, {v})));
    }
    const ViewSystem single = detail::random_view_system(rng, 1);
    note("corollary2-n1", verify_corollary2(single).max_residual());
    if (n_sys_views == 2) note("corollary2-n2", verify_corollary2(sys).max_residual());
  }

  // Posterior-KL limit: as the encoders slide toward the shared bit, the
  // expected posterior KL and the view-specific information fall together and
  // vanish at the end of the grid.
  {
    double prev_kl = INFINITY, prev_vs = INFINITY, residual = 0.0, kl = 0.0, vs = 0.0;
    for (double alpha : kLimitGrid) {
      const ViewSystem sys = shared_limit_family(alpha);
      kl = expected_posterior_kl(sys.pmf(), {sys.label()}, sys.representations(), sys.other_representations(0));
      vs = view_specific_info(sys, 0).nats;
      residual = std::max({residual, std::max(0.0, kl - prev_kl), std::max(0.0, vs - prev_vs)});
      prev_kl = kl;
      prev_vs = vs;
    }
    residual = std::max({residual, kl, vs});
    note("appendix-a1-limit", residual);
  }

  nlohmann::ordered_json identities = nlohmann::ordered_json::object();
  for (const auto& name : order) {
    const double r = worst[name];
    const bool pass = r < kIdentityTolerance;
    out.max_residuals.emplace_back(name, r);
    if (!pass) out.failed.push_back(name);
    identities[name] = {{"max_residual", r}, {"status", pass ? "pass" : "fail"}};
  }
  out.report["identities"] = identities;
  out.report["failed"] = out.failed;
  out.exit_code = out.failed.empty() ? kExitOk : kExitFailure;
  return out;
}

/// verify command: writes verify.json into the output directory and one
/// "name: pass|fail (max residual r)" line per identity to `log`.
inline int run_verify(const ExperimentConfig& config, std::ostream& log, const VerifyHooks& hooks = {}) {
  VerifyOutcome outcome = verify_identities(config.verify, hooks);
  outcome.report["config"] = nlohmann::ordered_json::parse(config_echo(config));
  detail::ensure_dir(config.output_dir);
  detail::write_text(std::filesystem::path(config.output_dir) / "verify.json", outcome.report.dump(2) + "\n");
  char buf[64];
  for (const auto& [name, r] : outcome.max_residuals) {
    std::snprintf(buf, sizeof buf, "%.3e", r);
    log << name << ": " << (r < kIdentityTolerance ? "pass" : "fail") << " (max residual " << buf << ")\n";
  }
  if (!outcome.failed.empty()) {
    log << "failed identities:";
    for (const auto& f : outcome.failed) log << ' ' << f;
    log << '\n';
  }
  return outcome.exit_code;
}

// ---------------------------------------------------------------------------
// gen-data

inline int run_gen_data(const ExperimentConfig& config, std::ostream& log) {
  const SplitDataset data = generate_continuous(config.generator, config.n_samples);
  const std::filesystem::path dir = std::filesystem::path(config.output_dir) / "data";
  detail::ensure_dir(dir);
  const std::pair<const char*, const MultiViewBatch*> splits[] = {
      {"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
  for (const auto& [name, batch] : splits) {
    std::ostringstream csv;
    csv << "# config: " << config_echo(config) << '\n';
    write_dataset_csv(csv, *batch, config.generator, name);
    detail::write_text(dir / (std::string(name) + ".csv"), csv.str());
    log << "wrote " << (dir / (std::string(name) + ".csv")).string() << " (" << batch->size() << " rows)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct RunResult {
  std::string loss_mode;
  std::uint64_t seed = 0;
  std::string status = "ok";  // or "diverged: <reason>"
  std::vector<EpochRecord> history;
  double test_accuracy = 0.0;
  std::vector<double> test_leave_one_out;  // model heads, one per view
  std::map<std::size_t, ProbeReport> probes;  // by epoch; the final epoch is always present
  std::optional<Model> model;
  std::string rng_state;

  bool ok() const { return status == "ok"; }
  double mean_test_leave_one_out() const {
    double s = 0.0;
    for (double x : test_leave_one_out) s += x;
    return test_leave_one_out.empty() ? 0.0 : s / static_cast<double>(test_leave_one_out.size());
  }
};

struct ExperimentData {
  SplitDataset splits;
  MultiViewBatch probe;  // independent draw from the same world
};

inline ExperimentData make_experiment_data(const ExperimentConfig& config) {
  ExperimentData d{generate_continuous(config.generator, config.n_samples), {}};
  if (config.probe_samples > 0) d.probe = sample_continuous(config.generator, config.probe_samples, 1);
  return d;
}

inline ProbeConfig probe_config(const ExperimentConfig& config) {
  ProbeConfig p;
  p.bins = config.probe_bins;
  p.linear_probes = config.linear_probes;
  return p;
}

/// Trains one (loss mode, seed) pair. Divergence is recorded, not thrown.
inline RunResult run_single(const ExperimentConfig& config, const ExperimentData& data, const std::string& loss_mode,
                            std::uint64_t seed) {
  RunResult run;
  run.loss_mode = loss_mode;
  run.seed = seed;
  TrainConfig tc = config.train;
  tc.loss_mode = loss_mode;
  tc.seed = seed;
  const ProbeConfig pc = probe_config(config);
  const bool probing = data.probe.size() > 0;
  auto on_epoch = [&](const Model& m, const EpochRecord& rec) {
    if (!probing || rec.epoch == tc.epochs) return;
    for (std::size_t e : config.probe_epochs) {
      if (e == rec.epoch) run.probes[e] = probe_model(m, data.probe, pc);
    }
  };
  try {
    TrainResult tr = train(make_model(config.resolved_model(), seed), data.splits, tc, on_epoch);
    run.history = tr.history;
    if (data.splits.test.size() > 0) {
      const EvalResult ev = evaluate(tr.model, data.splits.test);
      run.test_accuracy = ev.accuracy;
      const std::size_t n = tr.model.spec.n_views;
      if (n > 1) {
        for (std::size_t i = 0; i < n; ++i) run.test_leave_one_out.push_back(ev.per_head[2 * n + 1 + i].second);
      }
    }
    if (probing) run.probes[tc.epochs] = probe_model(tr.model, data.probe, pc);
    run.model = std::move(tr.model);
    run.rng_state = tr.rng_state;
  } catch (const DivergenceError& e) {
    run.status = std::string("diverged: ") + e.what();
  }
  return run;
}

namespace detail {

inline nlohmann::ordered_json mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  const double sd = xs.size() > 1 ? std::sqrt(v / static_cast<double>(xs.size() - 1)) : 0.0;
  return {{"mean", m}, {"std", sd}, {"n", xs.size()}};
}

inline std::string run_dir_name(const std::string& mode, std::uint64_t seed) {
  return mode + "/seed_" + std::to_string(seed);
}

}  // namespace detail

inline nlohmann::ordered_json summarize(const ExperimentConfig& config, const std::vector<RunResult>& runs) {
  nlohmann::ordered_json modes = nlohmann::ordered_json::object();
  for (const auto& mode : config.loss_modes) {
    std::map<std::string, std::vector<double>> cols;
    nlohmann::ordered_json statuses = nlohmann::ordered_json::object();
    for (const auto& r : runs) {
      if (r.loss_mode != mode) continue;
      statuses[std::to_string(r.seed)] = r.status;
      if (!r.ok()) continue;
      const EpochRecord& last = r.history.back();
      cols["final_acc_val"].push_back(last.acc_val);
      cols["test_accuracy"].push_back(r.test_accuracy);
      if (!r.test_leave_one_out.empty()) cols["test_leave_one_out_mean"].push_back(r.mean_test_leave_one_out());
      if (!r.probes.empty()) {
        const ProbeReport& p = r.probes.rbegin()->second;
        cols["probe_mi_view_specific_mean"].push_back(p.mean_view_specific());
        cols["probe_mi_nuisance_mean"].push_back(p.mean_nuisance());
        if (config.linear_probes) cols["probe_acc_all"].push_back(p.acc_all);
      }
    }
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    m["runs"] = statuses;
    for (const auto& [k, xs] : cols) m[k] = detail::mean_std(xs);
    modes[mode] = m;
  }
  nlohmann::ordered_json summary;
  summary["modes"] = modes;
  summary["config"] = nlohmann::ordered_json::parse(config_echo(config));
  return summary;
}

/// Writes metrics.csv, checkpoint.bin and probe.json for one finished run.
inline void write_run(const ExperimentConfig& config, const RunResult& run) {
  const std::filesystem::path dir = std::filesystem::path(config.output_dir) / detail::run_dir_name(run.loss_mode, run.seed);
  detail::ensure_dir(dir);
  const std::string echo = config_echo(config);
  std::ostringstream csv;
  csv << "# config: " << echo << '\n';
  csv << "# loss_mode: " << run.loss_mode << " seed: " << run.seed << " status: " << run.status << '\n';
  write_metrics_csv(csv, run.history, config.resolved_model().n_views);
  detail::write_text(dir / "metrics.csv", csv.str());

  nlohmann::ordered_json probe = nlohmann::ordered_json::object();
  probe["loss_mode"] = run.loss_mode;
  probe["seed"] = run.seed;
  probe["status"] = run.status;
  probe["test_accuracy"] = run.test_accuracy;
  probe["test_leave_one_out"] = run.test_leave_one_out;
  nlohmann::ordered_json by_epoch = nlohmann::ordered_json::object();
  for (const auto& [epoch, report] : run.probes) by_epoch[std::to_string(epoch)] = to_json(report);
  probe["probes"] = by_epoch;
  probe["config"] = nlohmann::ordered_json::parse(echo);
  detail::write_text(dir / "probe.json", probe.dump(2) + "\n");

  if (run.model) {
    save_checkpoint(dir / "checkpoint.bin", Checkpoint{*run.model, run.rng_state, run.history});
  }
}

struct ExperimentOutcome {
  std::vector<RunResult> runs;
  nlohmann::ordered_json summary;
  int exit_code = kExitOk;
};

/// Trains every loss mode x seed, writes per-run files and summary.json.
inline ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log, bool write_files = true) {
  config.validate();
  const ExperimentData data = make_experiment_data(config);
  ExperimentOutcome out;
  for (const auto& mode : config.loss_modes) {
    for (std::uint64_t seed : config.seeds) {
      RunResult run = run_single(config, data, mode, seed);
      log << mode << " seed " << seed << ": " << run.status;
      if (run.ok()) log << ", test accuracy " << run.test_accuracy;
      log << '\n';
      if (!run.ok()) out.exit_code = kExitDivergence;
      if (write_files) write_run(config, run);
      out.runs.push_back(std::move(run));
    }
  }
  out.summary = summarize(config, out.runs);
  if (write_files) {
    detail::ensure_dir(config.output_dir);
    detail::write_text(std::filesystem::path(config.output_dir) / "summary.json", out.summary.dump(2) + "\n");
  }
  return out;
}

// ---------------------------------------------------------------------------
// eval

/// Reloads every checkpoint of a finished experiment and re-evaluates it on
/// the test split; writes eval.json.
inline int run_eval(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const ExperimentData data = make_experiment_data(config);
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  bool any = false;
  for (const auto& mode : config.loss_modes) {
    for (std::uint64_t seed : config.seeds) {
      const auto path = std::filesystem::path(config.output_dir) / detail::run_dir_name(mode, seed) / "checkpoint.bin";
      if (!std::filesystem::exists(path)) {
        log << "missing checkpoint " << path.string() << '\n';
        continue;
      }
      const Checkpoint ck = load_checkpoint(path);
      if (ck.model.spec != config.resolved_model()) throw FormatError("checkpoint " + path.string() + " does not match the config model");
      const EvalResult ev = evaluate(ck.model, data.splits.test);
      nlohmann::ordered_json heads = nlohmann::ordered_json::object();
      for (const auto& [name, acc] : ev.per_head) heads[name] = acc;
      results[detail::run_dir_name(mode, seed)] = {{"accuracy", ev.accuracy}, {"per_head", heads}};
      log << detail::run_dir_name(mode, seed) << ": test accuracy " << ev.accuracy << '\n';
      any = true;
    }
  }
  nlohmann::ordered_json doc;
  doc["results"] = results;
  doc["config"] = nlohmann::ordered_json::parse(config_echo(config));
  detail::ensure_dir(config.output_dir);
  detail::write_text(std::filesystem::path(config.output_dir) / "eval.json", doc.dump(2) + "\n");
  return any ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// report

/// Decomposes the configured discrete world (representations copying their
/// observations) and, when summary.json is present, flattens it into
/// summary.csv.
inline int run_report(const ExperimentConfig& config, std::ostream& log) {
  const DiscreteWorld world = generate_discrete(config.discrete);
  Names v = world.view_names(), z;
  for (std::size_t i = 0; i < world.n_views(); ++i) z.push_back("z" + std::to_string(i + 1));
  const ViewSystem sys(with_copy_representations(world), "y", v, z);
  const InfoReport info = decompose(sys);

  const std::filesystem::path dir(config.output_dir);
  detail::ensure_dir(dir);
  nlohmann::ordered_json doc;
  doc["discrete_world"] = to_json(info);
  doc["config"] = nlohmann::ordered_json::parse(config_echo(config));
  detail::write_text(dir / "report.json", doc.dump(2) + "\n");
  detail::write_text(dir / "report.csv", "# config: " + config_echo(config) + "\n" + csv_header(info) + "\n" + csv_row(info) + "\n");
  log << csv_header(info) << '\n' << csv_row(info) << '\n';

  const auto summary_path = dir / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    const auto summary = nlohmann::ordered_json::parse(detail::read_text(summary_path));
    std::ostringstream csv;
    csv << "# config: " << config_echo(config) << '\n' << "loss_mode,metric,mean,std,n\n";
    char buf[40];
    auto num = [&](const nlohmann::ordered_json& x) {
      if (x.is_null()) return std::string("nan");
      std::snprintf(buf, sizeof buf, "%.17g", x.get<double>());
      return std::string(buf);
    };
    for (const auto& [mode, body] : summary.at("modes").items()) {
      for (const auto& [metric, stats] : body.items()) {
        if (metric == "runs") continue;
        csv << mode << ',' << metric << ',' << num(stats.at("mean")) << ',' << num(stats.at("std")) << ','
            << stats.at("n").get<std::size_t>() << '\n';
      }
    }
    detail::write_text(dir / "summary.csv", csv.str());
    log << "wrote " << (dir / "summary.csv").string() << '\n';
  }
  return kExitOk;
}

}  // namespace mvib
