#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvib/losses.hpp"
#include "mvib/model.hpp"
#include "mvib/synth.hpp"

namespace mvib {

struct OptimizerConfig {
  std::string kind = "adam";  // "adam" or "sgd-momentum"
  double lr = 2.6e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OptimizerConfig, kind, lr, beta1, beta2, eps, momentum)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossWeights, ce_weight, task_aux_weight, vd_weight)

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t warmup_epochs = 10;
  std::size_t decay_epoch = 0;  // 0: two thirds of the way through
  double decay_factor = 0.1;
  std::string loss_mode = "ce+mv2d";
  LossWeights weights;
  std::size_t samples_per_step = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(optimizer.lr >= 0.0) || !std::isfinite(optimizer.lr)) throw InvalidArgument("TrainConfig: lr must be >= 0");
    if (optimizer.kind != "adam" && optimizer.kind != "sgd-momentum") {
      throw InvalidArgument("TrainConfig: optimizer must be 'adam' or 'sgd-momentum'");
    }
    if (epochs == 0) throw InvalidArgument("TrainConfig: epochs must be >= 1");
    if (batch_size == 0) throw InvalidArgument("TrainConfig: batch_size must be >= 1");
    if (samples_per_step == 0) throw InvalidArgument("TrainConfig: samples_per_step must be >= 1");
    weights.validate();
    (void)parse_loss_mode(loss_mode);
  }

  double learning_rate(std::size_t epoch) const {
    const std::size_t decay_at = decay_epoch ? decay_epoch : (2 * epochs) / 3;
    if (epoch < warmup_epochs) {
      return optimizer.lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup_epochs);
    }
    return epoch >= decay_at && decay_at > 0 ? optimizer.lr * decay_factor : optimizer.lr;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, optimizer, epochs, batch_size, warmup_epochs,
                                                decay_epoch, decay_factor, loss_mode, weights, samples_per_step,
                                                seed)

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(std::move(config)) {}

  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
    if (first_.empty()) {
      for (const auto& p : params) {
        first_.emplace_back(p.shape(), 0.0);
        second_.emplace_back(p.shape(), 0.0);
      }
    }
    ++t_;
    if (config_.kind == "adam") {
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k].data();
        const auto g = grads[k].data();
        auto m = first_[k].data();
        auto v = second_[k].data();
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
          v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
          p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
        }
      }
    } else {
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k].data();
        const auto g = grads[k].data();
        auto m = first_[k].data();
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = config_.momentum * m[i] + g[i];
          p[i] -= lr * m[i];
        }
      }
    }
  }

 private:
  OptimizerConfig config_;
  std::vector<Tensor> first_, second_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalMode {
  enum class Kind { kAllViews, kLeaveOneOut, kSingleView };
  Kind kind = Kind::kAllViews;
  std::size_t view = 0;

  static EvalMode all_views() { return {Kind::kAllViews, 0}; }
  static EvalMode leave_one_out(std::size_t i) { return {Kind::kLeaveOneOut, i}; }
  static EvalMode single_view(std::size_t i) { return {Kind::kSingleView, i}; }
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::pair<std::string, double>> per_head;
};

/// Accuracy with the bottleneck mean (no sampling), so the result is deterministic.
inline EvalResult evaluate(const Model& model, const MultiViewBatch& batch, EvalMode mode = EvalMode::all_views()) {
  const std::size_t n = model.spec.n_views;
  if (mode.kind != EvalMode::Kind::kAllViews && mode.view >= n) {
    throw InvalidArgument("evaluate: view index " + std::to_string(mode.view) + " out of range");
  }
  if (mode.kind == EvalMode::Kind::kLeaveOneOut && n == 1) {
    throw InvalidArgument("evaluate: leave-one-out needs at least two views");
  }
  batch.validate(model.spec.n_classes);
  const ForwardPass pass = forward(model, batch.views, nullptr, Sampling::kMean);
  const auto& b = pass.bundle;
  auto acc = [&](const Var& p) { return accuracy(argmax_rows(p.value()), batch.labels); };

  EvalResult out;
  for (std::size_t i = 0; i < n; ++i) out.per_head.emplace_back("observation_" + std::to_string(i + 1), acc(b.observation[i]));
  for (std::size_t i = 0; i < n; ++i) {
    out.per_head.emplace_back("representation_" + std::to_string(i + 1), acc(b.representation[i]));
  }
  if (n > 1) {
    out.per_head.emplace_back("joint", acc(b.joint));
    for (std::size_t i = 0; i < n; ++i) {
      out.per_head.emplace_back("leave_one_out_" + std::to_string(i + 1), acc(b.leave_one_out[i]));
    }
  }
  switch (mode.kind) {
    case EvalMode::Kind::kAllViews: out.accuracy = acc(b.joint); break;
    case EvalMode::Kind::kLeaveOneOut: out.accuracy = acc(b.leave_one_out[mode.view]); break;
    case EvalMode::Kind::kSingleView: out.accuracy = acc(b.representation[mode.view]); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss_total = 0.0;
  double loss_ce = 0.0;           // task + leave-one-out cross-entropy, unweighted
  double loss_vsd = 0.0;          // sum_i KL(P_v_i || P_z_i), unweighted
  double loss_consistency = 0.0;  // sum_i KL(P_Z || P_Z/i), unweighted
  double acc_train = 0.0;
  double acc_val = 0.0;
  std::vector<double> acc_loo;  // validation, one per view (empty for n = 1)

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

inline void write_metrics_header(std::ostream& out, std::size_t n_views) {
  out << "epoch,loss_total,loss_ce,loss_vsd,loss_consistency,acc_train,acc_val";
  if (n_views > 1) {
    for (std::size_t i = 0; i < n_views; ++i) out << ",acc_loo_" << (i + 1);
  }
  out << '\n';
}

inline void write_metrics_row(std::ostream& out, const EpochRecord& r) {
  char buf[40];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << ',' << buf;
  };
  out << r.epoch;
  for (double x : {r.loss_total, r.loss_ce, r.loss_vsd, r.loss_consistency, r.acc_train, r.acc_val}) put(x);
  for (double x : r.acc_loo) put(x);
  out << '\n';
}

inline void write_metrics_csv(std::ostream& out, const std::vector<EpochRecord>& history, std::size_t n_views) {
  write_metrics_header(out, n_views);
  for (const auto& r : history) write_metrics_row(out, r);
}

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
  std::string rng_state;
};

using EpochCallback = std::function<void(const Model&, const EpochRecord&)>;

/// Minibatch training of `model` under the configured loss mode.
///
/// Deterministic given (model, data, config): shuffling and bottleneck noise
/// both come from one Rng seeded with config.seed. Throws DivergenceError on
/// a non-finite loss.
inline TrainResult train(Model model, const SplitDataset& data, const TrainConfig& config,
                         const EpochCallback& on_epoch = {}) {
  config.validate();
  const LossMode mode = parse_loss_mode(config.loss_mode);
  const std::size_t n = model.spec.n_views;
  data.train.validate(model.spec.n_classes);
  if (data.train.size() == 0) throw InvalidArgument("train: empty training split");

  Rng rng(config.seed);
  Optimizer opt(config.optimizer);
  TrainResult result;
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    std::size_t seen = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const MultiViewBatch mb = data.train.gather(rows);
      const double weight = static_cast<double>(rows.size());

      std::vector<Tensor> grads;
      for (std::size_t s = 0; s < config.samples_per_step; ++s) {
        ForwardPass pass = forward(model, mb.views, &rng);
        const Var loss = total_objective(pass.bundle, mb.labels, config.weights, mode);
        const double loss_value = loss.value()[0];
        if (!std::isfinite(loss_value)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1));
        }
        const double ce = task_cross_entropy(pass.bundle, mb.labels).value()[0] +
                          auxiliary_cross_entropy(pass.bundle, mb.labels).value()[0];
        const double vsd = sufficiency_term(pass.bundle).value()[0];
        const double cons = consistency_term(pass.bundle).value()[0];
        const double share = weight / static_cast<double>(config.samples_per_step);
        rec.loss_total += loss_value * share;
        rec.loss_ce += ce * share;
        rec.loss_vsd += vsd * share;
        rec.loss_consistency += cons * share;

        const Var scaled = config.samples_per_step == 1
                               ? loss
                               : scale(loss, 1.0 / static_cast<double>(config.samples_per_step));
        pass.tape->backward(scaled);
        for (std::size_t k = 0; k < pass.params.size(); ++k) {
          if (grads.size() <= k) {
            grads.push_back(pass.params[k].grad());
          } else {
            const Tensor g = pass.params[k].grad();
            for (std::size_t i = 0; i < g.size(); ++i) grads[k][i] += g[i];
          }
        }
      }
      for (const auto& g : grads) {
        if (!g.all_finite()) throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch + 1));
      }
      opt.step(model.params, grads, lr);
      for (const auto& p : model.params) {
        if (!p.all_finite()) throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch + 1));
      }
      seen += rows.size();
    }

    const double inv = 1.0 / static_cast<double>(seen);
    rec.loss_total *= inv;
    rec.loss_ce *= inv;
    rec.loss_vsd *= inv;
    rec.loss_consistency *= inv;
    rec.acc_train = evaluate(model, data.train).accuracy;
    if (data.val.size() > 0) {
      const EvalResult val = evaluate(model, data.val);
      rec.acc_val = val.accuracy;
      if (n > 1) {
        for (std::size_t i = 0; i < n; ++i) {
          rec.acc_loo.push_back(val.per_head[2 * n + 1 + i].second);
        }
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(model, rec);
  }
  result.model = std::move(model);
  result.rng_state = rng.state();
  return result;
}

}  // namespace mvib
