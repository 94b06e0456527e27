#pragma once

// Multi-view classifier with a stochastic bottleneck per view:
//
//   x_i --encoder MLP--> v_i --bottleneck MLP--> (mean_i, log_var_i) --sample--> z_i
//
// Heads: P_{v_i} = softmax(linear(v_i)), P_{z_i} = softmax(linear(z_i)),
// P_Z = softmax(linear([z_1..z_n])), and for each i a separate leave-one-out
// head over [z_1..z_n] with z_i replaced by zeros. A single-view model has no
// joint or leave-one-out heads; its joint prediction is P_{z_1}.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvib/autodiff.hpp"
#include "mvib/losses.hpp"
#include "mvib/rng.hpp"
#include "mvib/synth.hpp"

namespace mvib {

struct ModelSpec {
  std::size_t n_views = 3;
  std::vector<std::size_t> input_dims;  // one per view
  std::size_t n_classes = 3;
  std::vector<std::size_t> encoder_widths{64, 32};
  std::size_t bottleneck_hidden = 32;
  std::size_t bottleneck_dim = 8;
  bool stochastic = true;

  std::size_t head_count() const { return n_views == 1 ? 2 : 3 * n_views + 1; }

  void validate() const {
    if (n_views == 0) throw InvalidArgument("ModelSpec: n_views must be >= 1");
    if (input_dims.size() != n_views) throw InvalidArgument("ModelSpec: need one input dim per view");
    if (n_classes < 2) throw InvalidArgument("ModelSpec: n_classes must be >= 2");
    if (encoder_widths.empty()) throw InvalidArgument("ModelSpec: encoder needs at least one layer");
    for (std::size_t d : input_dims) {
      if (d == 0) throw InvalidArgument("ModelSpec: input dims must be >= 1");
    }
    for (std::size_t d : encoder_widths) {
      if (d == 0) throw InvalidArgument("ModelSpec: encoder widths must be >= 1");
    }
    if (bottleneck_hidden == 0 || bottleneck_dim == 0) throw InvalidArgument("ModelSpec: bottleneck dims must be >= 1");
  }

  // Spec matching a generator's views.
  static ModelSpec for_generator(const GeneratorSpec& g) {
    ModelSpec m;
    m.n_views = g.n_views;
    m.input_dims.assign(g.n_views, g.view_dim());
    m.n_classes = g.n_classes;
    return m;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelSpec, n_views, input_dims, n_classes, encoder_widths,
                                                bottleneck_hidden, bottleneck_dim, stochastic)

/// Named parameter arrays in a fixed order.
struct Model {
  ModelSpec spec;
  std::vector<std::string> names;
  std::vector<Tensor> params;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return k;
    }
    throw InvalidArgument("no parameter named '" + name + "'");
  }
  const Tensor& param(const std::string& name) const { return params[index_of(name)]; }

  friend bool operator==(const Model&, const Model&) = default;
};

namespace detail {

// gain 6 for layers feeding a ReLU (He), 3 for linear outputs (LeCun)
inline void add_linear(Model& m, Rng& rng, const std::string& name, std::size_t fan_in, std::size_t fan_out,
                       double gain = 3.0) {
  Tensor w = Tensor::matrix(fan_in, fan_out);
  const double limit = std::sqrt(gain / static_cast<double>(fan_in));
  for (auto& x : w.data()) x = (2.0 * rng.uniform() - 1.0) * limit;
  m.names.push_back(name + ".weight");
  m.params.push_back(std::move(w));
  m.names.push_back(name + ".bias");
  m.params.push_back(Tensor::matrix(1, fan_out, 0.0));
}

inline std::string view_prefix(std::size_t i) { return "view" + std::to_string(i + 1); }

}  // namespace detail

/// Fresh model: He-uniform hidden layers, LeCun-uniform outputs, zero biases,
/// unit initial bottleneck variance.
inline Model make_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  Rng rng(seed);
  const std::size_t d = spec.bottleneck_dim;
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    const std::string p = detail::view_prefix(i);
    std::size_t width = spec.input_dims[i];
    for (std::size_t l = 0; l < spec.encoder_widths.size(); ++l) {
      detail::add_linear(m, rng, p + ".encoder" + std::to_string(l), width, spec.encoder_widths[l], 6.0);
      width = spec.encoder_widths[l];
    }
    detail::add_linear(m, rng, p + ".bottleneck.hidden", width, spec.bottleneck_hidden, 6.0);
    detail::add_linear(m, rng, p + ".bottleneck.out", spec.bottleneck_hidden, 2 * d);
    // log-variance columns start at zero so every z_i begins with unit variance
    Tensor& out = m.params[m.params.size() - 2];
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = d; c < 2 * d; ++c) out(r, c) = 0.0;
    }
    detail::add_linear(m, rng, p + ".observation_head", width, spec.n_classes);
    detail::add_linear(m, rng, p + ".representation_head", d, spec.n_classes);
  }
  if (spec.n_views > 1) {
    detail::add_linear(m, rng, "joint_head", spec.n_views * d, spec.n_classes);
    for (std::size_t i = 0; i < spec.n_views; ++i) {
      detail::add_linear(m, rng, "leave_one_out_head" + std::to_string(i + 1), spec.n_views * d, spec.n_classes);
    }
  }
  return m;
}

enum class Sampling { kSample, kMean };

/// Graph of one forward pass. Owns its tape; `params[k]` is the leaf for model.params[k].
struct ForwardPass {
  std::unique_ptr<Tape> tape = std::make_unique<Tape>();
  std::vector<Var> params;
  std::vector<Var> observation_features;  // v_i
  std::vector<Var> z_mean;
  std::vector<Var> z_log_var;
  std::vector<Var> z;  // sampled (or mean) representation fed to the heads
  PredictionBundle bundle;
};

/// Builds the full graph. Samples z via the reparameterization trick when
/// `sampling` is kSample and the model is stochastic; otherwise uses the mean.
inline ForwardPass forward(const Model& model, const std::vector<Tensor>& views, Rng* rng,
                           Sampling sampling = Sampling::kSample) {
  const ModelSpec& spec = model.spec;
  if (views.size() != spec.n_views) {
    throw InvalidArgument("forward: batch has " + std::to_string(views.size()) + " views, model expects " +
                          std::to_string(spec.n_views));
  }
  const bool sample = sampling == Sampling::kSample && spec.stochastic;
  if (sample && rng == nullptr) throw InvalidArgument("forward: sampling needs an Rng");

  ForwardPass pass;
  Tape& tape = *pass.tape;
  for (const auto& p : model.params) pass.params.push_back(tape.leaf(p));
  std::size_t next = 0;
  auto linear = [&](const Var& x) {
    const Var& w = pass.params[next++];
    const Var& b = pass.params[next++];
    return add_bias(matmul(x, w), b);
  };

  const std::size_t d = spec.bottleneck_dim;
  const std::size_t batch = views[0].rows();
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    if (views[i].rank() != 2 || views[i].cols() != spec.input_dims[i] || views[i].rows() != batch) {
      throw InvalidArgument("forward: view " + std::to_string(i + 1) + " has shape " + views[i].shape_string());
    }
    Var h = tape.constant(views[i]);
    for (std::size_t l = 0; l < spec.encoder_widths.size(); ++l) h = relu(linear(h));
    pass.observation_features.push_back(h);

    const Var stats = linear(relu(linear(h)));
    const Var mean = slice_cols(stats, 0, d);
    const Var log_var = slice_cols(stats, d, 2 * d);
    pass.z_mean.push_back(mean);
    pass.z_log_var.push_back(log_var);
    pass.z.push_back(sample ? gaussian_reparameterize(mean, log_var, *rng) : mean);

    pass.bundle.observation.push_back(softmax(linear(h)));
    pass.bundle.representation.push_back(softmax(linear(pass.z.back())));
  }

  if (spec.n_views == 1) {
    pass.bundle.joint = pass.bundle.representation[0];
    return pass;
  }
  pass.bundle.joint = softmax(linear(concat(pass.z)));
  const Var zeros = tape.constant(Tensor::matrix(batch, d, 0.0));
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    std::vector<Var> parts = pass.z;
    parts[i] = zeros;
    pass.bundle.leave_one_out.push_back(softmax(linear(concat(parts))));
  }
  return pass;
}

/// Row-wise argmax of a probability matrix.
inline std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

inline double accuracy(const std::vector<int>& predicted, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) hits += predicted[r] == labels[r];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace mvib
