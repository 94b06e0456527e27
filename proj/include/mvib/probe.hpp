#pragma once

// Plug-in information estimates and linear probes on learned representations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mvib/model.hpp"
#include "mvib/oracle.hpp"
#include "mvib/rng.hpp"

namespace mvib {

inline constexpr std::size_t kMinSamplesPerCell = 50;

struct Discretized {
  std::vector<std::vector<std::size_t>> columns;  // [dim][row], codes in [0, bins)
  std::vector<bool> constant;                     // dims that collapsed to a single code
  std::vector<std::string> warnings;
};

/// Per-dimension equal-frequency binning. Tied values share a code; a
/// constant dimension maps to code 0 and is flagged.
inline Discretized discretize(const Tensor& reps, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("discretize: bins must be >= 2");
  if (reps.rank() != 2 || reps.rows() == 0) throw InvalidArgument("discretize: need a nonempty matrix");
  const std::size_t n = reps.rows();
  Discretized out;
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < reps.cols(); ++c) {
    std::vector<std::size_t> codes(n, 0);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return reps(a, c) < reps(b, c); });
    const bool is_constant = reps(order.front(), c) == reps(order.back(), c);
    if (is_constant) {
      out.warnings.push_back("dimension " + std::to_string(c) + " is constant; binned to a single code");
    } else {
      std::size_t code = 0;
      for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t row = order[rank];
        if (rank == 0 || reps(row, c) != reps(order[rank - 1], c)) code = rank * bins / n;
        codes[row] = code;
      }
    }
    out.columns.push_back(std::move(codes));
    out.constant.push_back(is_constant);
  }
  return out;
}

/// A named discrete sample column.
struct CodeColumn {
  std::string name;
  std::size_t cardinality = 0;
  std::vector<std::size_t> values;
};

/// Empirical joint distribution (relative counts) of the named columns.
inline JointPMF empirical_pmf(const std::vector<CodeColumn>& columns, const Names& names) {
  std::vector<const CodeColumn*> picked;
  for (const auto& n : names) {
    auto it = std::find_if(columns.begin(), columns.end(), [&](const CodeColumn& c) { return c.name == n; });
    if (it == columns.end()) throw InvalidArgument("no code column named '" + n + "'");
    picked.push_back(&*it);
  }
  if (picked.empty()) throw InvalidArgument("empirical_pmf: no columns");
  const std::size_t rows = picked[0]->values.size();
  std::vector<VariableSpec> vars;
  for (const auto* c : picked) {
    if (c->values.size() != rows) throw InvalidArgument("code columns differ in length");
    vars.push_back({c->name, c->cardinality});
  }
  std::vector<double> counts(detail::checked_cells(vars), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t idx = 0;
    for (const auto* c : picked) {
      if (c->values[r] >= c->cardinality) throw InvalidArgument("code out of range in column '" + c->name + "'");
      idx = idx * c->cardinality + c->values[r];
    }
    counts[idx] += 1.0;
  }
  return JointPMF::from_weights(std::move(vars), std::move(counts));
}

/// Plug-in I(a; b | given) from sample counts. Requires at least
/// kMinSamplesPerCell samples per cell of the joint table it builds.
inline double plugin_info(const std::vector<CodeColumn>& columns, const Names& a, const Names& b,
                          const Names& given = {}, std::size_t min_samples_per_cell = kMinSamplesPerCell) {
  const Names all = detail::join(a, b, given);
  std::size_t cells = 1;
  std::size_t rows = 0;
  for (const auto& n : all) {
    auto it = std::find_if(columns.begin(), columns.end(), [&](const CodeColumn& c) { return c.name == n; });
    if (it == columns.end()) throw InvalidArgument("no code column named '" + n + "'");
    cells *= it->cardinality;
    rows = it->values.size();
  }
  if (rows < min_samples_per_cell * cells) {
    throw InvalidArgument("plugin_info: " + std::to_string(rows) + " samples for " + std::to_string(cells) +
                          " cells is undersampled (need " + std::to_string(min_samples_per_cell) + " per cell)");
  }
  const JointPMF pmf = empirical_pmf(columns, all);
  return conditional_mutual_info(pmf, a, b, given);
}

// ---------------------------------------------------------------------------
// Linear probes

struct ProbeOptions {
  double train_fraction = 0.7;
  std::size_t max_iterations = 100;  // Newton steps
  double l2 = 1e-4;
  double tolerance = 1e-9;  // stop when the gradient max-norm falls below this
  std::uint64_t seed = 1234;
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t(r, c);
  }
  return m;
}

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

}  // namespace detail

/// Held-out accuracy of a multinomial logistic-regression probe.
///
/// Rows are shuffled with options.seed and split train/test; features are
/// standardized with training statistics; the L2-regularized probe is fit by
/// damped Newton steps until the gradient vanishes.
inline double probe_accuracy(const Tensor& reps, std::span<const int> labels, std::size_t n_classes,
                             const ProbeOptions& options = {}) {
  const std::size_t n = reps.rows();
  if (labels.size() != n) throw InvalidArgument("probe_accuracy: label count mismatch");
  std::vector<std::size_t> per_class(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw InvalidArgument("probe_accuracy: label out of range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (per_class[k] < 20) throw InvalidArgument("probe_accuracy: class " + std::to_string(k) + " has fewer than 20 samples");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw InvalidArgument("probe_accuracy: degenerate train/test split");

  const Eigen::MatrixXd all = detail::to_eigen(reps);
  const Eigen::Index d = static_cast<Eigen::Index>(reps.cols());
  Eigen::MatrixXd xtr(n_train, d + 1), xte(n - n_train, d + 1);
  Eigen::MatrixXd ytr = Eigen::MatrixXd::Zero(n_train, n_classes);
  std::vector<int> yte;
  std::vector<bool> seen(n_classes, false);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(order[r]);
    if (r < n_train) {
      xtr.row(r).head(d) = all.row(src);
      ytr(r, labels[order[r]]) = 1.0;
      seen[static_cast<std::size_t>(labels[order[r]])] = true;
    } else {
      xte.row(r - n_train).head(d) = all.row(src);
      yte.push_back(labels[order[r]]);
    }
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (!seen[k]) throw InvalidArgument("probe_accuracy: class " + std::to_string(k) + " absent from the train split");
  }
  const Eigen::RowVectorXd mean = xtr.leftCols(d).colwise().mean();
  Eigen::RowVectorXd sd = ((xtr.leftCols(d).rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < d; ++c) {
    if (!(sd(c) > 1e-12)) sd(c) = 1.0;
  }
  xtr.leftCols(d) = (xtr.leftCols(d).rowwise() - mean).array().rowwise() / sd.array();
  xte.leftCols(d) = (xte.leftCols(d).rowwise() - mean).array().rowwise() / sd.array();
  xtr.col(d).setOnes();
  xte.col(d).setOnes();

  const auto K = static_cast<Eigen::Index>(n_classes);
  const Eigen::Index P = d + 1;
  const double inv_n = 1.0 / static_cast<double>(n_train);
  auto objective = [&](const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd logits = xtr * w;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const double m = logits.row(r).maxCoeff();
      const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
      loss += lse - logits.row(r).dot(ytr.row(r));
    }
    return loss * inv_n + 0.5 * options.l2 * w.squaredNorm();
  };
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(P, K);
  double current = objective(w);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd p = detail::row_softmax(xtr * w);
    const Eigen::MatrixXd g = xtr.transpose() * (p - ytr) * inv_n + options.l2 * w;
    if (g.cwiseAbs().maxCoeff() < options.tolerance) break;
    Eigen::MatrixXd h(P * K, P * K);
    for (Eigen::Index a = 0; a < K; ++a) {
      for (Eigen::Index b = a; b < K; ++b) {
        Eigen::VectorXd weight = -p.col(a).cwiseProduct(p.col(b));
        if (a == b) weight += p.col(a);
        const Eigen::MatrixXd block = xtr.transpose() * weight.asDiagonal() * xtr * inv_n;
        h.block(a * P, b * P, P, P) = block;
        h.block(b * P, a * P, P, P) = block.transpose();
      }
    }
    h.diagonal().array() += options.l2;
    const Eigen::VectorXd step = h.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()));
    const Eigen::MatrixXd dir = -Eigen::Map<const Eigen::MatrixXd>(step.data(), P, K);
    double t = 1.0;
    while (t > 1e-10) {
      const Eigen::MatrixXd trial = w + t * dir;
      const double value = objective(trial);
      if (value <= current) {
        w = trial;
        current = value;
        break;
      }
      t *= 0.5;
    }
    if (t <= 1e-10) break;
  }

  const Eigen::MatrixXd scores = xte * w;
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    scores.row(r).maxCoeff(&best);
    hits += static_cast<int>(best) == yte[static_cast<std::size_t>(r)];
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

/// Column-concatenation of the selected per-view matrices.
inline Tensor concat_views(const std::vector<Tensor>& parts, const std::vector<std::size_t>& which) {
  if (which.empty()) throw InvalidArgument("concat_views: nothing selected");
  const std::size_t rows = parts[which[0]].rows();
  std::size_t cols = 0;
  for (std::size_t i : which) cols += parts.at(i).cols();
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t at = 0;
    for (std::size_t i : which) {
      for (double x : parts[i].row(r)) out(r, at++) = x;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports on a trained model

struct ProbeViewReport {
  double mi_label = 0.0;          // plug-in I(z_i; y)
  double mi_nuisance = std::numeric_limits<double>::quiet_NaN();  // plug-in I(z_i; n_i)
  double mi_view_specific = 0.0;  // plug-in I(y; z_i | z_rest); 0 for one view
  double acc_single = 0.0;
  double acc_leave_one_out = std::numeric_limits<double>::quiet_NaN();
};

struct ProbeReport {
  std::vector<ProbeViewReport> views;
  double acc_all = 0.0;

  double mean_view_specific() const {
    double s = 0.0;
    for (const auto& v : views) s += v.mi_view_specific;
    return views.empty() ? 0.0 : s / static_cast<double>(views.size());
  }
  double mean_nuisance() const {
    double s = 0.0;
    for (const auto& v : views) s += v.mi_nuisance;
    return views.empty() ? 0.0 : s / static_cast<double>(views.size());
  }
};

struct ProbeConfig {
  std::size_t bins = 3;
  bool linear_probes = true;
  std::uint64_t sample_seed = 99;  // bottleneck noise for the MI codes
  ProbeOptions probe;
};

/// Plug-in nuisance information of a representation: for each nuisance
/// coordinate, the MI between its binned value and the binned least-squares
/// readout of that coordinate from z, summed over coordinates.
inline double nuisance_information(const Tensor& z, const Tensor& nuisance, std::size_t bins) {
  if (nuisance.cols() == 0) return 0.0;
  const Eigen::Index n = static_cast<Eigen::Index>(z.rows());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(z.cols()) + 1);
  x.leftCols(static_cast<Eigen::Index>(z.cols())) = detail::to_eigen(z);
  x.col(x.cols() - 1).setOnes();
  const Eigen::MatrixXd target = detail::to_eigen(nuisance);
  const Eigen::MatrixXd readout = x * x.colPivHouseholderQr().solve(target);

  Tensor readout_t = Tensor::matrix(z.rows(), nuisance.cols());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t c = 0; c < nuisance.cols(); ++c) readout_t(r, c) = readout(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  const Discretized dr = discretize(readout_t, bins);
  const Discretized dn = discretize(nuisance, bins);
  double total = 0.0;
  for (std::size_t c = 0; c < nuisance.cols(); ++c) {
    std::vector<CodeColumn> cols{{"readout", bins, dr.columns[c]}, {"nuisance", bins, dn.columns[c]}};
    total += plugin_info(cols, {"readout"}, {"nuisance"});
  }
  return total;
}

/// Measures every ProbeViewReport field on `batch`.
///
/// MI codes use one sampled z per row (the stochastic representation itself);
/// the label code of z_i is the argmax of its representation head. Linear
/// probes use the bottleneck mean.
inline ProbeReport probe_model(const Model& model, const MultiViewBatch& batch, const ProbeConfig& config = {}) {
  const std::size_t n = model.spec.n_views;
  const std::size_t k = model.spec.n_classes;
  Rng rng(config.sample_seed);
  const ForwardPass sampled = forward(model, batch.views, &rng, Sampling::kSample);

  std::vector<CodeColumn> cols;
  {
    CodeColumn y{"y", k, {}};
    for (int l : batch.labels) y.values.push_back(static_cast<std::size_t>(l));
    cols.push_back(std::move(y));
  }
  for (std::size_t i = 0; i < n; ++i) {
    CodeColumn c{"z" + std::to_string(i + 1), k, {}};
    for (int p : argmax_rows(sampled.bundle.representation[i].value())) c.values.push_back(static_cast<std::size_t>(p));
    cols.push_back(std::move(c));
  }

  std::vector<Tensor> means;
  if (config.linear_probes) {
    const ForwardPass det = forward(model, batch.views, nullptr, Sampling::kMean);
    for (const auto& m : det.z_mean) means.push_back(m.value());
  }

  ProbeReport report;
  std::vector<std::size_t> all_views(n);
  std::iota(all_views.begin(), all_views.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    ProbeViewReport v;
    const std::string zi = "z" + std::to_string(i + 1);
    v.mi_label = plugin_info(cols, {"y"}, {zi});
    Names rest;
    std::vector<std::size_t> rest_idx;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) {
        rest.push_back("z" + std::to_string(j + 1));
        rest_idx.push_back(j);
      }
    }
    v.mi_view_specific = rest.empty() ? 0.0 : plugin_info(cols, {"y"}, {zi}, rest);
    if (i < batch.nuisance.size()) {
      v.mi_nuisance = nuisance_information(sampled.z[i].value(), batch.nuisance[i], config.bins);
    }
    if (config.linear_probes) {
      v.acc_single = probe_accuracy(means[i], batch.labels, k, config.probe);
      if (!rest_idx.empty()) v.acc_leave_one_out = probe_accuracy(concat_views(means, rest_idx), batch.labels, k, config.probe);
    }
    report.views.push_back(v);
  }
  if (config.linear_probes) report.acc_all = probe_accuracy(concat_views(means, all_views), batch.labels, k, config.probe);
  return report;
}

inline nlohmann::ordered_json to_json(const ProbeReport& r) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(x); };
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.views.size(); ++i) {
    const std::string p = "view_" + std::to_string(i + 1) + ".";
    j[p + "mi_label"] = num(r.views[i].mi_label);
    j[p + "mi_nuisance"] = num(r.views[i].mi_nuisance);
    j[p + "mi_view_specific"] = num(r.views[i].mi_view_specific);
    j[p + "acc_single"] = num(r.views[i].acc_single);
    j[p + "acc_leave_one_out"] = num(r.views[i].acc_leave_one_out);
  }
  j["acc_all"] = r.acc_all;
  return j;
}

inline std::string csv_header(const ProbeReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.views.size(); ++i) {
    const std::string p = "view_" + std::to_string(i + 1) + ".";
    out += p + "mi_label," + p + "mi_nuisance," + p + "mi_view_specific," + p + "acc_single," + p + "acc_leave_one_out,";
  }
  return out + "acc_all";
}

inline std::string csv_row(const ProbeReport& r) {
  std::string out;
  char buf[40];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
    out += ',';
  };
  for (const auto& v : r.views) {
    for (double x : {v.mi_label, v.mi_nuisance, v.mi_view_specific, v.acc_single, v.acc_leave_one_out}) put(x);
  }
  std::snprintf(buf, sizeof buf, "%.17g", r.acc_all);
  return out + buf;
}

}  // namespace mvib
