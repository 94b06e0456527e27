#pragma once

// Synthetic multi-view data.
//
// Continuous family: a label y picks class means for a shared latent s (seen
// by every view) and for one private latent u_i per view. Each view is a
// fixed random linear mix of [s; u_i; n_i], where n_i is label-free nuisance.
// private_label_leak moves label signal from s into the u_i.
//
// Discrete family: y is uniform and the views are conditionally independent
// given y, each produced by an explicit channel table, so the joint is exact.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvib/oracle.hpp"
#include "mvib/rng.hpp"
#include "mvib/tensor.hpp"

namespace mvib {

struct GeneratorSpec {
  std::size_t n_views = 3;
  std::size_t n_classes = 3;
  std::size_t shared_dim = 2;
  std::size_t private_dim = 2;
  std::size_t nuisance_dim = 2;
  double shared_snr = 4.0;
  double private_snr = 4.0;
  double private_label_leak = 0.5;
  std::uint64_t seed = 1;

  std::size_t view_dim() const { return shared_dim + private_dim + nuisance_dim; }

  void validate() const {
    if (n_views == 0) throw InvalidArgument("GeneratorSpec: n_views must be >= 1");
    if (n_classes < 2) throw InvalidArgument("GeneratorSpec: n_classes must be >= 2");
    if (shared_dim + private_dim == 0) throw InvalidArgument("GeneratorSpec: shared_dim + private_dim must be > 0");
    if (!(shared_snr > 0.0) || !(private_snr > 0.0)) throw InvalidArgument("GeneratorSpec: snr must be > 0");
    if (!(private_label_leak >= 0.0 && private_label_leak <= 1.0)) {
      throw InvalidArgument("GeneratorSpec: private_label_leak must lie in [0, 1]");
    }
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GeneratorSpec, n_views, n_classes, shared_dim, private_dim,
                                                nuisance_dim, shared_snr, private_snr, private_label_leak, seed)

/// Per-view observation matrices (batch x view-dim) with integer labels.
/// `nuisance` carries the label-free latents n_i when the batch is synthetic.
struct MultiViewBatch {
  std::vector<Tensor> views;
  std::vector<int> labels;
  std::vector<Tensor> nuisance;

  std::size_t size() const { return labels.size(); }
  std::size_t n_views() const { return views.size(); }

  void validate(std::size_t n_classes) const {
    if (views.empty()) throw InvalidArgument("MultiViewBatch: no views");
    for (const auto& v : views) {
      if (v.rank() != 2 || v.rows() != labels.size()) throw InvalidArgument("MultiViewBatch: batch size mismatch");
    }
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw InvalidArgument("MultiViewBatch: label out of range");
    }
  }

  // Rows [begin, end) of every member.
  MultiViewBatch slice(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
    return gather(idx);
  }

  MultiViewBatch gather(const std::vector<std::size_t>& rows) const {
    auto take = [&](const Tensor& t) {
      Tensor out = Tensor::matrix(rows.size(), t.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = t.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
      }
      return out;
    };
    MultiViewBatch out;
    for (const auto& v : views) out.views.push_back(take(v));
    for (const auto& n : nuisance) out.nuisance.push_back(take(n));
    for (std::size_t r : rows) out.labels.push_back(labels[r]);
    return out;
  }
};

struct SplitDataset {
  MultiViewBatch train;
  MultiViewBatch val;
  MultiViewBatch test;
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

/// 70% / 20% / 10%, rounding down the first two.
inline SplitSizes split_sizes(std::size_t n) {
  SplitSizes s;
  s.train = n * 7 / 10;
  s.val = n * 2 / 10;
  s.test = n - s.train - s.val;
  return s;
}

namespace detail {

struct ContinuousGeometry {
  std::vector<std::vector<double>> shared_means;                // [class][shared_dim]
  std::vector<std::vector<std::vector<double>>> private_means;  // [view][class][private_dim]
  std::vector<Tensor> mixing;                                   // [view] (view_dim x view_dim)
};

inline ContinuousGeometry draw_geometry(const GeneratorSpec& spec, Rng& rng) {
  ContinuousGeometry g;
  g.shared_means.assign(spec.n_classes, std::vector<double>(spec.shared_dim));
  for (auto& m : g.shared_means) {
    for (auto& x : m) x = rng.normal();
  }
  g.private_means.assign(spec.n_views, std::vector<std::vector<double>>(spec.n_classes, std::vector<double>(spec.private_dim)));
  for (auto& view : g.private_means) {
    for (auto& m : view) {
      for (auto& x : m) x = rng.normal();
    }
  }
  const std::size_t d = spec.view_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    Tensor m = Tensor::matrix(d, d);
    for (auto& x : m.data()) x = rng.normal() * scale;
    g.mixing.push_back(std::move(m));
  }
  return g;
}

}  // namespace detail

/// Draws `n_samples` i.i.d. samples from the world fixed by spec.seed.
/// Stream 0 continues the geometry generator; any other stream is an
/// independent sample sequence from the same world.
inline MultiViewBatch sample_continuous(const GeneratorSpec& spec, std::size_t n_samples, std::uint64_t stream = 0) {
  spec.validate();
  if (n_samples == 0) throw InvalidArgument("generate_continuous: zero samples");
  Rng geo_rng(spec.seed);
  const auto geo = detail::draw_geometry(spec, geo_rng);
  Rng stream_rng(spec.seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  Rng& rng = stream == 0 ? geo_rng : stream_rng;

  const std::size_t d = spec.view_dim();
  const double a_shared = std::sqrt(spec.shared_snr * (1.0 - spec.private_label_leak));
  const double a_private = std::sqrt(spec.private_snr * spec.private_label_leak);

  MultiViewBatch all;
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    all.views.push_back(Tensor::matrix(n_samples, d));
    all.nuisance.push_back(Tensor::matrix(n_samples, spec.nuisance_dim));
  }
  all.labels.resize(n_samples);

  std::vector<double> s(spec.shared_dim), latent(d);
  for (std::size_t r = 0; r < n_samples; ++r) {
    const std::size_t y = rng.index(spec.n_classes);
    all.labels[r] = static_cast<int>(y);
    for (std::size_t k = 0; k < spec.shared_dim; ++k) s[k] = a_shared * geo.shared_means[y][k] + rng.normal();
    for (std::size_t i = 0; i < spec.n_views; ++i) {
      std::size_t at = 0;
      for (std::size_t k = 0; k < spec.shared_dim; ++k) latent[at++] = s[k];
      for (std::size_t k = 0; k < spec.private_dim; ++k) {
        latent[at++] = a_private * geo.private_means[i][y][k] + rng.normal();
      }
      for (std::size_t k = 0; k < spec.nuisance_dim; ++k) {
        const double n = rng.normal();
        all.nuisance[i](r, k) = n;
        latent[at++] = n;
      }
      const Tensor& mix = geo.mixing[i];
      for (std::size_t a = 0; a < d; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < d; ++b) acc += mix(a, b) * latent[b];
        all.views[i](r, a) = acc;
      }
    }
  }

  return all;
}

/// Draws `n_samples` samples (stream 0) and splits them 70/20/10 in draw order.
inline SplitDataset generate_continuous(const GeneratorSpec& spec, std::size_t n_samples) {
  const MultiViewBatch all = sample_continuous(spec, n_samples);
  const SplitSizes sz = split_sizes(n_samples);
  return {all.slice(0, sz.train), all.slice(sz.train, sz.train + sz.val), all.slice(sz.train + sz.val, n_samples)};
}

/// CSV export of one split: `#` comment lines echoing the spec, a column
/// header, then `label,v1_0,...,v2_0,...` rows with 17 significant digits.
inline void write_dataset_csv(std::ostream& out, const MultiViewBatch& batch, const GeneratorSpec& spec,
                              const std::string& split_name) {
  out << "# split: " << split_name << '\n';
  out << "# spec: " << nlohmann::json(spec).dump() << '\n';
  out << "label";
  for (std::size_t i = 0; i < batch.n_views(); ++i) {
    for (std::size_t c = 0; c < batch.views[i].cols(); ++c) out << ",v" << (i + 1) << '_' << c;
  }
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < batch.size(); ++r) {
    out << batch.labels[r];
    for (const auto& v : batch.views) {
      for (double x : v.row(r)) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << ',' << buf;
      }
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Discrete worlds

using Channel = std::vector<std::vector<double>>;  // [label][observation], rows sum to 1

struct DiscreteWorld {
  JointPMF pmf;  // over (y, v1, ..., vn)
  std::vector<double> label_prior;
  std::vector<Channel> channels;

  std::size_t n_views() const { return channels.size(); }
  Names view_names() const {
    Names out;
    for (std::size_t i = 0; i < n_views(); ++i) out.push_back("v" + std::to_string(i + 1));
    return out;
  }
};

inline constexpr std::size_t kMaxDiscreteWorldCells = 1'000'000;

/// Joint of y ~ prior and conditionally independent views v_i ~ channels[i][y].
inline DiscreteWorld make_discrete_world(std::vector<double> label_prior, std::vector<Channel> channels) {
  if (label_prior.empty()) throw InvalidArgument("discrete world: empty label prior");
  if (channels.empty()) throw InvalidArgument("discrete world: no views");
  std::vector<VariableSpec> vars{{"y", label_prior.size()}};
  std::size_t cells = label_prior.size();
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Channel& ch = channels[i];
    if (ch.size() != label_prior.size() || ch[0].empty()) throw InvalidArgument("discrete world: channel shape mismatch");
    for (const auto& row : ch) {
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw InvalidArgument("discrete world: negative channel entry");
        s += p;
      }
      if (row.size() != ch[0].size() || std::abs(s - 1.0) > 1e-12) {
        throw InvalidArgument("discrete world: channel rows must be distributions of equal length");
      }
    }
    if (cells > kMaxDiscreteWorldCells / ch[0].size()) throw InvalidArgument("discrete world: table too large");
    cells *= ch[0].size();
    vars.push_back({"v" + std::to_string(i + 1), ch[0].size()});
  }

  std::vector<double> probs;
  probs.reserve(cells);
  std::vector<std::size_t> digit(channels.size(), 0);
  for (std::size_t y = 0; y < label_prior.size(); ++y) {
    const std::size_t per_label = cells / label_prior.size();
    std::fill(digit.begin(), digit.end(), 0);
    for (std::size_t k = 0; k < per_label; ++k) {
      double p = label_prior[y];
      for (std::size_t i = 0; i < channels.size(); ++i) p *= channels[i][y][digit[i]];
      probs.push_back(p);
      for (std::size_t i = channels.size(); i-- > 0;) {
        if (++digit[i] < channels[i][0].size()) break;
        digit[i] = 0;
      }
    }
  }
  JointPMF pmf = JointPMF::from_weights(std::move(vars), std::move(probs));
  return {std::move(pmf), std::move(label_prior), std::move(channels)};
}

/// Parameters of the composite-label discrete family.
///
/// y = (g, p_1, ..., p_n) uniform, g over shared_card symbols and each p_i over
/// private_card symbols. View i observes (s_i, u_i): s_i is g kept with
/// probability shared_fidelity (else uniform), u_i is p_i kept with probability
/// private_label_leak (else uniform). p_i is visible only through view i, so
/// I(y; v_i | v_rest) = I(p_i; u_i) grows with the leak.
struct DiscreteSpec {
  std::size_t n_views = 3;
  std::size_t shared_card = 2;
  std::size_t private_card = 2;
  double shared_fidelity = 0.8;
  double private_label_leak = 0.5;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DiscreteSpec, n_views, shared_card, private_card, shared_fidelity,
                                                private_label_leak)

inline DiscreteWorld generate_discrete(const DiscreteSpec& spec) {
  if (spec.n_views == 0 || spec.shared_card == 0 || spec.private_card == 0) {
    throw InvalidArgument("DiscreteSpec: counts must be >= 1");
  }
  for (double f : {spec.shared_fidelity, spec.private_label_leak}) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("DiscreteSpec: probabilities must lie in [0, 1]");
  }
  std::size_t label_card = spec.shared_card;
  for (std::size_t i = 0; i < spec.n_views; ++i) {
    if (label_card > kMaxDiscreteWorldCells / spec.private_card) throw InvalidArgument("DiscreteSpec: table too large");
    label_card *= spec.private_card;
  }
  const std::size_t view_card = spec.shared_card * spec.private_card;
  {
    double cells = static_cast<double>(label_card);
    for (std::size_t i = 0; i < spec.n_views; ++i) cells *= static_cast<double>(view_card);
    if (cells > static_cast<double>(kMaxDiscreteWorldCells)) throw InvalidArgument("DiscreteSpec: table too large");
  }

  auto keep_or_uniform = [](std::size_t in, std::size_t out, std::size_t card, double keep) {
    return keep * (in == out ? 1.0 : 0.0) + (1.0 - keep) / static_cast<double>(card);
  };

  std::vector<Channel> channels(spec.n_views, Channel(label_card, std::vector<double>(view_card)));
  for (std::size_t y = 0; y < label_card; ++y) {
    // y = g * private_card^n + p_1 * private_card^(n-1) + ... + p_n
    std::vector<std::size_t> p(spec.n_views);
    std::size_t rest = y;
    for (std::size_t i = spec.n_views; i-- > 0;) {
      p[i] = rest % spec.private_card;
      rest /= spec.private_card;
    }
    const std::size_t g = rest;
    for (std::size_t i = 0; i < spec.n_views; ++i) {
      for (std::size_t s = 0; s < spec.shared_card; ++s) {
        for (std::size_t u = 0; u < spec.private_card; ++u) {
          channels[i][y][s * spec.private_card + u] =
              keep_or_uniform(g, s, spec.shared_card, spec.shared_fidelity) *
              keep_or_uniform(p[i], u, spec.private_card, spec.private_label_leak);
        }
      }
    }
  }
  std::vector<double> prior(label_card, 1.0 / static_cast<double>(label_card));
  return make_discrete_world(std::move(prior), std::move(channels));
}

/// Ancestral samples of (y, v_1..v_n); column 0 is y.
inline std::vector<std::vector<std::size_t>> sample_discrete(const DiscreteWorld& world, std::size_t n, Rng& rng) {
  auto draw = [&](const std::vector<double>& dist) {
    const double u = rng.uniform();
    double c = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      c += dist[k];
      if (u < c) return k;
    }
    return dist.size() - 1;
  };
  std::vector<std::vector<std::size_t>> cols(1 + world.n_views(), std::vector<std::size_t>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t y = draw(world.label_prior);
    cols[0][r] = y;
    for (std::size_t i = 0; i < world.n_views(); ++i) cols[1 + i][r] = draw(world.channels[i][y]);
  }
  return cols;
}

/// The world extended with representations z_i that copy v_i exactly.
inline JointPMF with_copy_representations(const DiscreteWorld& world) {
  const auto& base = world.pmf.variables();
  std::vector<VariableSpec> vars = base;
  for (std::size_t i = 0; i < world.n_views(); ++i) vars.push_back({"z" + std::to_string(i + 1), base[1 + i].cardinality});
  const std::size_t zc = detail::checked_cells(std::span(vars).subspan(base.size()));
  std::vector<double> probs(world.pmf.size() * zc, 0.0);
  std::vector<std::size_t> digit(base.size(), 0);
  for (std::size_t cell = 0; cell < world.pmf.size(); ++cell) {
    std::size_t z = 0;
    for (std::size_t i = 0; i < world.n_views(); ++i) z = z * base[1 + i].cardinality + digit[1 + i];
    probs[cell * zc + z] = world.pmf.probabilities()[cell];
    for (std::size_t v = base.size(); v-- > 0;) {
      if (++digit[v] < base[v].cardinality) break;
      digit[v] = 0;
    }
  }
  return JointPMF::from_weights(std::move(vars), std::move(probs));
}

}  // namespace mvib
