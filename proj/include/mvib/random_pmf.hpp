#pragma once

// Random joint distributions and view systems for property checks.

#include <cmath>
#include <string>
#include <vector>

#include "mvib/oracle.hpp"
#include "mvib/rng.hpp"

namespace mvib {

// Dirichlet(1)-distributed table; roughly `zero_fraction` of cells are forced to 0
// so that 0 log 0 paths are exercised.
inline JointPMF random_pmf(Rng& rng, std::vector<VariableSpec> vars, double zero_fraction = 0.0) {
  const std::size_t cells = detail::checked_cells(vars);
  std::vector<double> w(cells);
  for (auto& x : w) {
    x = -std::log(1.0 - rng.uniform());
    if (zero_fraction > 0.0 && rng.uniform() < zero_fraction) x = 0.0;
  }
  bool any = false;
  for (double x : w) any = any || x > 0.0;
  if (!any) w[rng.index(cells)] = 1.0;
  return JointPMF::from_weights(std::move(vars), std::move(w));
}

// Random row-stochastic matrix, rows indexed by input symbol.
inline std::vector<std::vector<double>> random_channel(Rng& rng, std::size_t in_card, std::size_t out_card) {
  std::vector<std::vector<double>> ch(in_card, std::vector<double>(out_card));
  for (auto& row : ch) {
    double z = 0.0;
    for (auto& x : row) {
      x = -std::log(1.0 - rng.uniform());
      z += x;
    }
    for (auto& x : row) x /= z;
  }
  return ch;
}

struct ViewSystemShape {
  std::size_t n_views = 2;
  std::size_t label_card = 2;
  std::size_t observation_card = 2;
  std::size_t representation_card = 2;
};

// Joint over (y, v_1..v_n, z_1..z_n): (y, v) drawn at random, then each z_i
// produced by its own channel from v_i alone, so z_i is conditionally
// independent of everything else given v_i.
inline JointPMF random_markov_pmf(Rng& rng, const ViewSystemShape& shape) {
  std::vector<VariableSpec> base{{"y", shape.label_card}};
  for (std::size_t i = 0; i < shape.n_views; ++i) base.push_back({"v" + std::to_string(i + 1), shape.observation_card});
  const JointPMF yv = random_pmf(rng, base, 0.1);

  std::vector<std::vector<std::vector<double>>> channels;
  for (std::size_t i = 0; i < shape.n_views; ++i) {
    channels.push_back(random_channel(rng, shape.observation_card, shape.representation_card));
  }

  std::vector<VariableSpec> vars = base;
  for (std::size_t i = 0; i < shape.n_views; ++i) vars.push_back({"z" + std::to_string(i + 1), shape.representation_card});
  const std::size_t zc = detail::checked_cells(std::span(vars).subspan(base.size()));

  std::vector<double> probs;
  probs.reserve(yv.size() * zc);
  std::vector<std::size_t> digits(base.size(), 0);
  std::vector<std::size_t> zd(shape.n_views, 0);
  for (std::size_t cell = 0; cell < yv.size(); ++cell) {
    const double p = yv.probabilities()[cell];
    std::fill(zd.begin(), zd.end(), 0);
    for (std::size_t k = 0; k < zc; ++k) {
      double q = p;
      for (std::size_t i = 0; i < shape.n_views; ++i) q *= channels[i][digits[1 + i]][zd[i]];
      probs.push_back(q);
      for (std::size_t i = shape.n_views; i-- > 0;) {
        if (++zd[i] < shape.representation_card) break;
        zd[i] = 0;
      }
    }
    for (std::size_t v = base.size(); v-- > 0;) {
      if (++digits[v] < base[v].cardinality) break;
      digits[v] = 0;
    }
  }
  return JointPMF::from_weights(std::move(vars), std::move(probs));
}

}  // namespace mvib
