#pragma once

// Exact information quantities on small dense joint distributions.
//
// All quantities are in nats. 0 log 0 is taken as 0. Quantities that are
// nonnegative in exact arithmetic are clamped to 0 when they come out within
// kClampTolerance below zero and rejected with ConsistencyError otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mvib/error.hpp"

namespace mvib {

using Names = std::vector<std::string>;
using CategoricalPrediction = std::vector<double>;
using Assignment = std::map<std::string, std::size_t>;

struct VariableSpec {
  std::string name;
  std::size_t cardinality = 1;

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

inline constexpr std::size_t kMaxTableCells = 10'000'000;
inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kClampTolerance = 1e-12;

namespace detail {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline std::size_t checked_cells(std::span<const VariableSpec> vars) {
  std::size_t cells = 1;
  for (const auto& v : vars) {
    if (v.cardinality == 0) throw InvalidArgument("variable '" + v.name + "' has cardinality 0");
    if (cells > kMaxTableCells / v.cardinality) {
      throw InvalidArgument("joint table exceeds the 1e7-cell limit");
    }
    cells *= v.cardinality;
  }
  return cells;
}

inline double clamp_nonnegative(double value, const char* what) {
  if (value >= 0.0) return value;
  if (value >= -kClampTolerance) return 0.0;
  throw ConsistencyError(std::string(what) + " is negative (" + std::to_string(value) + ")");
}

inline double neg_p_log_p(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

}  // namespace detail

/// Dense probability table over an ordered tuple of finite variables.
///
/// Cells are stored row-major: the last variable varies fastest.
class JointPMF {
 public:
  JointPMF() = default;

  JointPMF(std::vector<VariableSpec> variables, std::vector<double> probabilities)
      : variables_(std::move(variables)), probabilities_(std::move(probabilities)) {
    if (variables_.empty()) throw InvalidArgument("JointPMF needs at least one variable");
    std::unordered_set<std::string> seen;
    for (const auto& v : variables_) {
      if (v.name.empty()) throw InvalidArgument("variable names must be nonempty");
      if (!seen.insert(v.name).second) throw InvalidArgument("duplicate variable name '" + v.name + "'");
    }
    const std::size_t cells = detail::checked_cells(variables_);
    if (probabilities_.size() != cells) {
      throw InvalidArgument("JointPMF table has " + std::to_string(probabilities_.size()) +
                            " entries, expected " + std::to_string(cells));
    }
    detail::CompensatedSum total;
    for (double p : probabilities_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("JointPMF entries must be finite and >= 0");
      total.add(p);
    }
    if (std::abs(total.value() - 1.0) > kSumTolerance) {
      throw InvalidArgument("JointPMF entries sum to " + std::to_string(total.value()) + ", not 1");
    }
  }

  // Builds a table from nonnegative weights, normalizing them to sum 1.
  static JointPMF from_weights(std::vector<VariableSpec> variables, std::vector<double> weights) {
    detail::CompensatedSum total;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be finite and >= 0");
      total.add(w);
    }
    if (!(total.value() > 0.0)) throw InvalidArgument("weights sum to zero");
    const double z = total.value();
    for (double& w : weights) w /= z;
    // Division can leave the sum a few ulps from 1; push the residual into the largest cell.
    detail::CompensatedSum check;
    for (double w : weights) check.add(w);
    auto largest = std::max_element(weights.begin(), weights.end());
    *largest += 1.0 - check.value();
    return JointPMF(std::move(variables), std::move(weights));
  }

  const std::vector<VariableSpec>& variables() const { return variables_; }
  std::span<const double> probabilities() const { return probabilities_; }
  std::size_t size() const { return probabilities_.size(); }

  bool contains(std::string_view name) const {
    return std::any_of(variables_.begin(), variables_.end(), [&](const auto& v) { return v.name == name; });
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].name == name) return i;
    }
    throw InvalidArgument("unknown variable '" + std::string(name) + "'");
  }

  const VariableSpec& variable(std::string_view name) const { return variables_[index_of(name)]; }

  // Marginal over `names`, with variables in the order given.
  JointPMF marginal(const Names& names) const {
    if (names.empty()) throw InvalidArgument("marginal needs at least one variable");
    std::vector<std::size_t> keep;
    keep.reserve(names.size());
    for (const auto& n : names) keep.push_back(index_of(n));
    {
      std::vector<std::size_t> sorted = keep;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("marginal: repeated variable name");
      }
    }

    std::vector<VariableSpec> out_vars;
    for (std::size_t k : keep) out_vars.push_back(variables_[k]);
    const std::size_t out_cells = detail::checked_cells(out_vars);

    // Stride of each source variable inside the output table (0 if summed out).
    std::vector<std::size_t> out_stride(variables_.size(), 0);
    {
      std::size_t stride = 1;
      for (std::size_t j = keep.size(); j-- > 0;) {
        out_stride[keep[j]] = stride;
        stride *= variables_[keep[j]].cardinality;
      }
    }

    std::vector<detail::CompensatedSum> acc(out_cells);
    std::vector<std::size_t> digit(variables_.size(), 0);
    std::size_t out_index = 0;
    for (std::size_t cell = 0; cell < probabilities_.size(); ++cell) {
      acc[out_index].add(probabilities_[cell]);
      // Odometer increment, keeping out_index in sync.
      for (std::size_t v = variables_.size(); v-- > 0;) {
        if (++digit[v] < variables_[v].cardinality) {
          out_index += out_stride[v];
          break;
        }
        out_index -= out_stride[v] * (variables_[v].cardinality - 1);
        digit[v] = 0;
      }
    }

    std::vector<double> probs(out_cells);
    for (std::size_t i = 0; i < out_cells; ++i) probs[i] = std::max(0.0, acc[i].value());
    return from_weights(std::move(out_vars), std::move(probs));
  }

  // Linear cell index of a full assignment.
  std::size_t cell_index(std::span<const std::size_t> outcome) const {
    if (outcome.size() != variables_.size()) throw InvalidArgument("outcome arity mismatch");
    std::size_t idx = 0;
    for (std::size_t v = 0; v < variables_.size(); ++v) {
      if (outcome[v] >= variables_[v].cardinality) throw InvalidArgument("outcome out of range");
      idx = idx * variables_[v].cardinality + outcome[v];
    }
    return idx;
  }

  double probability(std::span<const std::size_t> outcome) const { return probabilities_[cell_index(outcome)]; }

 private:
  std::vector<VariableSpec> variables_;
  std::vector<double> probabilities_;
};

namespace detail {

inline void require_known(const JointPMF& pmf, const Names& names) {
  for (const auto& n : names) (void)pmf.index_of(n);
}

inline void require_disjoint(const Names& a, const Names& b, const char* op) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) {
      throw InvalidArgument(std::string(op) + ": variable '" + x + "' appears in two argument sets");
    }
  }
}

inline void require_unique(const Names& a, const char* op) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (a[i] == a[j]) throw InvalidArgument(std::string(op) + ": repeated variable '" + a[i] + "'");
    }
  }
}

inline Names join(const Names& a, const Names& b) {
  Names out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Names join(const Names& a, const Names& b, const Names& c) { return join(join(a, b), c); }

// Joint entropy of a (possibly empty) variable set; no argument validation.
inline double raw_entropy(const JointPMF& pmf, const Names& vars) {
  if (vars.empty()) return 0.0;
  const JointPMF m = pmf.marginal(vars);
  CompensatedSum h;
  for (double p : m.probabilities()) h.add(neg_p_log_p(p));
  return h.value();
}

}  // namespace detail

/// H(vars).
inline double entropy(const JointPMF& pmf, const Names& vars) {
  if (vars.empty()) throw InvalidArgument("entropy: empty variable list");
  detail::require_known(pmf, vars);
  detail::require_unique(vars, "entropy");
  return detail::clamp_nonnegative(detail::raw_entropy(pmf, vars), "entropy");
}

/// H(targets | given) = H(targets, given) - H(given).
inline double conditional_entropy(const JointPMF& pmf, const Names& targets, const Names& given) {
  if (targets.empty()) throw InvalidArgument("conditional_entropy: empty target list");
  detail::require_known(pmf, targets);
  detail::require_known(pmf, given);
  detail::require_unique(targets, "conditional_entropy");
  detail::require_unique(given, "conditional_entropy");
  detail::require_disjoint(targets, given, "conditional_entropy");
  const double h = detail::raw_entropy(pmf, detail::join(targets, given)) - detail::raw_entropy(pmf, given);
  return detail::clamp_nonnegative(h, "conditional entropy");
}

/// I(a; b | given) = H(a|g) + H(b|g) - H(a,b|g). `given` may be empty.
inline double conditional_mutual_info(const JointPMF& pmf, const Names& a, const Names& b, const Names& given) {
  if (a.empty() || b.empty()) throw InvalidArgument("conditional_mutual_info: empty argument set");
  for (const Names* s : {&a, &b, &given}) {
    detail::require_known(pmf, *s);
    detail::require_unique(*s, "conditional_mutual_info");
  }
  detail::require_disjoint(a, b, "conditional_mutual_info");
  detail::require_disjoint(a, given, "conditional_mutual_info");
  detail::require_disjoint(b, given, "conditional_mutual_info");
  using detail::join;
  using detail::raw_entropy;
  const double value = raw_entropy(pmf, join(a, given)) + raw_entropy(pmf, join(b, given)) -
                       raw_entropy(pmf, join(a, b, given)) - raw_entropy(pmf, given);
  return detail::clamp_nonnegative(value, "conditional mutual information");
}

/// I(a; b) = H(a) + H(b) - H(a,b).
inline double mutual_info(const JointPMF& pmf, const Names& a, const Names& b) {
  return conditional_mutual_info(pmf, a, b, {});
}

/// I(a; b; c) = I(a; b) - I(a; b | c). Can be negative (synergy).
inline double interaction_info(const JointPMF& pmf, const Names& a, const Names& b, const Names& c) {
  if (c.empty()) throw InvalidArgument("interaction_info: empty third set");
  detail::require_disjoint(a, c, "interaction_info");
  detail::require_disjoint(b, c, "interaction_info");
  return mutual_info(pmf, a, b) - conditional_mutual_info(pmf, a, b, c);
}

/// p(target | given-assignment), over target outcomes in row-major order.
inline CategoricalPrediction posterior(const JointPMF& pmf, const Names& target, const Assignment& given) {
  if (target.empty()) throw InvalidArgument("posterior: empty target list");
  detail::require_known(pmf, target);
  detail::require_unique(target, "posterior");
  Names given_names;
  for (const auto& [name, value] : given) {
    const auto& var = pmf.variable(name);
    if (value >= var.cardinality) throw InvalidArgument("posterior: outcome out of range for '" + name + "'");
    given_names.push_back(name);
  }
  detail::require_disjoint(target, given_names, "posterior");

  const JointPMF m = pmf.marginal(detail::join(target, given_names));
  std::size_t target_cells = 1;
  for (const auto& n : target) target_cells *= pmf.variable(n).cardinality;
  std::size_t given_offset = 0;
  for (const auto& [name, value] : given) given_offset = given_offset * pmf.variable(name).cardinality + value;
  const std::size_t given_cells = m.size() / target_cells;

  CategoricalPrediction out(target_cells);
  detail::CompensatedSum z;
  for (std::size_t t = 0; t < target_cells; ++t) {
    out[t] = m.probabilities()[t * given_cells + given_offset];
    z.add(out[t]);
  }
  if (!(z.value() > 0.0)) throw InvalidArgument("posterior: conditioning event has zero probability");
  for (double& p : out) p /= z.value();
  return out;
}

/// E_{full}[ KL( p(target | full) || p(target | reduced) ) ], computed as a direct
/// sum over cells (independent of the entropy route).
inline double expected_posterior_kl(const JointPMF& pmf, const Names& target, const Names& full,
                                    const Names& reduced) {
  if (target.empty()) throw InvalidArgument("expected_posterior_kl: empty target list");
  for (const Names* s : {&target, &full, &reduced}) {
    detail::require_known(pmf, *s);
    detail::require_unique(*s, "expected_posterior_kl");
  }
  detail::require_disjoint(target, full, "expected_posterior_kl");
  Names extra;
  for (const auto& r : reduced) {
    if (std::find(full.begin(), full.end(), r) == full.end()) {
      throw InvalidArgument("expected_posterior_kl: '" + r + "' is in reduced-given but not in full-given");
    }
  }
  for (const auto& f : full) {
    if (std::find(reduced.begin(), reduced.end(), f) == reduced.end()) extra.push_back(f);
  }
  if (extra.empty()) return 0.0;

  // Table over (target, reduced, extra); index = (t * R + r) * E + e.
  const JointPMF m = pmf.marginal(detail::join(target, reduced, extra));
  auto cells_of = [&](const Names& ns) {
    std::size_t c = 1;
    for (const auto& n : ns) c *= pmf.variable(n).cardinality;
    return c;
  };
  const std::size_t T = cells_of(target), R = cells_of(reduced), E = cells_of(extra);
  const auto p = m.probabilities();

  std::vector<double> p_re(R * E, 0.0), p_tr(T * R, 0.0), p_r(R, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t e = 0; e < E; ++e) {
        const double v = p[(t * R + r) * E + e];
        p_re[r * E + e] += v;
        p_tr[t * R + r] += v;
        p_r[r] += v;
      }
    }
  }

  detail::CompensatedSum kl;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t e = 0; e < E; ++e) {
        const double v = p[(t * R + r) * E + e];
        if (v <= 0.0) continue;
        const double post_full = v / p_re[r * E + e];
        const double post_reduced = p_tr[t * R + r] / p_r[r];
        kl.add(v * std::log(post_full / post_reduced));
      }
    }
  }
  return detail::clamp_nonnegative(kl.value(), "expected posterior KL");
}

}  // namespace mvib
