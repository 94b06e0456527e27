#pragma once

// Variational distillation losses over predicted class distributions.
//
// Every KL term is a batch mean. Teachers (observation predictions P_v and
// the joint prediction P_Z) go through stop_gradient inside the losses, so
// only the student side of each KL is pulled toward its target.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvib/autodiff.hpp"

namespace mvib {

/// Predicted class distributions produced by one forward pass.
struct PredictionBundle {
  std::vector<Var> observation;     // P_{v_i}
  std::vector<Var> representation;  // P_{z_i}
  Var joint;                        // P_{z_1..n}; aliases representation[0] when n = 1
  std::vector<Var> leave_one_out;   // P_{z_1..n / i}; empty when n = 1

  std::size_t n_views() const { return observation.size(); }

  // Checks shapes and row sums; throws InvalidArgument.
  void validate() const {
    const std::size_t n = n_views();
    if (n == 0) throw InvalidArgument("PredictionBundle: no views");
    if (representation.size() != n) throw InvalidArgument("PredictionBundle: representation count mismatch");
    if (!joint.valid()) throw InvalidArgument("PredictionBundle: missing joint prediction");
    if (n > 1 && leave_one_out.size() != n) {
      throw InvalidArgument("PredictionBundle: missing leave-one-out predictions");
    }
    const Tensor& ref = observation[0].value();
    auto check = [&](const Var& v) {
      if (!v.valid()) throw InvalidArgument("PredictionBundle: unbound prediction");
      if (!v.value().same_shape(ref)) throw InvalidArgument("PredictionBundle: batch size or class count mismatch");
      detail::require_distribution_rows(v.value(), "PredictionBundle");
    };
    for (const auto& v : observation) check(v);
    for (const auto& v : representation) check(v);
    check(joint);
    for (const auto& v : leave_one_out) check(v);
  }
};

struct LossWeights {
  double ce_weight = 1.0;
  double task_aux_weight = 1.0;
  double vd_weight = 2.0;

  void validate() const {
    for (double w : {ce_weight, task_aux_weight, vd_weight}) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("LossWeights must be finite and >= 0");
    }
  }
};

enum class LossMode { kCeOnly, kCeVsd, kCeVcdVmd, kCeMv2d };

inline std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kCeOnly: return "ce-only";
    case LossMode::kCeVsd: return "ce+vsd";
    case LossMode::kCeVcdVmd: return "ce+vcd+vmd";
    case LossMode::kCeMv2d: return "ce+mv2d";
  }
  return "?";
}

inline LossMode parse_loss_mode(std::string_view name) {
  for (LossMode m : {LossMode::kCeOnly, LossMode::kCeVsd, LossMode::kCeVcdVmd, LossMode::kCeMv2d}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown loss mode '" + std::string(name) + "'");
}

namespace detail {

inline void require_view(const PredictionBundle& b, std::size_t i) {
  if (i >= b.n_views()) throw InvalidArgument("view index " + std::to_string(i) + " out of range");
}

inline void require_two_views(const PredictionBundle& b, const char* op) {
  if (b.n_views() != 2) throw InvalidArgument(std::string(op) + " is defined for exactly two views");
}

inline Var add_all(std::span<const Var> terms) {
  Var total = terms[0];
  for (std::size_t k = 1; k < terms.size(); ++k) total = add(total, terms[k]);
  return total;
}

}  // namespace detail

/// KL(P_{v_i} || P_{z_i}): self-distillation of view i.
inline Var vsd_loss(const PredictionBundle& b, std::size_t i) {
  detail::require_view(b, i);
  return kl_divergence(stop_gradient(b.observation[i]), b.representation[i]);
}

/// KL(P_{z_1} || P_{z_2}) + KL(P_{z_2} || P_{z_1}). Both sides are students.
inline Var vmd_loss(const PredictionBundle& b) {
  detail::require_two_views(b, "vmd_loss");
  return add(kl_divergence(b.representation[0], b.representation[1]),
             kl_divergence(b.representation[1], b.representation[0]));
}

/// KL(P_{v_2} || P_{z_1}) + KL(P_{v_1} || P_{z_2}).
inline Var vcd_loss(const PredictionBundle& b) {
  detail::require_two_views(b, "vcd_loss");
  return add(kl_divergence(stop_gradient(b.observation[1]), b.representation[0]),
             kl_divergence(stop_gradient(b.observation[0]), b.representation[1]));
}

/// Sum_i KL(P_{v_i} || P_{z_i}).
inline Var sufficiency_term(const PredictionBundle& b) {
  std::vector<Var> terms;
  for (std::size_t i = 0; i < b.n_views(); ++i) terms.push_back(vsd_loss(b, i));
  return detail::add_all(terms);
}

/// Sum_i KL(P_{z_1..n} || P_{z_1..n / i}); a zero constant when n = 1.
inline Var consistency_term(const PredictionBundle& b) {
  if (b.n_views() == 1) return b.joint.tape().constant(Tensor::scalar(0.0));
  if (b.leave_one_out.size() != b.n_views()) throw InvalidArgument("mv2d_loss: missing leave-one-out predictions");
  const Var teacher = stop_gradient(b.joint);
  std::vector<Var> terms;
  for (std::size_t i = 0; i < b.n_views(); ++i) terms.push_back(kl_divergence(teacher, b.leave_one_out[i]));
  return detail::add_all(terms);
}

/// Sufficiency plus consistency sums; reduces to vsd_loss for one view.
inline Var mv2d_loss(const PredictionBundle& b) {
  if (b.n_views() == 1) return vsd_loss(b, 0);
  return add(sufficiency_term(b), consistency_term(b));
}

/// Distillation part selected by a loss mode (zero constant for ce-only).
inline Var distillation_loss(const PredictionBundle& b, LossMode mode) {
  switch (mode) {
    case LossMode::kCeOnly: return b.joint.tape().constant(Tensor::scalar(0.0));
    case LossMode::kCeVsd: return sufficiency_term(b);
    case LossMode::kCeVcdVmd: return add(vcd_loss(b), vmd_loss(b));
    case LossMode::kCeMv2d: return mv2d_loss(b);
  }
  throw InvalidArgument("unknown loss mode");
}

/// Sum of cross-entropies over the observation, representation and joint heads.
/// The joint head is skipped when it aliases the single representation head.
inline Var task_cross_entropy(const PredictionBundle& b, std::span<const int> labels) {
  std::vector<Var> terms;
  for (const auto& p : b.observation) terms.push_back(cross_entropy(p, labels));
  for (const auto& p : b.representation) terms.push_back(cross_entropy(p, labels));
  if (b.n_views() > 1) terms.push_back(cross_entropy(b.joint, labels));
  return detail::add_all(terms);
}

/// Sum of cross-entropies over the leave-one-out heads (zero when n = 1).
inline Var auxiliary_cross_entropy(const PredictionBundle& b, std::span<const int> labels) {
  if (b.leave_one_out.empty()) return b.joint.tape().constant(Tensor::scalar(0.0));
  std::vector<Var> terms;
  for (const auto& p : b.leave_one_out) terms.push_back(cross_entropy(p, labels));
  return detail::add_all(terms);
}

/// ce_weight * task CE + task_aux_weight * leave-one-out CE + vd_weight * distillation.
/// Terms with zero weight are left out of the graph entirely.
inline Var total_objective(const PredictionBundle& b, std::span<const int> labels, const LossWeights& w,
                           LossMode mode = LossMode::kCeMv2d) {
  w.validate();
  std::vector<Var> terms;
  if (w.ce_weight != 0.0) terms.push_back(scale(task_cross_entropy(b, labels), w.ce_weight));
  if (w.task_aux_weight != 0.0 && !b.leave_one_out.empty()) {
    terms.push_back(scale(auxiliary_cross_entropy(b, labels), w.task_aux_weight));
  }
  if (w.vd_weight != 0.0 && mode != LossMode::kCeOnly) {
    terms.push_back(scale(distillation_loss(b, mode), w.vd_weight));
  }
  if (terms.empty()) return b.joint.tape().constant(Tensor::scalar(0.0));
  return detail::add_all(terms);
}

}  // namespace mvib
