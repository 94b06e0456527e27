#pragma once

// Per-view decomposition of I(v_i; z_i):
//
//   I(v_i; z_i) = I(y; z_i) + I(v_i; z_i | y)            predictive + superfluous
//   I(y; z_i)   = I(y; z_i | z_rest) + I^c_i             view-specific + consistent
//
// I^c_i is defined by subtraction, so it can dip below zero under synergy.
// Views are indexed from 0.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvib/oracle.hpp"

namespace mvib {

inline constexpr double kIdentityTolerance = 1e-10;

/// Joint distribution over a label, n observations and their n representations.
class ViewSystem {
 public:
  ViewSystem(JointPMF pmf, std::string label, Names observations, Names representations)
      : pmf_(std::move(pmf)),
        label_(std::move(label)),
        observations_(std::move(observations)),
        representations_(std::move(representations)) {
    if (observations_.empty()) throw InvalidArgument("ViewSystem needs at least one view");
    if (observations_.size() != representations_.size()) {
      throw InvalidArgument("ViewSystem: observation and representation counts differ");
    }
    Names all{label_};
    all.insert(all.end(), observations_.begin(), observations_.end());
    all.insert(all.end(), representations_.begin(), representations_.end());
    detail::require_unique(all, "ViewSystem");
    detail::require_known(pmf_, all);
    for (std::size_t i = 0; i < n_views(); ++i) {
      const double leak = conditional_mutual_info(pmf_, {representations_[i]}, {label_}, {observations_[i]});
      if (leak > kIdentityTolerance) {
        throw InvalidArgument("ViewSystem: " + representations_[i] + " depends on the label beyond " +
                              observations_[i] + " (I = " + std::to_string(leak) + ")");
      }
    }
  }

  const JointPMF& pmf() const { return pmf_; }
  const std::string& label() const { return label_; }
  const Names& observations() const { return observations_; }
  const Names& representations() const { return representations_; }
  std::size_t n_views() const { return observations_.size(); }

  void check_index(std::size_t i) const {
    if (i >= n_views()) {
      throw InvalidArgument("view index " + std::to_string(i) + " out of range for " + std::to_string(n_views()) +
                            " views");
    }
  }

  // z_j for all j != i.
  Names other_representations(std::size_t i) const {
    check_index(i);
    Names rest;
    for (std::size_t j = 0; j < n_views(); ++j) {
      if (j != i) rest.push_back(representations_[j]);
    }
    return rest;
  }

 private:
  JointPMF pmf_;
  std::string label_;
  Names observations_;
  Names representations_;
};

/// I(y; z_i).
inline double predictive_info(const ViewSystem& sys, std::size_t i) {
  sys.check_index(i);
  return mutual_info(sys.pmf(), {sys.label()}, {sys.representations()[i]});
}

/// I(v_i; z_i | y).
inline double superfluous_info(const ViewSystem& sys, std::size_t i) {
  sys.check_index(i);
  return conditional_mutual_info(sys.pmf(), {sys.observations()[i]}, {sys.representations()[i]}, {sys.label()});
}

struct ViewSpecificInfo {
  double nats = 0.0;
  // Single-view system: the conditioning set is empty and `nats` is I(y; z_1).
  bool degenerate = false;
};

/// I(y; z_i | z_rest).
inline ViewSpecificInfo view_specific_info(const ViewSystem& sys, std::size_t i) {
  sys.check_index(i);
  const Names rest = sys.other_representations(i);
  return {conditional_mutual_info(sys.pmf(), {sys.label()}, {sys.representations()[i]}, rest), rest.empty()};
}

/// I^c_i = I(y; z_i) - I(y; z_i | z_rest); equals I(y; z_1) when n = 1.
inline double consistent_info(const ViewSystem& sys, std::size_t i) {
  const double predictive = predictive_info(sys, i);
  const ViewSpecificInfo vs = view_specific_info(sys, i);
  return vs.degenerate ? predictive : predictive - vs.nats;
}

struct ViewTerms {
  double predictive = 0.0;
  double superfluous = 0.0;
  double view_specific = 0.0;
  double consistent = 0.0;

  friend bool operator==(const ViewTerms&, const ViewTerms&) = default;
};

struct InfoReport {
  std::vector<ViewTerms> views;
  bool single_view = false;

  friend bool operator==(const InfoReport&, const InfoReport&) = default;
};

inline InfoReport decompose(const ViewSystem& sys) {
  InfoReport report;
  report.single_view = sys.n_views() == 1;
  for (std::size_t i = 0; i < sys.n_views(); ++i) {
    ViewTerms t;
    t.predictive = predictive_info(sys, i);
    t.superfluous = superfluous_info(sys, i);
    const ViewSpecificInfo vs = view_specific_info(sys, i);
    t.view_specific = vs.degenerate ? 0.0 : vs.nats;
    t.consistent = t.predictive - t.view_specific;
    if (t.consistent < -kClampTolerance) {
      std::fprintf(stderr, "mvib: negative consistent information %.3e nats for view %zu (synergy)\n",
                   t.consistent, i + 1);
    }
    report.views.push_back(t);
  }
  return report;
}

inline nlohmann::ordered_json to_json(const InfoReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < report.views.size(); ++i) {
    const std::string prefix = "view_" + std::to_string(i + 1) + ".";
    const auto& t = report.views[i];
    j[prefix + "predictive"] = t.predictive;
    j[prefix + "superfluous"] = t.superfluous;
    j[prefix + "view_specific"] = t.view_specific;
    j[prefix + "consistent"] = t.consistent;
  }
  return j;
}

inline std::string csv_header(const InfoReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.views.size(); ++i) {
    const std::string v = "view_" + std::to_string(i + 1) + ".";
    if (i) out += ',';
    out += v + "predictive," + v + "superfluous," + v + "view_specific," + v + "consistent";
  }
  return out;
}

inline std::string csv_row(const InfoReport& report) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < report.views.size(); ++i) {
    const auto& t = report.views[i];
    for (double x : {t.predictive, t.superfluous, t.view_specific, t.consistent}) {
      if (!out.empty()) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out += buf;
    }
  }
  return out;
}

struct IdentityCheck {
  bool holds = true;
  std::vector<std::pair<std::string, double>> residuals;

  double max_residual() const {
    double m = 0.0;
    for (const auto& [_, r] : residuals) m = std::max(m, r);
    return m;
  }
};

/// Checks the one- and two-view degeneration identities.
///
/// n = 1: I^c_1 = I(y; z_1), and I(v_1; z_1) = I(y; z_1) + I(v_1; z_1 | y).
/// n = 2, for each view i with partner j: expanding I(v_i; z_i) through z_j,
///   I(v_i; z_i|z_j) + I(z_j; z_i|y) + [I(z_i; z_j) - I(z_i; z_j|y)],
/// and through y,
///   I(v_i; z_i|y) + I(y; z_i|z_j) + [I(y; z_i) - I(y; z_i|z_j)],
/// both reproduce I(v_i; z_i), and the two bracketed consistent terms agree.
inline IdentityCheck verify_corollary2(const ViewSystem& sys) {
  const auto& pmf = sys.pmf();
  const std::string& y = sys.label();
  IdentityCheck check;
  auto record = [&](std::string name, double residual) {
    check.residuals.emplace_back(std::move(name), residual);
    if (!(residual < kIdentityTolerance)) check.holds = false;
  };

  if (sys.n_views() == 1) {
    const std::string& v = sys.observations()[0];
    const std::string& z = sys.representations()[0];
    const double iyz = mutual_info(pmf, {y}, {z});
    record("consistent-equals-predictive", std::abs(consistent_info(sys, 0) - iyz));
    record("predictive-plus-superfluous",
           std::abs(mutual_info(pmf, {v}, {z}) - iyz - conditional_mutual_info(pmf, {v}, {z}, {y})));
    return check;
  }
  if (sys.n_views() != 2) throw InvalidArgument("verify_corollary2 needs a one- or two-view system");

  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t j = 1 - i;
    const std::string& vi = sys.observations()[i];
    const std::string& zi = sys.representations()[i];
    const std::string& zj = sys.representations()[j];
    const std::string tag = "view" + std::to_string(i + 1);

    const double total = mutual_info(pmf, {vi}, {zi});
    const double consistent_via_z = mutual_info(pmf, {zi}, {zj}) - conditional_mutual_info(pmf, {zi}, {zj}, {y});
    const double consistent_via_y = consistent_info(sys, i);
    const double route_z = conditional_mutual_info(pmf, {vi}, {zi}, {zj}) +
                           conditional_mutual_info(pmf, {zj}, {zi}, {y}) + consistent_via_z;
    const double route_y = conditional_mutual_info(pmf, {vi}, {zi}, {y}) +
                           conditional_mutual_info(pmf, {y}, {zi}, {zj}) + consistent_via_y;
    record(tag + "-chain-through-partner", std::abs(route_z - total));
    record(tag + "-chain-through-label", std::abs(route_y - total));
    record(tag + "-consistent-terms-agree", std::abs(consistent_via_z - consistent_via_y));
  }
  return check;
}

/// Two-view family sliding from view-specific to fully shared representations.
///
/// y = (g, p_1, p_2) is three uniform bits and v_i = (g, p_i). The encoder
/// keeps g and passes p_i with probability 1 - alpha, otherwise emits 0 in
/// its place. At alpha = 1 both z_i carry only the shared bit g.
inline ViewSystem shared_limit_family(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("shared_limit_family: alpha must lie in [0, 1]");
  const std::vector<VariableSpec> vars{{"y", 8}, {"v1", 4}, {"v2", 4}, {"z1", 4}, {"z2", 4}};
  std::vector<double> table(8 * 4 * 4 * 4 * 4, 0.0);
  auto encode = [&](std::size_t v, std::size_t z) {
    const std::size_t g = v >> 1, p = v & 1;
    if ((z >> 1) != g) return 0.0;
    if (p == 0) return (z & 1) == 0 ? 1.0 : 0.0;
    return (z & 1) == 1 ? 1.0 - alpha : alpha;
  };
  for (std::size_t y = 0; y < 8; ++y) {
    const std::size_t g = y >> 2, p1 = (y >> 1) & 1, p2 = y & 1;
    const std::size_t v1 = (g << 1) | p1, v2 = (g << 1) | p2;
    for (std::size_t z1 = 0; z1 < 4; ++z1) {
      for (std::size_t z2 = 0; z2 < 4; ++z2) {
        table[(((y * 4 + v1) * 4 + v2) * 4 + z1) * 4 + z2] = 0.125 * encode(v1, z1) * encode(v2, z2);
      }
    }
  }
  return ViewSystem(JointPMF::from_weights(vars, std::move(table)), "y", {"v1", "v2"}, {"z1", "z2"});
}

}  // namespace mvib
