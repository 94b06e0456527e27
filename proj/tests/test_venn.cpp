#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "mvib/random_pmf.hpp"
#include "mvib/venn.hpp"

using namespace mvib;

namespace {

const double kLn2 = std::numbers::ln2;

using Fn = std::function<std::size_t(std::size_t)>;

struct Var {
  std::size_t card;
  Fn f;
};

// Uniform latent u over `latent` states; y = label.f(u), v_i = views[i].f(u),
// z_i = reps[i].f(v_i). Deterministic encoders keep the Markov property.
ViewSystem build(std::size_t latent, Var label, std::vector<Var> views, std::vector<Var> reps) {
  std::vector<VariableSpec> vars{{"y", label.card}};
  Names v, z;
  for (std::size_t i = 0; i < views.size(); ++i) {
    v.push_back("v" + std::to_string(i + 1));
    vars.push_back({v.back(), views[i].card});
  }
  for (std::size_t i = 0; i < reps.size(); ++i) {
    z.push_back("z" + std::to_string(i + 1));
    vars.push_back({z.back(), reps[i].card});
  }
  std::vector<double> w(detail::checked_cells(vars), 0.0);
  for (std::size_t u = 0; u < latent; ++u) {
    std::vector<std::size_t> outcome{label.f(u)};
    for (const auto& view : views) outcome.push_back(view.f(u));
    for (std::size_t i = 0; i < reps.size(); ++i) outcome.push_back(reps[i].f(outcome[1 + i]));
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) idx = idx * vars[k].cardinality + outcome[k];
    w[idx] += 1.0;
  }
  return ViewSystem(JointPMF::from_weights(vars, w), "y", v, z);
}

const Fn kId = [](std::size_t x) { return x; };

ViewSystem random_system(Rng& rng, std::size_t n) {
  ViewSystemShape shape;
  shape.n_views = n;
  shape.label_card = 2 + rng.index(2);
  shape.observation_card = 2 + rng.index(2);
  shape.representation_card = 2 + rng.index(2);
  Names v, z;
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back("v" + std::to_string(i + 1));
    z.push_back("z" + std::to_string(i + 1));
  }
  return ViewSystem(random_markov_pmf(rng, shape), "y", v, z);
}

}  // namespace

TEST(ViewSystem, RejectsInvalidSystems) {
  const JointPMF p({{"y", 2}, {"v1", 2}, {"z1", 2}}, {0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0});
  // z1 = v1 xor y depends on y beyond v1
  EXPECT_THROW(ViewSystem(p, "y", {"v1"}, {"z1"}), InvalidArgument);
  EXPECT_THROW(ViewSystem(p, "y", {}, {}), InvalidArgument);
  EXPECT_THROW(ViewSystem(p, "y", {"v1"}, {"v1"}), InvalidArgument);
  EXPECT_THROW(ViewSystem(p, "y", {"v1"}, {"q"}), InvalidArgument);
}

TEST(Superfluous, LabelOnlyEncoderHasNone) {
  // v = (y, noise bit), z = y
  const auto sys = build(4, {2, [](std::size_t u) { return u >> 1; }}, {{4, kId}}, {{2, [](std::size_t v) { return v >> 1; }}});
  EXPECT_NEAR(superfluous_info(sys, 0), 0.0, 1e-15);
  EXPECT_NEAR(predictive_info(sys, 0), kLn2, 1e-15);
}

TEST(Superfluous, CopyingANuisanceBitCostsLn2) {
  const auto sys = build(4, {2, [](std::size_t u) { return u >> 1; }}, {{4, kId}}, {{4, kId}});
  EXPECT_NEAR(superfluous_info(sys, 0), kLn2, 1e-15);
}

TEST(ViewSpecific, RedundantCopiesShareEverything) {
  const auto sys = build(4, {4, kId}, {{4, kId}, {4, kId}, {4, kId}}, {{4, kId}, {4, kId}, {4, kId}});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(view_specific_info(sys, i).nats, 0.0, 1e-15);
    EXPECT_FALSE(view_specific_info(sys, i).degenerate);
    EXPECT_NEAR(consistent_info(sys, i), std::log(4.0), 1e-15);
  }
}

TEST(ViewSpecific, DisjointBitsAreViewSpecific) {
  // y = (b1, b2), z1 = b1, z2 = b2
  const auto sys = build(4, {4, kId}, {{2, [](std::size_t u) { return u >> 1; }}, {2, [](std::size_t u) { return u & 1; }}},
                         {{2, kId}, {2, kId}});
  EXPECT_NEAR(view_specific_info(sys, 0).nats, kLn2, 1e-15);
  EXPECT_NEAR(view_specific_info(sys, 1).nats, kLn2, 1e-15);
  EXPECT_NEAR(consistent_info(sys, 0), 0.0, 1e-15);
}

TEST(ViewSpecific, SingleViewIsFlaggedDegenerate) {
  Rng rng(8);
  const auto sys = random_system(rng, 1);
  const auto vs = view_specific_info(sys, 0);
  EXPECT_TRUE(vs.degenerate);
  EXPECT_NEAR(vs.nats, predictive_info(sys, 0), 1e-15);
  EXPECT_NEAR(consistent_info(sys, 0), predictive_info(sys, 0), 1e-15);
  const InfoReport r = decompose(sys);
  EXPECT_TRUE(r.single_view);
  EXPECT_EQ(r.views[0].view_specific, 0.0);
  EXPECT_EQ(r.views[0].consistent, r.views[0].predictive);
}

TEST(ViewSpecific, IndexOutOfRange) {
  Rng rng(9);
  const auto sys = random_system(rng, 2);
  EXPECT_THROW(view_specific_info(sys, 2), InvalidArgument);
  EXPECT_THROW(superfluous_info(sys, 5), InvalidArgument);
  EXPECT_THROW(consistent_info(sys, 2), InvalidArgument);
}

TEST(Consistent, TwoCopiesOfUniformLabel) {
  for (std::size_t k : {2u, 3u, 5u}) {
    const auto sys = build(k, {k, kId}, {{k, kId}, {k, kId}}, {{k, kId}, {k, kId}});
    EXPECT_NEAR(consistent_info(sys, 0), std::log(static_cast<double>(k)), 1e-14);
  }
}

TEST(Decompose, PerfectEncoders) {
  const auto sys = build(3, {3, kId}, {{3, kId}, {3, kId}}, {{3, kId}, {3, kId}});
  for (const auto& t : decompose(sys).views) {
    EXPECT_NEAR(t.superfluous, 0.0, 1e-15);
    EXPECT_NEAR(t.view_specific, 0.0, 1e-15);
    EXPECT_NEAR(t.consistent, std::log(3.0), 1e-15);
  }
}

TEST(Decompose, PureNoiseRepresentations) {
  // u = (y, n1, n2); v_i = n_i; z_i = v_i, so each z_i is one superfluous bit
  const auto sys = build(8, {2, [](std::size_t u) { return u >> 2; }},
                         {{2, [](std::size_t u) { return (u >> 1) & 1; }}, {2, [](std::size_t u) { return u & 1; }}},
                         {{2, kId}, {2, kId}});
  for (const auto& t : decompose(sys).views) {
    EXPECT_NEAR(t.predictive, 0.0, 1e-15);
    EXPECT_NEAR(t.superfluous, std::log(2.0), 1e-15);
    EXPECT_NEAR(t.view_specific, 0.0, 1e-15);
    EXPECT_NEAR(t.consistent, 0.0, 1e-15);
  }
}

TEST(Decompose, RandomThreeViewMatchesDirectSums) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto sys = random_system(rng, 3);
    const auto& p = sys.pmf();
    const InfoReport r = decompose(sys);
    EXPECT_EQ(r, decompose(sys));
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string zi = sys.representations()[i], vi = sys.observations()[i];
      const auto& term = r.views[i];
      EXPECT_NEAR(term.predictive, expected_posterior_kl(p, {"y"}, {zi}, {}), 1e-12);
      EXPECT_NEAR(term.superfluous, expected_posterior_kl(p, {vi}, {zi, "y"}, {"y"}), 1e-12);
      EXPECT_NEAR(term.view_specific, expected_posterior_kl(p, {"y"}, sys.representations(), sys.other_representations(i)),
                  1e-12);
      EXPECT_NEAR(term.predictive, term.view_specific + term.consistent, 1e-12);
      EXPECT_GE(term.view_specific, 0.0);
      EXPECT_GE(term.superfluous, 0.0);
    }
  }
}

TEST(Decompose, PredictivePlusSuperfluousOnMarkovSystems) {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto sys = random_system(rng, 2);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(mutual_info(sys.pmf(), {sys.observations()[i]}, {sys.representations()[i]}),
                  predictive_info(sys, i) + superfluous_info(sys, i), 1e-10);
    }
  }
}

TEST(Decompose, SerializesFlatKeys) {
  const auto sys = build(2, {2, kId}, {{2, kId}, {2, kId}}, {{2, kId}, {2, kId}});
  const InfoReport r = decompose(sys);
  const auto j = to_json(r);
  EXPECT_EQ(j.size(), 8u);
  EXPECT_NEAR(j["view_2.consistent"].get<double>(), kLn2, 1e-15);
  EXPECT_EQ(j.begin().key(), "view_1.predictive");
  EXPECT_EQ(csv_header(r).substr(0, 37), "view_1.predictive,view_1.superfluous,");
  const std::string row = csv_row(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);
}

TEST(Corollary2, SingleViewHolds) {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto check = verify_corollary2(random_system(rng, 1));
    EXPECT_TRUE(check.holds);
    EXPECT_LT(check.max_residual(), 1e-10);
    EXPECT_EQ(check.residuals[0].first, "consistent-equals-predictive");
  }
}

TEST(Corollary2, DeterministicTwoViewHolds) {
  const auto sys = build(8, {2, [](std::size_t u) { return u >> 2; }},
                         {{4, [](std::size_t u) { return u >> 1; }}, {4, [](std::size_t u) { return (u >> 2) * 2 + (u & 1); }}},
                         {{2, [](std::size_t v) { return v >> 1; }}, {4, kId}});
  EXPECT_TRUE(verify_corollary2(sys).holds);
}

TEST(Corollary2, RandomTwoViewHolds) {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto check = verify_corollary2(random_system(rng, 2));
    EXPECT_TRUE(check.holds);
    EXPECT_EQ(check.residuals.size(), 6u);
    EXPECT_LT(check.max_residual(), 1e-10);
  }
}

TEST(Corollary2, RejectsThreeViews) {
  Rng rng(15);
  EXPECT_THROW(verify_corollary2(random_system(rng, 3)), InvalidArgument);
}

TEST(SharedLimit, PosteriorKlAndViewSpecificFallTogether) {
  double prev_kl = INFINITY, prev_vs = INFINITY;
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const ViewSystem sys = shared_limit_family(alpha);
    for (std::size_t i = 0; i < 2; ++i) {
      const double kl = expected_posterior_kl(sys.pmf(), {"y"}, sys.representations(), sys.other_representations(i));
      const double vs = view_specific_info(sys, i).nats;
      EXPECT_NEAR(kl, vs, 1e-12);
      if (i == 0) {
        EXPECT_LT(kl, prev_kl);
        EXPECT_LT(vs, prev_vs);
        prev_kl = kl;
        prev_vs = vs;
      }
    }
  }
  EXPECT_LT(prev_kl, 1e-8);
  EXPECT_LT(prev_vs, 1e-8);
  // alpha = 0 copies the private bit: ln 2 of view-specific information
  EXPECT_NEAR(view_specific_info(shared_limit_family(0.0), 0).nats, kLn2, 1e-14);
  EXPECT_THROW(shared_limit_family(1.5), InvalidArgument);
}

TEST(SharedInformation, GlobalBitIsConsistentEverywhere) {
  // y = (g, a); views 1 and 2 see (g, a), view 3 sees g only.
  auto system = [](bool with_g, bool with_a) {
    auto g = [=](std::size_t u) { return with_g ? u >> 1 : 0; };
    auto a = [=](std::size_t u) { return with_a ? u & 1 : 0; };
    auto both = [=](std::size_t u) { return g(u) * 2 + a(u); };
    return build(4, {4, both}, {{4, both}, {4, both}, {2, g}}, {{4, kId}, {4, kId}, {2, kId}});
  };
  const InfoReport full = decompose(system(true, true));
  const InfoReport no_g = decompose(system(false, true));
  const InfoReport no_a = decompose(system(true, false));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(full.views[i].consistent - no_g.views[i].consistent, kLn2, 1e-14) << "view " << i + 1;
    const double pairwise = full.views[i].consistent - no_a.views[i].consistent;
    EXPECT_NEAR(pairwise, i < 2 ? kLn2 : 0.0, 1e-14) << "view " << i + 1;
  }
}
