#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "mvib/losses.hpp"

using namespace mvib;

namespace {

Tensor random_rows(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (t(i, j) = 0.01 + rng.uniform());
    for (std::size_t j = 0; j < c; ++j) t(i, j) /= s;
  }
  return t;
}

PredictionBundle random_bundle(Tape& t, Rng& rng, std::size_t n, std::size_t rows = 5, std::size_t classes = 4) {
  PredictionBundle b;
  for (std::size_t i = 0; i < n; ++i) b.observation.push_back(t.leaf(random_rows(rng, rows, classes)));
  for (std::size_t i = 0; i < n; ++i) b.representation.push_back(t.leaf(random_rows(rng, rows, classes)));
  if (n == 1) {
    b.joint = b.representation[0];
  } else {
    b.joint = t.leaf(random_rows(rng, rows, classes));
    for (std::size_t i = 0; i < n; ++i) b.leave_one_out.push_back(t.leaf(random_rows(rng, rows, classes)));
  }
  return b;
}

double kl(const Tensor& p, const Tensor& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s / static_cast<double>(p.rows());
}

}  // namespace

TEST(LossMode, ParsesAndPrints) {
  for (LossMode m : {LossMode::kCeOnly, LossMode::kCeVsd, LossMode::kCeVcdVmd, LossMode::kCeMv2d}) {
    EXPECT_EQ(parse_loss_mode(to_string(m)), m);
  }
  EXPECT_EQ(to_string(LossMode::kCeMv2d), "ce+mv2d");
  EXPECT_THROW(parse_loss_mode("mv2d"), InvalidArgument);
}

TEST(Bundle, Validation) {
  Tape t;
  Rng rng(1);
  PredictionBundle b = random_bundle(t, rng, 2);
  EXPECT_NO_THROW(b.validate());
  b.leave_one_out.pop_back();
  EXPECT_THROW(b.validate(), InvalidArgument);
  PredictionBundle c = random_bundle(t, rng, 2);
  c.joint = t.leaf(random_rows(rng, 4, 4));
  EXPECT_THROW(c.validate(), InvalidArgument);
  PredictionBundle d = random_bundle(t, rng, 2);
  d.observation[1] = t.leaf(Tensor::matrix(5, 4, 0.3));
  EXPECT_THROW(d.validate(), InvalidArgument);
  EXPECT_THROW(LossWeights({1, -1, 2}).validate(), InvalidArgument);
}

TEST(Losses, MatchDirectKlSums) {
  Tape t;
  Rng rng(2);
  const PredictionBundle b = random_bundle(t, rng, 2);
  const auto& v = b.observation;
  const auto& z = b.representation;
  EXPECT_NEAR(vsd_loss(b, 1).value()[0], kl(v[1].value(), z[1].value()), 1e-14);
  EXPECT_NEAR(vmd_loss(b).value()[0], kl(z[0].value(), z[1].value()) + kl(z[1].value(), z[0].value()), 1e-14);
  EXPECT_NEAR(vcd_loss(b).value()[0], kl(v[1].value(), z[0].value()) + kl(v[0].value(), z[1].value()), 1e-14);
  const double mv2d = kl(v[0].value(), z[0].value()) + kl(v[1].value(), z[1].value()) +
                      kl(b.joint.value(), b.leave_one_out[0].value()) + kl(b.joint.value(), b.leave_one_out[1].value());
  EXPECT_NEAR(mv2d_loss(b).value()[0], mv2d, 1e-14);
}

TEST(Losses, FrozenSingleRow) {
  Tape t;
  PredictionBundle b;
  b.observation.push_back(t.leaf(Tensor::matrix(1, 2, {0.5, 0.5})));
  b.representation.push_back(t.leaf(Tensor::matrix(1, 2, {0.25, 0.75})));
  b.joint = b.representation[0];
  // 0.5 ln 2 + 0.5 ln(2/3)
  EXPECT_NEAR(vsd_loss(b, 0).value()[0], 0.14384103622589042, 1e-15);
}

TEST(Losses, ZeroWhenPredictionsAgree) {
  Tape t;
  Rng rng(3);
  PredictionBundle b = random_bundle(t, rng, 2);
  b.representation[1] = b.representation[0];
  EXPECT_EQ(vmd_loss(b).value()[0], 0.0);
  b.observation[1] = b.representation[0];
  b.observation[0] = b.representation[1];
  EXPECT_EQ(vcd_loss(b).value()[0], 0.0);
}

TEST(Losses, TwoViewOnlyLossesRejectOtherCounts) {
  Tape t;
  Rng rng(4);
  const PredictionBundle b = random_bundle(t, rng, 3);
  EXPECT_THROW(vmd_loss(b), InvalidArgument);
  EXPECT_THROW(vcd_loss(b), InvalidArgument);
  EXPECT_THROW(vsd_loss(b, 3), InvalidArgument);
}

TEST(Losses, Mv2dDegeneratesToVsdForOneView) {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    Tape t;
    const PredictionBundle b = random_bundle(t, rng, 1, 1 + rng.index(6), 2 + rng.index(4));
    EXPECT_NEAR(mv2d_loss(b).value()[0], vsd_loss(b, 0).value()[0], 1e-12);
    EXPECT_EQ(consistency_term(b).value()[0], 0.0);
  }
}

TEST(Losses, TeachersReceiveNoGradient) {
  Tape t;
  Rng rng(6);
  const PredictionBundle b = random_bundle(t, rng, 2);
  t.backward(mv2d_loss(b));
  for (const auto& v : b.observation) EXPECT_EQ(v.grad(), Tensor(v.value().shape(), 0.0));
  EXPECT_EQ(b.joint.grad(), Tensor(b.joint.value().shape(), 0.0));
  for (const auto& z : b.representation) EXPECT_NE(z.grad(), Tensor(z.value().shape(), 0.0));
  for (const auto& l : b.leave_one_out) EXPECT_NE(l.grad(), Tensor(l.value().shape(), 0.0));
}

TEST(Losses, VmdTrainsBothSides) {
  Tape t;
  Rng rng(7);
  const PredictionBundle b = random_bundle(t, rng, 2);
  t.backward(vmd_loss(b));
  EXPECT_NE(b.representation[0].grad(), Tensor(b.representation[0].value().shape(), 0.0));
  EXPECT_NE(b.representation[1].grad(), Tensor(b.representation[1].value().shape(), 0.0));
}

TEST(Objective, IsTheWeightedSum) {
  Tape t;
  Rng rng(8);
  const PredictionBundle b = random_bundle(t, rng, 3);
  const std::vector<int> labels{0, 1, 2, 3, 0};
  const LossWeights w{0.7, 0.4, 1.9};
  const double ce = task_cross_entropy(b, labels).value()[0];
  const double aux = auxiliary_cross_entropy(b, labels).value()[0];
  EXPECT_NEAR(total_objective(b, labels, w, LossMode::kCeMv2d).value()[0],
              0.7 * ce + 0.4 * aux + 1.9 * mv2d_loss(b).value()[0], 1e-13);
  EXPECT_NEAR(total_objective(b, labels, w, LossMode::kCeVsd).value()[0],
              0.7 * ce + 0.4 * aux + 1.9 * sufficiency_term(b).value()[0], 1e-13);
  EXPECT_NEAR(total_objective(b, labels, w, LossMode::kCeOnly).value()[0], 0.7 * ce + 0.4 * aux, 1e-13);
  EXPECT_EQ(total_objective(b, labels, {0, 0, 0}).value()[0], 0.0);
}

TEST(Objective, CeOnlyHasNoDistillationGradient) {
  const auto f = mvib::testing::grad_fixture(3, 21);
  Rng a(1), b(1);
  ForwardPass p1 = forward(f.model, f.batch.views, &a);
  ForwardPass p2 = forward(f.model, f.batch.views, &b);
  p1.tape->backward(total_objective(p1.bundle, f.batch.labels, {}, LossMode::kCeOnly));
  p2.tape->backward(add(scale(task_cross_entropy(p2.bundle, f.batch.labels), 1.0),
                        scale(auxiliary_cross_entropy(p2.bundle, f.batch.labels), 1.0)));
  for (std::size_t k = 0; k < p1.params.size(); ++k) EXPECT_EQ(p1.params[k].grad(), p2.params[k].grad()) << f.model.names[k];
}

TEST(Objective, GradientsMatchFiniteDifferences) {
  using mvib::testing::check_model_loss;
  const auto two = mvib::testing::grad_fixture(2, 31);
  const auto three = mvib::testing::grad_fixture(3, 32);
  const auto one = mvib::testing::grad_fixture(1, 33);
  auto labels_loss = [](LossMode m) {
    return [m](const PredictionBundle& b, std::span<const int> y) { return total_objective(b, y, {}, m); };
  };
  EXPECT_LT(check_model_loss(two.model, two.batch, [](const auto& b, auto) { return vsd_loss(b, 1); }, 20, 1)
                .max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(two.model, two.batch, [](const auto& b, auto) { return vcd_loss(b); }, 20, 2)
                .max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(two.model, two.batch, [](const auto& b, auto) { return vmd_loss(b); }, 20, 3)
                .max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(three.model, three.batch, [](const auto& b, auto) { return mv2d_loss(b); }, 20, 4)
                .max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(one.model, one.batch, labels_loss(LossMode::kCeMv2d), 20, 5).max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(three.model, three.batch, labels_loss(LossMode::kCeMv2d), 20, 6).max_relative_error, 1e-5);
  EXPECT_LT(check_model_loss(two.model, two.batch, labels_loss(LossMode::kCeVcdVmd), 20, 7).max_relative_error, 1e-5);
}
