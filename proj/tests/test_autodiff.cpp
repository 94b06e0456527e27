#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "mvib/autodiff.hpp"

using namespace mvib;
using mvib::testing::check_entries;

namespace {

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t = Tensor::matrix(r, c);
  for (auto& x : t.data()) x = scale * rng.normal();
  return t;
}

Tensor random_rows(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (t(i, j) = 0.05 + rng.uniform());
    for (std::size_t j = 0; j < c; ++j) t(i, j) /= s;
  }
  return t;
}

// Contracts a matrix node with fixed random weights so every entry matters.
Var contract(Tape& t, const Var& x, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, t.constant(random_matrix(rng, x.rows(), x.cols()))));
}

}  // namespace

TEST(Tape, ValuesOfBasicOps) {
  Tape t;
  const Var a = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const Var b = t.leaf(Tensor::matrix(2, 2, {5, 6, 7, 8}));
  EXPECT_EQ(matmul(a, b).value(), Tensor::matrix(2, 2, {19, 22, 43, 50}));
  EXPECT_EQ(add(a, b).value(), Tensor::matrix(2, 2, {6, 8, 10, 12}));
  EXPECT_EQ(sub(a, b).value(), Tensor::matrix(2, 2, {-4, -4, -4, -4}));
  EXPECT_EQ(mul(a, b).value(), Tensor::matrix(2, 2, {5, 12, 21, 32}));
  EXPECT_EQ(scale(a, 0.5).value(), Tensor::matrix(2, 2, {0.5, 1, 1.5, 2}));
  EXPECT_EQ(sum(a).value(), Tensor::scalar(10));
  EXPECT_EQ(concat({a, b}).value(), Tensor::matrix(2, 4, {1, 2, 5, 6, 3, 4, 7, 8}));
  EXPECT_EQ(slice_cols(concat({a, b}), 1, 3).value(), Tensor::matrix(2, 2, {2, 5, 4, 7}));
  EXPECT_EQ(add_bias(a, t.leaf(Tensor::matrix(1, 2, {10, 20}))).value(), Tensor::matrix(2, 2, {11, 22, 13, 24}));
  EXPECT_EQ(relu(sub(a, t.constant(Tensor::matrix(2, 2, 2.5)))).value(), Tensor::matrix(2, 2, {0, 0, 0.5, 1.5}));
}

TEST(Tape, ShapeErrors) {
  Tape t;
  const Var a = t.leaf(Tensor::matrix(2, 3));
  const Var b = t.leaf(Tensor::matrix(2, 2));
  EXPECT_THROW(matmul(a, b), InvalidArgument);
  EXPECT_THROW(add(a, b), InvalidArgument);
  EXPECT_THROW(add_bias(a, b), InvalidArgument);
  EXPECT_THROW(slice_cols(a, 2, 2), InvalidArgument);
  EXPECT_THROW(softmax(a, 2), InvalidArgument);
  EXPECT_THROW(t.leaf(Tensor({2, 2, 2})), InvalidArgument);
  EXPECT_THROW(t.backward(a), InvalidArgument);
  Tape other;
  EXPECT_THROW(add(a, other.leaf(Tensor::matrix(2, 3))), InvalidArgument);
}

TEST(Tape, BackwardTwiceNeedsReset) {
  Tape t;
  const Var a = t.leaf(Tensor::matrix(1, 2, {1, 2}));
  const Var loss = sum(mul(a, a));
  t.backward(loss);
  EXPECT_EQ(a.grad(), Tensor::matrix(1, 2, {2, 4}));
  EXPECT_THROW(t.backward(loss), InvalidArgument);
  t.reset_gradients();
  t.backward(loss);
  EXPECT_EQ(a.grad(), Tensor::matrix(1, 2, {2, 4}));
}

TEST(Tape, StopGradientAndConstantsBlockFlow) {
  Tape t;
  const Var a = t.leaf(Tensor::matrix(1, 2, {1, 2}));
  const Var c = t.constant(Tensor::matrix(1, 2, {3, 4}));
  t.backward(sum(add(mul(stop_gradient(a), a), c)));
  EXPECT_EQ(a.grad(), Tensor::matrix(1, 2, {1, 2}));
  EXPECT_EQ(c.grad(), Tensor::matrix(1, 2, 0.0));
  EXPECT_FALSE(c.requires_grad());
}

TEST(Tape, ReusedNodeAccumulates) {
  Tape t;
  const Var a = t.leaf(Tensor::matrix(1, 1, {3}));
  t.backward(sum(add(a, add(a, a))));
  EXPECT_EQ(a.grad()[0], 3.0);
}

TEST(Softmax, RowsAndColumnsSumToOne) {
  Rng rng(2);
  Tape t;
  const Var x = t.leaf(random_matrix(rng, 4, 5, 30.0));
  const Tensor rows = softmax(x, 1).value();
  const Tensor cols = softmax(x, 0).value();
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (double p : rows.row(r)) s += p;
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r) s += cols(r, c);
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
  const Var huge = t.leaf(Tensor::matrix(1, 2, {1000.0, 0.0}));
  EXPECT_NEAR(softmax(huge).value()[0], 1.0, 1e-15);
  EXPECT_THROW(softmax(t.leaf(Tensor::matrix(1, 2, {INFINITY, 0.0}))), DivergenceError);
}

TEST(KlDivergence, ValuesAndValidation) {
  Tape t;
  const Var p = t.leaf(Tensor::matrix(1, 2, {0.5, 0.5}));
  const Var q = t.leaf(Tensor::matrix(1, 2, {0.25, 0.75}));
  // 0.5 ln 2 + 0.5 ln(2/3)
  EXPECT_NEAR(kl_divergence(p, q).value()[0], 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
  EXPECT_EQ(kl_divergence(p, p).value()[0], 0.0);
  const Var bad = t.leaf(Tensor::matrix(1, 2, {0.5, 0.6}));
  EXPECT_THROW(kl_divergence(p, bad), InvalidArgument);
  // Zero teacher mass contributes nothing; zero student mass is floored.
  const Var hard = t.leaf(Tensor::matrix(1, 2, {1.0, 0.0}));
  EXPECT_NEAR(kl_divergence(hard, q).value()[0], std::log(4.0), 1e-15);
  EXPECT_NEAR(kl_divergence(q, hard).value()[0], 0.75 * (std::log(0.75) - std::log(1e-12)) + 0.25 * std::log(0.25), 1e-9);
}

TEST(CrossEntropy, ValuesAndValidation) {
  Tape t;
  const Var p = t.leaf(Tensor::matrix(2, 2, {0.25, 0.75, 0.5, 0.5}));
  const std::vector<int> labels{1, 0};
  EXPECT_NEAR(cross_entropy(p, labels).value()[0], -0.5 * (std::log(0.75) + std::log(0.5)), 1e-15);
  const std::vector<int> bad{2, 0};
  EXPECT_THROW(cross_entropy(p, bad), InvalidArgument);
  const std::vector<int> short_labels{1};
  EXPECT_THROW(cross_entropy(p, short_labels), InvalidArgument);
}

TEST(Reparameterize, DrawsFromStoredNoise) {
  Tape t;
  const Var mean = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const Var log_var = t.leaf(Tensor::matrix(2, 2, {0, std::log(4.0), 0, 0}));
  Rng a(5), b(5);
  const Tensor z = gaussian_reparameterize(mean, log_var, a).value();
  const double xi0 = b.normal(), xi1 = b.normal();
  EXPECT_DOUBLE_EQ(z[0], 1 + xi0);
  EXPECT_DOUBLE_EQ(z[1], 2 + 2 * xi1);
}

// Finite-difference checks, one per op.

TEST(Gradients, Matmul) {
  Rng rng(10);
  const double err = check_entries([](Tape& t, const std::vector<Var>& x) { return contract(t, matmul(x[0], x[1]), 1); },
                                   {random_matrix(rng, 3, 4), random_matrix(rng, 4, 2)});
  EXPECT_LT(err, 1e-7);
}

TEST(Gradients, ElementwiseAndStructural) {
  Rng rng(11);
  const auto f = [](Tape& t, const std::vector<Var>& x) {
    const Var s = add(sub(x[0], scale(x[1], 0.3)), mul(x[0], x[1]));
    const Var b = add_bias(s, x[2]);
    const Var c = concat({b, relu(x[1])});
    return contract(t, slice_cols(c, 1, 5), 2);
  };
  EXPECT_LT(check_entries(f, {random_matrix(rng, 3, 3), random_matrix(rng, 3, 3), random_matrix(rng, 1, 3)}), 1e-7);
}

TEST(Gradients, SoftmaxBothAxes) {
  Rng rng(12);
  for (int axis : {0, 1}) {
    const auto f = [axis](Tape& t, const std::vector<Var>& x) { return contract(t, softmax(x[0], axis), 3); };
    EXPECT_LT(check_entries(f, {random_matrix(rng, 3, 4, 2.0)}), 1e-7) << "axis " << axis;
  }
}

TEST(Gradients, KlBothArguments) {
  Rng rng(13);
  const auto f = [](Tape&, const std::vector<Var>& x) { return kl_divergence(softmax(x[0]), softmax(x[1])); };
  EXPECT_LT(check_entries(f, {random_matrix(rng, 4, 3), random_matrix(rng, 4, 3)}), 1e-7);
  const auto g = [](Tape&, const std::vector<Var>& x) { return kl_divergence(stop_gradient(softmax(x[0])), softmax(x[1])); };
  Tape t;
  const Var a = t.leaf(random_rows(rng, 2, 3)), b = t.leaf(random_rows(rng, 2, 3));
  t.backward(kl_divergence(stop_gradient(a), b));
  EXPECT_EQ(a.grad(), Tensor::matrix(2, 3, 0.0));
  EXPECT_LT(check_entries(g, {random_matrix(rng, 4, 3), random_matrix(rng, 4, 3)}), 1e-7);
}

TEST(Gradients, CrossEntropy) {
  Rng rng(14);
  const std::vector<int> labels{0, 2, 1, 2};
  const auto f = [&](Tape&, const std::vector<Var>& x) { return cross_entropy(softmax(x[0]), labels); };
  EXPECT_LT(check_entries(f, {random_matrix(rng, 4, 3)}), 1e-7);
}

TEST(Gradients, Reparameterize) {
  Rng rng(15);
  const auto f = [](Tape& t, const std::vector<Var>& x) {
    Rng noise(99);
    return contract(t, gaussian_reparameterize(x[0], x[1], noise), 4);
  };
  EXPECT_LT(check_entries(f, {random_matrix(rng, 3, 2), random_matrix(rng, 3, 2, 0.5)}), 1e-7);
}

TEST(StopGradientTrace, ReplaysRecordedValues) {
  StopGradientTrace trace;
  {
    ScopedStopGradientTrace scope(trace);
    Tape t;
    stop_gradient(t.leaf(Tensor::matrix(1, 2, {1, 2})));
  }
  ASSERT_EQ(trace.values.size(), 1u);
  trace.replay = true;
  {
    ScopedStopGradientTrace scope(trace);
    Tape t;
    EXPECT_EQ(stop_gradient(t.leaf(Tensor::matrix(1, 2, {5, 6}))).value(), Tensor::matrix(1, 2, {1, 2}));
    EXPECT_THROW(stop_gradient(t.leaf(Tensor::matrix(1, 2))), InvalidArgument);
  }
  Tape t;
  EXPECT_EQ(stop_gradient(t.leaf(Tensor::matrix(1, 1, {9}))).value()[0], 9.0);
}
