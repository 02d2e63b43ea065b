#include <gtest/gtest.h>

#include <random>

#include "pgnn/mlp.hpp"
#include "support/oracles.hpp"

using namespace pgnn;
using pgnn::testing::random_matrix;

namespace {

Mlp single_layer(const Matrix& w, std::vector<double> b, Activation act) {
  Mlp m;
  m.layers.push_back({w.cols(), w.rows(), act});
  m.weights.push_back(w);
  m.biases.push_back(std::move(b));
  return m;
}

}  // namespace

TEST(Forward, ZeroWeightsGiveZeroOutputs) {
  Mlp m = make_mlp({10, 30, 30, 30, 7}, 3);
  for (auto& w : m.weights) w.fill(0.0);
  std::mt19937_64 rng(1);
  const Matrix y = predict(m, random_matrix(5, 10, rng));
  ASSERT_EQ(y.rows(), 5u);
  ASSERT_EQ(y.cols(), 7u);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityLayerPassesInputThrough) {
  const Matrix x = Matrix::from_rows({{1.5, -2.0, 0.25}});
  const Matrix y = predict(single_layer(Matrix::identity(3), {0, 0, 0}, Activation::Identity), x);
  EXPECT_EQ(y, x);
}

TEST(Forward, ReluClampsNegativePreActivation) {
  const Matrix w = Matrix::from_rows({{1.0}});
  const Matrix y = predict(single_layer(w, {0.0}, Activation::ReLU), Matrix::from_rows({{-2.0}}));
  EXPECT_EQ(y(0, 0), 0.0);
}

TEST(Forward, RejectsWrongInputWidth) {
  Mlp m = make_mlp({10, 30, 7}, 1);
  EXPECT_THROW(forward(m, Matrix(4, 9)), ShapeError);
}

TEST(Forward, OutputShapeFollowsBatch) {
  Mlp m = make_mlp({10, 30, 30, 30, 7}, 2);
  for (std::size_t b : {1u, 2u, 17u}) {
    const auto t = forward(m, Matrix(b, 10, 0.5));
    EXPECT_EQ(t.output().rows(), b);
    EXPECT_EQ(t.output().cols(), 7u);
    ASSERT_EQ(t.pre.size(), 4u);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(t.post[l].cols(), 30u);
  }
}

TEST(Forward, HiddenActivationsAreNonNegative) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp m = make_mlp({4, 6, 5, 3}, rng());
    const auto t = forward(m, random_matrix(8, 4, rng, -5, 5));
    for (std::size_t l = 0; l + 1 < t.post.size(); ++l)
      for (double v : t.post[l].values()) EXPECT_GE(v, 0.0);
  }
}

TEST(Forward, MatchesHandComputedTwoLayerNet) {
  // x = (1, 2); hidden z = (1*1 + 2*(-1) + 0.5, 1*2 + 2*1 - 1) = (-0.5, 3)
  // h = (0, 3); y = 2*0 - 1*3 + 0.25 = -2.75
  Mlp m;
  m.layers = {{2, 2, Activation::ReLU}, {2, 1, Activation::Identity}};
  m.weights = {Matrix::from_rows({{1, -1}, {2, 1}}), Matrix::from_rows({{2, -1}})};
  m.biases = {{0.5, -1.0}, {0.25}};
  const auto y = predict(m, Matrix::from_rows({{1, 2}}));
  EXPECT_DOUBLE_EQ(y(0, 0), -2.75);
}

TEST(MakeMlp, SameSeedSameWeights) {
  EXPECT_EQ(make_mlp({10, 30, 7}, 42), make_mlp({10, 30, 7}, 42));
  EXPECT_NE(make_mlp({10, 30, 7}, 42), make_mlp({10, 30, 7}, 43));
}

TEST(MakeMlp, HeUniformBoundsAndZeroBias) {
  Mlp m = make_mlp({10, 30, 30, 30, 7}, 9);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.layers[l].input_dim));
    for (double w : m.weights[l].values()) EXPECT_LE(std::abs(w), limit);
    for (double b : m.biases[l]) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(m.layers.back().activation, Activation::Identity);
  EXPECT_EQ(m.layers.front().activation, Activation::ReLU);
}

TEST(MakeMlp, ParameterCounts) {
  Mlp m = make_mlp({10, 30, 30, 30, 7}, 1);
  EXPECT_EQ(m.stored_parameter_count(), 10u * 30 + 30 + 30 * 30 + 30 + 30 * 30 + 30 + 30 * 7 + 7);
  EXPECT_EQ(m.hidden_neuron_count(), 90u);
  EXPECT_THROW(make_mlp({10}, 1), ShapeError);
  EXPECT_THROW(make_mlp({10, 0, 7}, 1), ShapeError);
}

TEST(MseLoss, PerfectPredictionIsZero) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(mse_loss(a, a), 0.0);
}

TEST(MseLoss, UnitErrorIsOne) {
  EXPECT_EQ(mse_loss(Matrix::from_rows({{0, 0}}), Matrix::from_rows({{1, 1}})), 1.0);
}

TEST(MseLoss, MatchesDoubleLoop) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix p = random_matrix(4, 3, rng), o = random_matrix(4, 3, rng);
    EXPECT_NEAR(mse_loss(p, o), pgnn::testing::mse_loop(p, o), 1e-15);
  }
}

TEST(MseLoss, ShapeMismatchThrows) {
  EXPECT_THROW(mse_loss(Matrix(2, 3), Matrix(3, 2)), ShapeError);
  EXPECT_THROW(mse_grad(Matrix(2, 3), Matrix(2, 2)), ShapeError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Mlp m = make_mlp({3, 4, 2}, 1);
  std::mt19937_64 rng(2);
  const auto t = forward(m, random_matrix(5, 3, rng));
  const auto g = backward(m, t, Matrix(5, 2));
  for (const auto& w : g.weights)
    for (double v : w.values()) EXPECT_EQ(v, 0.0);
  for (const auto& b : g.biases)
    for (double v : b) EXPECT_EQ(v, 0.0);
}

TEST(Backward, DeadNeuronHasZeroIncomingGradient) {
  Mlp m = make_mlp({3, 4, 2}, 7);
  m.biases[0][2] = -1e6;  // neuron 2 never activates
  std::mt19937_64 rng(3);
  const auto t = forward(m, random_matrix(6, 3, rng));
  const auto g = backward(m, t, random_matrix(6, 2, rng));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(g.weights[0](2, k), 0.0);
  EXPECT_EQ(g.biases[0][2], 0.0);
}

TEST(Backward, MatchesFiniteDifferencesOnMse) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<std::size_t> width(1, 6);
    Mlp m = make_mlp({width(rng), width(rng), width(rng), width(rng)}, rng());
    for (auto& b : m.biases)
      for (double& v : b) v = std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    const Matrix x = random_matrix(5, m.input_dim(), rng);
    const Matrix y = random_matrix(5, m.output_dim(), rng);
    const auto trace = forward(m, x);
    const auto g = backward(m, trace, mse_grad(trace.output(), y));
    auto loss = [&](const Mlp& mm) { return mse_loss(predict(mm, x), y); };
    auto sig = [&](const Mlp& mm) {
      std::vector<int> s;
      for (const auto& z : forward(mm, x).pre)
        for (double v : z.values()) s.push_back(v > 0);
      return s;
    };
    const auto r = pgnn::testing::check_gradients(m, g, loss, sig);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LT(r.worst, 1e-5) << "trial " << trial;
  }
}

TEST(Backward, HiddenOutputGradientMatchesPerturbation) {
  // dL/dH for hidden layer 0 against a direct finite difference on H.
  Mlp m = make_mlp({3, 4, 2}, 5);
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(3, 3, rng), y = random_matrix(3, 2, rng);
  const auto trace = forward(m, x);
  const auto g = backward(m, trace, mse_grad(trace.output(), y));
  Mlp head = single_layer(m.weights[1], m.biases[1], Activation::Identity);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      Matrix up = trace.post[0], down = trace.post[0];
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (mse_loss(predict(head, up), y) - mse_loss(predict(head, down), y)) / (2 * h);
      EXPECT_LT(pgnn::testing::rel_error(fd, g.hidden_outputs[0](i, j)), 1e-6);
    }
}

TEST(Backward, MaskedWeightsGetZeroGradient) {
  Mlp m = make_mlp({3, 4, 2}, 1);
  m.ensure_masks();
  m.masks[0](1, 2) = 0.0;
  m.masks[1](0, 3) = 0.0;
  m.apply_masks();
  std::mt19937_64 rng(4);
  const auto t = forward(m, random_matrix(5, 3, rng));
  const auto g = backward(m, t, random_matrix(5, 2, rng));
  EXPECT_EQ(g.weights[0](1, 2), 0.0);
  EXPECT_EQ(g.weights[1](0, 3), 0.0);
  EXPECT_EQ(m.weights[0](1, 2), 0.0);
}

TEST(MseGrad, IsTwoErrorOverNK) {
  const Matrix p = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Matrix o = Matrix::from_rows({{0, 2, 3}, {4, 5, 9}});
  const Matrix g = mse_grad(p, o);
  EXPECT_DOUBLE_EQ(g(0, 0), 2.0 * 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(g(1, 2), 2.0 * -3.0 / 6.0);
  EXPECT_EQ(g(0, 1), 0.0);
}

TEST(Mlp, ValidateCatchesBrokenChains) {
  Mlp m = make_mlp({3, 4, 2}, 1);
  m.weights[1] = Matrix(2, 5);
  EXPECT_THROW(m.validate(), ShapeError);
}
