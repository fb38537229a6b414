#include "markovgen/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "markovgen/checkpoint.hpp"
#include "markovgen/rng.hpp"
#include "util.hpp"

using namespace markovgen;

TEST(MlpInit, DeterministicScaledWeightsZeroBiases) {
  const std::vector<int> dims = {16, 64, 64, 1};
  const Mlp a = mlp_init(dims, 7);
  const Mlp b = mlp_init(dims, 7);
  const Mlp c = mlp_init(dims, 8);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_NE(a.weights, c.weights);
  for (const auto& bias : a.biases) {
    for (double v : bias) EXPECT_EQ(v, 0.0);
  }
  // layer 1 fan_in 64: empirical std near sqrt(2/64)
  const std::vector<double>& w = a.weights[1];
  double s2 = 0.0;
  for (double v : w) s2 += v * v;
  const double stddev = std::sqrt(s2 / static_cast<double>(w.size()));
  EXPECT_NEAR(stddev, std::sqrt(2.0 / 64.0), 0.1 * std::sqrt(2.0 / 64.0));
  EXPECT_EQ(a.adam.step, 0);
  EXPECT_THROW(mlp_init({4}, 1), std::invalid_argument);
  EXPECT_THROW(mlp_init({4, 0, 1}, 1), std::invalid_argument);
}

TEST(MlpForward, HandComputedTinyNet) {
  Mlp m;
  m.layer_dims = {2, 2, 1};
  m.weights = {{1.0, -1.0, 0.5, 2.0}, {2.0, -1.0}};
  m.biases = {{0.1, -0.2}, {0.3}};
  // pre-activations: [1-2+0.1, 0.5+4-0.2] = [-0.9, 4.3] -> ReLU [0, 4.3]
  // output: 2*0 - 1*4.3 + 0.3 = -4.0
  ForwardCache cache;
  const std::vector<double> out = mlp_forward(m, {1.0, 2.0}, &cache);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], -4.0);
  ASSERT_EQ(cache.acts.size(), 3u);
  EXPECT_DOUBLE_EQ(cache.acts[1][0], 0.0);
  EXPECT_DOUBLE_EQ(cache.acts[1][1], 4.3);
  EXPECT_THROW(mlp_forward(m, {1.0, 2.0, 3.0}), std::invalid_argument);
}

// Oracle: central finite differences of the squared loss on every
// parameter, h = 1e-5, relative tolerance 1e-4.
TEST(MlpBackward, GradcheckAllParameters) {
  const std::vector<int> dims = {4, 8, 3};
  Mlp m = mlp_init(dims, 42);
  Rng rng(43);
  std::vector<double> in(4), target(3);
  for (double& v : in) v = rng.normal();
  for (double& v : target) v = rng.normal();

  const auto loss = [&](const Mlp& model) {
    const std::vector<double> out = mlp_forward(model, in);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
      s += (out[i] - target[i]) * (out[i] - target[i]);
    }
    return s;
  };

  ForwardCache cache;
  const std::vector<double> out = mlp_forward(m, in, &cache);
  std::vector<double> dout(3);
  for (size_t i = 0; i < 3; ++i) dout[i] = 2.0 * (out[i] - target[i]);
  Grads g = make_grads(m);
  mlp_backward(m, cache, dout, g);

  const double h = 1e-5;
  double worst = 0.0;
  for (size_t l = 0; l < m.n_layers(); ++l) {
    for (size_t i = 0; i < m.weights[l].size(); ++i) {
      Mlp pert = m;
      pert.weights[l][i] += h;
      const double up = loss(pert);
      pert.weights[l][i] -= 2.0 * h;
      const double fd = (up - loss(pert)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g.w[l][i]) / (1.0 + std::abs(fd)));
    }
    for (size_t i = 0; i < m.biases[l].size(); ++i) {
      Mlp pert = m;
      pert.biases[l][i] += h;
      const double up = loss(pert);
      pert.biases[l][i] -= 2.0 * h;
      const double fd = (up - loss(pert)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g.b[l][i]) / (1.0 + std::abs(fd)));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(MlpBackward, AccumulatesAcrossCalls) {
  Mlp m = mlp_init({3, 5, 1}, 3);
  Rng rng(4);
  std::vector<double> in(3);
  for (double& v : in) v = rng.normal();
  ForwardCache cache;
  mlp_forward(m, in, &cache);
  Grads once = make_grads(m);
  mlp_backward(m, cache, {1.0}, once);
  Grads twice = make_grads(m);
  mlp_backward(m, cache, {1.0}, twice);
  mlp_backward(m, cache, {1.0}, twice);
  for (size_t l = 0; l < m.n_layers(); ++l) {
    for (size_t i = 0; i < once.w[l].size(); ++i) {
      EXPECT_DOUBLE_EQ(twice.w[l][i], 2.0 * once.w[l][i]);
    }
  }
}

TEST(AdamStep, MatchesHandComputedUpdate) {
  Mlp m;
  m.layer_dims = {1, 1};
  m.weights = {{0.5}};
  m.biases = {{0.2}};
  m.adam.m_w = {{0.0}};
  m.adam.v_w = {{0.0}};
  m.adam.m_b = {{0.0}};
  m.adam.v_b = {{0.0}};

  Grads g;
  g.w = {{0.3}};
  g.b = {{-0.1}};
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;

  // step 1, written out explicitly
  double mw = 0.1 * 0.3, vw = 0.001 * 0.09;
  double w = 0.5 - lr * (mw / (1.0 - 0.9)) / (std::sqrt(vw / (1.0 - 0.999)) + eps);
  adam_step(m, g, lr, b1, b2, eps);
  EXPECT_NEAR(m.weights[0][0], w, 1e-15);
  EXPECT_EQ(m.adam.step, 1);

  // step 2 with a different gradient exercises the running moments
  g.w = {{-0.2}};
  g.b = {{0.4}};
  mw = 0.9 * mw + 0.1 * -0.2;
  vw = 0.999 * vw + 0.001 * 0.04;
  w = w - lr * (mw / (1.0 - 0.81)) / (std::sqrt(vw / (1.0 - 0.999 * 0.999)) + eps);
  adam_step(m, g, lr, b1, b2, eps);
  EXPECT_NEAR(m.weights[0][0], w, 1e-15);
  EXPECT_EQ(m.adam.step, 2);
}

TEST(AdamStep, RejectsNonFiniteGradientWithoutMutation) {
  Mlp m = mlp_init({2, 3, 1}, 9);
  const Mlp before = m;
  Grads g = make_grads(m);
  g.w[0][1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam_step(m, g, 0.1), std::invalid_argument);
  EXPECT_EQ(m.weights, before.weights);
  EXPECT_EQ(m.adam.step, before.adam.step);
  EXPECT_EQ(m.adam.m_w, before.adam.m_w);
}

TEST(Activations, OverflowSafe) {
  EXPECT_DOUBLE_EQ(softplus(800.0), 800.0);
  EXPECT_DOUBLE_EQ(softplus(-800.0), 0.0);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
  EXPECT_DOUBLE_EQ(sigmoid(-800.0), 0.0);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  // d softplus = sigmoid, checked by finite differences
  for (double x : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
    EXPECT_NEAR(testutil::fd_central([](double v) { return softplus(v); }, x, 1e-6),
                sigmoid(x), 1e-9);
  }
}

TEST(ConditionVector, FlattenLayoutAndNormalization) {
  EXPECT_EQ(condition_dim(1), 7);
  EXPECT_EQ(condition_dim(10), 25);
  const ConditionVector c{2.0, 0.25, 0.5, {{9.0, 0.0}, {7.0, 0.1}}, 2.0};
  std::vector<double> flat;
  flatten_condition(c, flat);
  const std::vector<double> expect = {2.0, 0.125, 0.25, 9.0, 0.0, 7.0, 0.05};
  ASSERT_EQ(flat.size(), expect.size());
  for (size_t i = 0; i < flat.size(); ++i) EXPECT_DOUBLE_EQ(flat[i], expect[i]);
}

TEST(HeadEvaluations, DriftRawJumpSoftplusFloored) {
  // identity-ish net: 3 outputs wired directly to 3 inputs
  Mlp m;
  m.layer_dims = {3, 3};
  m.weights = {{1, 0, 0, 0, 1, 0, 0, 0, 1}};
  m.biases = {{0, 0, 0}};
  m.head = HeadType::jump;
  const ConditionVector c{-50.0, 0.0, 0.0, {}, 1.0};
  // flatten of empty memory gives (x, t/T, t_next/T) = (-50, 0, 0)
  const GaussianJumpKernel k = jump_eval(m, c);
  EXPECT_NEAR(k.lam, kSoftplusFloor, 1e-12);  // softplus(-50) ~ 2e-22
  EXPECT_DOUBLE_EQ(k.mu, 0.0);
  EXPECT_DOUBLE_EQ(k.sigma, softplus(0.0) + kSoftplusFloor);
  EXPECT_THROW(drift_eval(m, c), std::invalid_argument);

  Mlp d;
  d.layer_dims = {3, 1};
  d.weights = {{1, 0, 0}};
  d.biases = {{0.5}};
  EXPECT_DOUBLE_EQ(drift_eval(d, c), -49.5);
  EXPECT_THROW(jump_eval(d, c), std::invalid_argument);
}

TEST(Checkpoint, RoundTripsExactly) {
  const std::string path = "ckpt_roundtrip_test.json";
  Mlp m = mlp_init({7, 6, 3}, 77, HeadType::jump);
  // make the adam state nontrivial
  Grads g = make_grads(m);
  Rng rng(5);
  for (auto& v : g.w) {
    for (double& x : v) x = rng.normal();
  }
  for (auto& v : g.b) {
    for (double& x : v) x = rng.normal();
  }
  adam_step(m, g, 1e-3);

  save_checkpoint(path, m, "cfg123");
  const LoadedCheckpoint lc = load_checkpoint(path);
  EXPECT_EQ(lc.config_hash, "cfg123");
  EXPECT_EQ(lc.model.layer_dims, m.layer_dims);
  EXPECT_EQ(lc.model.head, m.head);
  EXPECT_EQ(lc.model.weights, m.weights);
  EXPECT_EQ(lc.model.biases, m.biases);
  EXPECT_EQ(lc.model.adam.step, m.adam.step);
  EXPECT_EQ(lc.model.adam.m_w, m.adam.m_w);
  EXPECT_EQ(lc.model.adam.v_w, m.adam.v_w);
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsMissingAndCorruptFiles) {
  EXPECT_THROW(load_checkpoint("does_not_exist.json"), IoError);
  const std::string path = "ckpt_corrupt_test.json";
  {
    std::ofstream f(path);
    f << "{\"layer_dims\": [2, 1], \"weights\": [[1.0, 2.0, 3.0]]}";
  }
  EXPECT_THROW(load_checkpoint(path), IoError);
  std::remove(path.c_str());
}

TEST(Checkpoint, MemoryLengthFromInputWidth) {
  EXPECT_EQ(memory_len_from_input(condition_dim(10)), 10);
  EXPECT_EQ(memory_len_from_input(condition_dim(0)), 0);
  EXPECT_THROW(memory_len_from_input(6), std::invalid_argument);
}

TEST(Determinism, ForwardIsBitStable) {
  const std::vector<int> dims = {9, 32, 32, 1};
  const Mlp a = mlp_init(dims, 123);
  const Mlp b = mlp_init(dims, 123);
  Rng ra(9), rb(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ia(9), ib(9);
    for (double& v : ia) v = ra.normal();
    for (double& v : ib) v = rb.normal();
    const std::vector<double> oa = mlp_forward(a, ia);
    const std::vector<double> ob = mlp_forward(b, ib);
    ASSERT_EQ(oa.size(), ob.size());
    for (size_t i = 0; i < oa.size(); ++i) ASSERT_EQ(oa[i], ob[i]);
  }
}
