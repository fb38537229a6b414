#include "markovgen/sampler.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "markovgen/bridge.hpp"
#include "markovgen/mlp.hpp"
#include "markovgen/rng.hpp"
#include "util.hpp"

using namespace markovgen;

namespace {

const BridgeSegment kSeg{0.0, 1.0, 0.0, 1.0, std::sqrt(0.3), std::sqrt(0.03)};

// runs n_paths of the exact-generator segment process from the stationary
// start N(x0, rho^2) up to t_end and returns the terminal values
std::vector<double> marginal_samples(const BridgeSegment& seg, double t_end,
                                     double alpha, int n_paths, int n_steps,
                                     std::uint64_t seed, StepStats* stats) {
  const SegmentGen gen = make_exact_gen(seg, alpha > 0.0, alpha < 1.0, 1 << 12);
  StepPlan plan;
  plan.n_steps = n_steps;
  plan.alpha = alpha;
  plan.eta = seg.eta;
  Rng rng(seed);
  std::vector<double> out(static_cast<size_t>(n_paths));
  for (double& v : out) {
    const double x_start = rng.normal(seg.x0, seg.rho);
    v = simulate_segment(x_start, seg.t0, t_end, gen, plan, rng, stats);
  }
  return out;
}

void expect_gaussian_marginal(const std::vector<double>& xs, double mean,
                              double var, const std::string& label) {
  const size_t n = xs.size();
  const double sd = std::sqrt(var);
  EXPECT_NEAR(testutil::mean_of(xs), mean, 4.0 * sd / std::sqrt(double(n))) << label;
  EXPECT_NEAR(testutil::var_of(xs), var,
              4.0 * var * std::sqrt(2.0 / (double(n) - 1.0))) << label;
  const double d = testutil::ks_stat(xs, [&](double x) {
    return testutil::normal_cdf((x - mean) / sd);
  });
  EXPECT_LT(d, testutil::ks_crit_1pct(n)) << label;
}

}  // namespace

TEST(StepPlan, Validation) {
  StepPlan p;
  EXPECT_NO_THROW(p.validate());
  p.eta = 0.0;  // deterministic drift-only sampling is allowed
  EXPECT_NO_THROW(p.validate());
  p.eta = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = StepPlan{};
  p.n_steps = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = StepPlan{};
  p.alpha = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.alpha = -0.01;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(GeneratorStep, EulerUpdateClampAndForcedJump) {
  Rng rng(1);
  EXPECT_THROW(generator_step(0.0, 0.0, 0.0, 1.0, 1.0, nullptr, rng),
               std::invalid_argument);
  // no jump channel, eta 0: plain deterministic Euler step
  StepStats s;
  EXPECT_DOUBLE_EQ(generator_step(2.0, 0.0, 0.25, 4.0, 0.0, nullptr, rng, &s), 3.0);
  EXPECT_EQ(s.steps, 1);
  EXPECT_EQ(s.clamped, 0);
  EXPECT_EQ(s.jumps, 0);
  // huge rate: the jump probability clamps at 1 and the jump always fires
  const GaussianJumpKernel k{1e9, 42.0, 0.0};
  EXPECT_DOUBLE_EQ(generator_step(0.0, 0.0, 0.1, 0.0, 0.0, &k, rng, &s), 42.0);
  EXPECT_EQ(s.steps, 2);
  EXPECT_EQ(s.clamped, 1);
  EXPECT_EQ(s.jumps, 1);
}

TEST(StepStats, MergeAndClampFraction) {
  StepStats a{100, 3, 7};
  const StepStats b{50, 1, 2};
  a.merge(b);
  EXPECT_EQ(a.steps, 150);
  EXPECT_EQ(a.clamped, 4);
  EXPECT_EQ(a.jumps, 9);
  EXPECT_NEAR(a.clamp_fraction(), 4.0 / 150.0, 1e-15);
  EXPECT_EQ(StepStats{}.clamp_fraction(), 0.0);
}

// Oracle: the closed-form marginal N(m_t, tau_t). The drift-driven process
// started from N(x0, rho^2) must reproduce it at interior times.
TEST(SimulateSegment, DriftChannelTransportsTheMarginal) {
  const int n = 4000;
  {
    const auto xs = marginal_samples(kSeg, 0.5, 1.0, n, 200, 11, nullptr);
    const BridgeStats st = bridge_stats(kSeg, 0.5);
    expect_gaussian_marginal(xs, st.m, st.tau, "drift t=0.5");
  }
  {
    const auto xs = marginal_samples(kSeg, 0.75, 1.0, n, 300, 12, nullptr);
    const BridgeStats st = bridge_stats(kSeg, 0.75);
    expect_gaussian_marginal(xs, st.m, st.tau, "drift t=0.75");
  }
}

TEST(SimulateSegment, JumpChannelTransportsTheMarginal) {
  const int n = 4000;
  StepStats stats;
  {
    const auto xs = marginal_samples(kSeg, 0.5, 0.0, n, 200, 13, &stats);
    const BridgeStats st = bridge_stats(kSeg, 0.5);
    expect_gaussian_marginal(xs, st.m, st.tau, "jump t=0.5");
  }
  {
    const auto xs = marginal_samples(kSeg, 0.75, 0.0, n, 300, 14, &stats);
    const BridgeStats st = bridge_stats(kSeg, 0.75);
    expect_gaussian_marginal(xs, st.m, st.tau, "jump t=0.75");
  }
  EXPECT_GT(stats.jumps, 0);
  EXPECT_LT(stats.clamp_fraction(), 0.01);
}

TEST(SimulateSegment, SuperpositionTransportsTheMarginal) {
  const auto xs = marginal_samples(kSeg, 0.5, 0.5, 4000, 200, 15, nullptr);
  const BridgeStats st = bridge_stats(kSeg, 0.5);
  expect_gaussian_marginal(xs, st.m, st.tau, "alpha=0.5 t=0.5");
}

TEST(SimulateSegment, NonFiniteStateRaisesDivergence) {
  SegmentGen gen;
  gen.eval = [](double, double, double& dv, double& lam) {
    dv = std::numeric_limits<double>::quiet_NaN();
    lam = 0.0;
  };
  gen.draw_jump = [](double x, double, Rng&) { return x; };
  StepPlan plan;
  plan.n_steps = 4;
  Rng rng(3);
  try {
    simulate_segment(0.0, 0.0, 1.0, gen, plan, rng);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step, 0);
  }
  EXPECT_THROW(simulate_segment(0.0, 1.0, 1.0, gen, plan, rng), std::invalid_argument);
}

TEST(SimulateSeries, RebuildsMemoryFromRealizedKnots) {
  struct Call {
    int seg_idx;
    std::vector<std::pair<double, double>> memory;
    double t_next, h;
  };
  std::vector<Call> calls;
  SeriesGenFactory factory;
  factory.make = [&calls](int seg_idx,
                          const std::vector<std::pair<double, double>>& memory,
                          double t_next, double h) {
    calls.push_back({seg_idx, memory, t_next, h});
    SegmentGen g;
    g.eval = [](double, double, double& dv, double& lam) { dv = 0.0; lam = 0.0; };
    g.draw_jump = [](double x, double, Rng&) { return x; };
    return g;
  };
  StepPlan plan;
  plan.n_steps = 5;
  plan.eta = 0.0;  // x stays at x0, so the memory windows are predictable
  Rng rng(4);
  const std::vector<double> grid = {0.0, 0.2, 0.5, 1.0};
  const TimeSeries out = simulate_series(3.5, grid, 2, factory, plan, rng);
  EXPECT_EQ(out.times, grid);
  for (double v : out.values) EXPECT_DOUBLE_EQ(v, 3.5);

  ASSERT_EQ(calls.size(), 3u);
  using Pairs = std::vector<std::pair<double, double>>;
  EXPECT_EQ(calls[0].seg_idx, 0);
  EXPECT_DOUBLE_EQ(calls[0].t_next, 0.2);
  EXPECT_NEAR(calls[0].h, 0.2 / 5, 1e-15);
  EXPECT_EQ(calls[0].memory, (Pairs{{3.5, 0.0}, {3.5, 0.0}, {3.5, 0.0}}));
  EXPECT_EQ(calls[1].memory, (Pairs{{3.5, 0.0}, {3.5, 0.0}, {3.5, 0.2}}));
  EXPECT_EQ(calls[2].memory, (Pairs{{3.5, 0.0}, {3.5, 0.2}, {3.5, 0.5}}));

  EXPECT_THROW(simulate_series(0.0, {0.0}, 2, factory, plan, rng),
               std::invalid_argument);
  EXPECT_THROW(simulate_series(0.0, {0.0, 0.5, 0.5}, 2, factory, plan, rng),
               std::invalid_argument);
  EXPECT_THROW(simulate_series(0.0, {0.0, 0.5, 0.4}, 2, factory, plan, rng),
               std::invalid_argument);
}

// Gluing exact bridge generators over a knot grid must reproduce the knot
// marginals N(v_k, rho^2) of the reference series.
TEST(SimulateSeries, GluedExactSegmentsHitKnotMarginals) {
  TimeSeries ref;
  ref.times = {0.0, 0.4, 1.0};
  ref.values = {0.0, 1.0, 0.3};
  const double eta = std::sqrt(0.3), rho = std::sqrt(0.03);
  const SeriesGenFactory factory = exact_factory(ref, eta, rho, 1.0);
  StepPlan plan;
  plan.n_steps = 150;
  plan.eta = eta;
  Rng rng(21);
  const int n = 4000;
  std::vector<double> mid_knot, last_knot;
  for (int i = 0; i < n; ++i) {
    const double x0 = rng.normal(ref.values[0], rho);
    const TimeSeries s = simulate_series(x0, ref.times, 2, factory, plan, rng);
    mid_knot.push_back(s.values[1]);
    last_knot.push_back(s.values[2]);
  }
  expect_gaussian_marginal(mid_knot, 1.0, rho * rho, "knot t=0.4");
  expect_gaussian_marginal(last_knot, 0.3, rho * rho, "knot t=1.0");
}

namespace {

// constant-output net: all weights zero, output biases fixed
Mlp constant_net(int in_dim, std::vector<double> out_bias, HeadType head) {
  Mlp m;
  m.layer_dims = {in_dim, static_cast<int>(out_bias.size())};
  m.weights = {std::vector<double>(out_bias.size() * static_cast<size_t>(in_dim), 0.0)};
  m.biases = {std::move(out_bias)};
  m.head = head;
  return m;
}

}  // namespace

TEST(TfmFactory, FinalStepLandsOnPredictedEndpoint) {
  const int m = 2;
  const Mlp net = constant_net(condition_dim(m), {2.75}, HeadType::drift);
  const SeriesGenFactory factory = tfm_factory(&net, 1.0);
  StepPlan plan;
  plan.n_steps = 25;
  plan.eta = 0.0;
  Rng rng(6);
  StepStats stats;
  const TimeSeries out =
      simulate_series(-1.0, {0.0, 0.5, 1.0}, m, factory, plan, rng, &stats);
  EXPECT_NEAR(out.values[1], 2.75, 1e-12);
  EXPECT_NEAR(out.values[2], 2.75, 1e-12);
  EXPECT_EQ(stats.jumps, 0);
  EXPECT_THROW(tfm_factory(nullptr, 1.0), std::invalid_argument);
}

TEST(LearnedFactory, RequiresTheModelsItsAlphaUses) {
  const int m = 2;
  const Mlp drift_net = constant_net(condition_dim(m), {1.3}, HeadType::drift);
  const Mlp jump_net = constant_net(condition_dim(m), {5.0, -2.0, 0.1}, HeadType::jump);
  EXPECT_THROW(learned_factory(nullptr, &jump_net, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(learned_factory(&drift_net, nullptr, 1.0, 0.5), std::invalid_argument);
  EXPECT_NO_THROW(learned_factory(nullptr, &jump_net, 1.0, 0.0));
  EXPECT_NO_THROW(learned_factory(&drift_net, nullptr, 1.0, 1.0));

  // alpha=1 with a constant drift c integrates to x0 + c over a unit span
  const SeriesGenFactory fd = learned_factory(&drift_net, nullptr, 1.0, 1.0);
  StepPlan plan;
  plan.n_steps = 4;
  plan.eta = 0.0;
  Rng rng(7);
  const TimeSeries out = simulate_series(0.5, {0.0, 0.5, 1.0}, m, fd, plan, rng);
  EXPECT_NEAR(out.values.back(), 0.5 + 1.3, 1e-12);
}

// alpha=0 with a constant jump kernel is a thinned Poisson process: over a
// unit span the jump count mean is lambda and the endpoint sits at the
// kernel's Gaussian unless no jump ever fired.
TEST(LearnedFactory, JumpChannelFiresAtTheParameterizedRate) {
  const int m = 2;
  const Mlp jump_net = constant_net(condition_dim(m), {5.0, -2.0, 0.1}, HeadType::jump);
  const double lam = softplus(5.0) + kSoftplusFloor;
  const double sigma = softplus(0.1) + kSoftplusFloor;
  const SeriesGenFactory f = learned_factory(nullptr, &jump_net, 1.0, 0.0);
  StepPlan plan;
  plan.n_steps = 100;
  plan.alpha = 0.0;
  Rng rng(8);
  StepStats stats;
  const int n = 2000;
  std::vector<double> ends;
  for (int i = 0; i < n; ++i) {
    const TimeSeries s = simulate_series(-2.0, {0.0, 1.0}, m, f, plan, rng, &stats);
    ends.push_back(s.values.back());
  }
  // per path: Binomial(100, lam/100), mean lam, var ~ lam(1 - lam/100)
  const double jump_rate = static_cast<double>(stats.jumps) / n;
  EXPECT_NEAR(jump_rate, lam, 4.0 * std::sqrt(lam * (1.0 - lam / 100.0) / n));
  EXPECT_NEAR(testutil::mean_of(ends), -2.0, 4.0 * sigma / std::sqrt(double(n)));
  EXPECT_EQ(stats.clamped, 0);
}
