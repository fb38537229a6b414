#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bridge.hpp"
#include "dataset.hpp"
#include "jump_moments.hpp"
#include "mlp.hpp"
#include "rng.hpp"

namespace markovgen {

struct DivergenceError : std::runtime_error {
  int step;
  explicit DivergenceError(int step_idx, double t)
      : std::runtime_error("non-finite state at step " + std::to_string(step_idx) +
                           " (t=" + std::to_string(t) + ")"),
        step(step_idx) {}
};

struct StepPlan {
  int n_steps = 25;      // Euler steps per segment
  double alpha = 1.0;    // superposition weight: alpha drift/diffusion, 1-alpha jump
  double eta = std::sqrt(0.3);

  void validate() const {
    if (n_steps < 1) throw std::invalid_argument("StepPlan: n_steps < 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("StepPlan: alpha outside [0,1]");
    // eta = 0 gives deterministic drift-only sampling (used by the endpoint baseline)
    if (!(eta >= 0.0)) throw std::invalid_argument("StepPlan: eta < 0");
  }
};

struct StepStats {
  std::int64_t steps = 0;
  std::int64_t clamped = 0;  // steps where h * lambda exceeded 1
  std::int64_t jumps = 0;

  double clamp_fraction() const {
    return steps == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(steps);
  }
  void merge(const StepStats& o) {
    steps += o.steps;
    clamped += o.clamped;
    jumps += o.jumps;
  }
};

// One transition: jump with probability min(1, h lam), otherwise the Euler
// update x + h drift + sqrt(h) eta_eff eps.
inline double generator_step(double x, [[maybe_unused]] double t, double h,
                             double drift_v, double eta_eff,
                             const GaussianJumpKernel* jump, Rng& rng,
                             StepStats* stats = nullptr) {
  if (!(h > 0.0)) throw std::invalid_argument("generator_step: h <= 0");
  const double lam = jump ? jump->lam : 0.0;
  const double p = h * lam;
  if (stats) {
    stats->steps += 1;
    if (p > 1.0) stats->clamped += 1;
  }
  if (lam > 0.0 && rng.bernoulli(std::min(1.0, p))) {
    if (stats) stats->jumps += 1;
    return rng.normal(jump->mu, jump->sigma);
  }
  return x + h * drift_v + std::sqrt(h) * eta_eff * rng.normal();
}

// Per-step generator evaluation for one segment. eval reports the unscaled
// drift and jump rate at (x, t); draw_jump is called only when a jump fires.
struct SegmentGen {
  std::function<void(double x, double t, double& drift_out, double& lam_out)> eval;
  std::function<double(double x, double t, Rng& rng)> draw_jump;
};

// Runs n_steps transitions over [t_seg0, t_seg1] with the superposed
// generator (alpha * drift, sqrt(alpha) * eta, (1-alpha) * lambda); the jump
// target distribution itself is not scaled.
inline double simulate_segment(double x_start, double t_seg0, double t_seg1,
                               const SegmentGen& gen, const StepPlan& plan,
                               Rng& rng, StepStats* stats = nullptr) {
  plan.validate();
  if (!(t_seg0 < t_seg1)) throw std::invalid_argument("simulate_segment: bad segment times");
  const double h = (t_seg1 - t_seg0) / plan.n_steps;
  const double eta_eff = std::sqrt(plan.alpha) * plan.eta;
  double x = x_start;
  for (int k = 0; k < plan.n_steps; ++k) {
    const double t = t_seg0 + k * h;
    double dv = 0.0, lam = 0.0;
    gen.eval(x, t, dv, lam);
    const double lam_eff = (1.0 - plan.alpha) * lam;
    const double p = h * lam_eff;
    if (stats) {
      stats->steps += 1;
      if (p > 1.0) stats->clamped += 1;
    }
    if (lam_eff > 0.0 && rng.bernoulli(std::min(1.0, p))) {
      if (stats) stats->jumps += 1;
      x = gen.draw_jump(x, t, rng);
    } else {
      x += h * plan.alpha * dv + std::sqrt(h) * eta_eff * rng.normal();
    }
    if (!std::isfinite(x)) throw DivergenceError(k, t);
  }
  return x;
}

// Exact bridge generator. Jump tables are cached per step time and built
// lazily on the first jump at that time; the cache makes this single-use
// object non-thread-safe, callers simulate trajectories sequentially or
// build one generator per thread.
inline SegmentGen make_exact_gen(const BridgeSegment& seg, bool want_drift,
                                 bool want_jump, int table_cells = 1 << 14) {
  seg.validate();
  auto cache = std::make_shared<std::map<std::uint64_t, JumpTable>>();
  SegmentGen g;
  g.eval = [seg, want_drift, want_jump](double x, double t, double& dv, double& lam) {
    dv = want_drift ? drift(seg, t, x) : 0.0;
    // the jump channel is off inside the midpoint band, where J is undefined
    lam = want_jump && !near_midpoint(seg, t) ? rate_lambda(seg, t, x) : 0.0;
  };
  g.draw_jump = [seg, cache, table_cells](double, double t, Rng& rng) {
    std::uint64_t key;
    std::memcpy(&key, &t, sizeof key);
    auto it = cache->find(key);
    if (it == cache->end()) {
      it = cache->emplace(key, build_jump_table(seg, t, table_cells)).first;
    }
    return it->second.sample(rng.uniform());
  };
  return g;
}

// Builds the per-segment generator for segment seg_idx of a series being
// glued together. memory holds the m+1 realized knots ending at the segment
// start; t_next is the right knot time; h the Euler step width.
struct SeriesGenFactory {
  std::function<SegmentGen(int seg_idx,
                           const std::vector<std::pair<double, double>>& memory,
                           double t_next, double h)>
      make;
};

// learned drift/jump networks; pass nullptr for a channel the plan's alpha
// never uses (alpha=1 needs no jump model, alpha=0 no drift model)
inline SeriesGenFactory learned_factory(const Mlp* drift_model, const Mlp* jump_model,
                                        double t_horizon, double alpha) {
  if (alpha > 0.0 && !drift_model) {
    throw std::invalid_argument("learned_factory: alpha > 0 requires a drift model");
  }
  if (alpha < 1.0 && !jump_model) {
    throw std::invalid_argument("learned_factory: alpha < 1 requires a jump model");
  }
  SeriesGenFactory f;
  f.make = [=](int, const std::vector<std::pair<double, double>>& memory,
               double t_next, double) {
    SegmentGen g;
    g.eval = [=](double x, double t, double& dv, double& lam) {
      const ConditionVector c{x, t, t_next, memory, t_horizon};
      dv = alpha > 0.0 ? drift_eval(*drift_model, c) : 0.0;
      lam = alpha < 1.0 ? jump_eval(*jump_model, c).lam : 0.0;
    };
    g.draw_jump = [=](double x, double t, Rng& rng) {
      const ConditionVector c{x, t, t_next, memory, t_horizon};
      const GaussianJumpKernel k = jump_eval(*jump_model, c);
      return rng.normal(k.mu, k.sigma);
    };
    return g;
  };
  return f;
}

// endpoint-denoising baseline: the model predicts the right knot value and
// the drift is (x1_hat - x)/(t_next - t) with the denominator floored at the
// step width to keep the final steps finite
inline SeriesGenFactory tfm_factory(const Mlp* endpoint_model, double t_horizon) {
  if (!endpoint_model) throw std::invalid_argument("tfm_factory: model required");
  SeriesGenFactory f;
  f.make = [=](int, const std::vector<std::pair<double, double>>& memory,
               double t_next, double h) {
    SegmentGen g;
    g.eval = [=](double x, double t, double& dv, double& lam) {
      const ConditionVector c{x, t, t_next, memory, t_horizon};
      const double x1_hat = drift_eval(*endpoint_model, c);
      dv = (x1_hat - x) / std::max(t_next - t, h);
      lam = 0.0;
    };
    g.draw_jump = [](double x, double, Rng&) { return x; };
    return g;
  };
  return f;
}

// exact generators for the true bridge segments of a reference series; used
// to validate the gluing scheme independently of any learned model
inline SeriesGenFactory exact_factory(TimeSeries ref, double eta, double rho,
                                      double alpha, int table_cells = 1 << 14) {
  ref.validate();
  SeriesGenFactory f;
  f.make = [ref = std::move(ref), eta, rho, alpha, table_cells](
               int seg_idx, const std::vector<std::pair<double, double>>&,
               double, double) {
    const BridgeSegment seg{ref.values[static_cast<size_t>(seg_idx)],
                            ref.values[static_cast<size_t>(seg_idx) + 1],
                            ref.times[static_cast<size_t>(seg_idx)],
                            ref.times[static_cast<size_t>(seg_idx) + 1],
                            eta, rho};
    return make_exact_gen(seg, alpha > 0.0, alpha < 1.0, table_cells);
  };
  return f;
}

// Glues segment processes over the knot grid: each segment starts from the
// realized previous endpoint, and the memory window is rebuilt from the
// realized knots (left-padded with the first value at time 0).
inline TimeSeries simulate_series(double x0, const std::vector<double>& grid,
                                  int memory_len, const SeriesGenFactory& factory,
                                  const StepPlan& plan, Rng& rng,
                                  StepStats* stats = nullptr) {
  if (grid.size() < 2) throw std::invalid_argument("simulate_series: grid needs >= 2 knots");
  TimeSeries out;
  out.times = grid;
  out.values.resize(grid.size());
  out.values[0] = x0;
  TimeSeries realized;
  realized.times.push_back(grid[0]);
  realized.values.push_back(x0);
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i] < grid[i + 1])) {
      throw std::invalid_argument("simulate_series: grid not strictly increasing");
    }
    const double h = (grid[i + 1] - grid[i]) / plan.n_steps;
    const auto memory = memory_window(realized, static_cast<int>(i), memory_len);
    const SegmentGen gen = factory.make(static_cast<int>(i), memory, grid[i + 1], h);
    const double x_end = simulate_segment(out.values[i], grid[i], grid[i + 1],
                                          gen, plan, rng, stats);
    out.values[i + 1] = x_end;
    realized.times.push_back(grid[i + 1]);
    realized.values.push_back(x_end);
  }
  return out;
}

}  // namespace markovgen
