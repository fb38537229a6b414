#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "bridge.hpp"
#include "checkpoint.hpp"
#include "dataset.hpp"
#include "jump_kl.hpp"
#include "jump_moments.hpp"
#include "mlp.hpp"
#include "mmd.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace markovgen {

enum class LossKind { drift, jump, tfm };

inline const char* loss_name(LossKind k) {
  switch (k) {
    case LossKind::drift: return "drift";
    case LossKind::jump: return "jump";
    case LossKind::tfm: return "tfm";
  }
  throw std::invalid_argument("loss_name: bad kind");
}

inline LossKind loss_from_name(const std::string& s) {
  if (s == "drift") return LossKind::drift;
  if (s == "jump") return LossKind::jump;
  if (s == "tfm") return LossKind::tfm;
  throw std::invalid_argument("loss_from_name: unknown loss '" + s + "'");
}

struct TrainingDiverged : std::runtime_error {
  int epoch;
  TrainingDiverged(int e, const std::string& detail)
      : std::runtime_error("training diverged at epoch " + std::to_string(e) + ": " + detail),
        epoch(e) {}
};

struct TrainConfig {
  double eta2 = 0.3;   // bridge diffusion variance
  double rho2 = 0.03;  // knot stabilization variance
  int memory_len = 10;
  LossKind loss_kind = LossKind::drift;
  std::vector<int> hidden_dims = {256, 256, 256, 256};
  double lr = 1e-5;
  int epochs = 300;
  int batch_size = 256;
  int steps_per_epoch = 0;  // 0: one pass worth, ceil(segment count / batch_size)
  int n_val_gen = 64;       // series generated per validation scoring pass
  int sample_steps = 25;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(eta2 > 0.0)) throw std::invalid_argument("TrainConfig: eta2 <= 0");
    if (!(rho2 >= 0.0)) throw std::invalid_argument("TrainConfig: rho2 < 0");
    if (memory_len < 0) throw std::invalid_argument("TrainConfig: memory_len < 0");
    if (hidden_dims.empty()) throw std::invalid_argument("TrainConfig: no hidden layers");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr <= 0");
    if (epochs < 1 || batch_size < 1 || n_val_gen < 2 || sample_steps < 1) {
      throw std::invalid_argument("TrainConfig: bad epochs/batch_size/n_val_gen/sample_steps");
    }
  }
};

// One stochastic interpolation point: series i, time t uniform over its
// observed range, segment j containing t, and x drawn from the bridge
// marginal N(m_t, tau_t) of that segment.
struct TrainingPoint {
  int series_idx = 0;
  int seg_idx = 0;
  double t = 0.0;
  double x = 0.0;
  BridgeSegment seg{0.0, 0.0, 0.0, 1.0, 1.0, 0.0};
};

inline TrainingPoint sample_training_point(const Dataset& ds, double eta, double rho,
                                           Rng& rng) {
  if (ds.series.empty()) throw std::invalid_argument("sample_training_point: empty dataset");
  TrainingPoint p;
  p.series_idx = static_cast<int>(rng.uniform_int(ds.series.size()));
  const TimeSeries& s = ds.series[static_cast<size_t>(p.series_idx)];
  p.t = rng.uniform(s.times.front(), s.times.back());
  p.seg_idx = locate_segment(s, p.t);
  const size_t j = static_cast<size_t>(p.seg_idx);
  p.seg = BridgeSegment{s.values[j], s.values[j + 1], s.times[j], s.times[j + 1], eta, rho};
  const BridgeStats st = bridge_stats(p.seg, p.t);
  p.x = rng.normal(st.m, std::sqrt(st.tau));
  return p;
}

// Mean squared drift-matching loss over one batch; accumulates dLoss/dparams
// into g (zeroed here). Regression target is the closed-form bridge drift.
inline double drift_loss_batch(const Mlp& model, const Dataset& ds, const TrainConfig& cfg,
                               int batch_size, Rng& rng, Grads& g) {
  grads_zero(g);
  const double eta = std::sqrt(cfg.eta2), rho = std::sqrt(cfg.rho2);
  double loss = 0.0;
  std::vector<double> in;
  ForwardCache cache;
  for (int b = 0; b < batch_size; ++b) {
    const TrainingPoint p = sample_training_point(ds, eta, rho, rng);
    const TimeSeries& s = ds.series[static_cast<size_t>(p.series_idx)];
    const ConditionVector c{p.x, p.t, p.seg.t1,
                            memory_window(s, p.seg_idx, cfg.memory_len), ds.horizon};
    flatten_condition(c, in);
    const double v = mlp_forward(model, in, &cache)[0];
    const double r = v - drift(p.seg, p.t, p.x);
    loss += r * r;
    mlp_backward(model, cache, {2.0 * r / batch_size}, g);
  }
  return loss / batch_size;
}

// Jump-intensity loss over one batch. Inside the degenerate midpoint band
// the target rate is zero and the loss reduces to the predicted rate.
inline double jump_loss_batch(const Mlp& model, const Dataset& ds, const TrainConfig& cfg,
                              int batch_size, Rng& rng, Grads& g) {
  grads_zero(g);
  const double eta = std::sqrt(cfg.eta2), rho = std::sqrt(cfg.rho2);
  double loss = 0.0;
  std::vector<double> in;
  ForwardCache cache;
  for (int b = 0; b < batch_size; ++b) {
    const TrainingPoint p = sample_training_point(ds, eta, rho, rng);
    const TimeSeries& s = ds.series[static_cast<size_t>(p.series_idx)];
    const ConditionVector c{p.x, p.t, p.seg.t1,
                            memory_window(s, p.seg_idx, cfg.memory_len), ds.horizon};
    flatten_condition(c, in);
    const std::vector<double> raw = mlp_forward(model, in, &cache);
    const GaussianJumpKernel pred{softplus(raw[0]) + kSoftplusFloor, raw[1],
                                  softplus(raw[2]) + kSoftplusFloor};
    double lam_true = 0.0, mu_j = 0.0, var_j = 1.0;
    if (!near_midpoint(p.seg, p.t)) {
      lam_true = rate_lambda(p.seg, p.t, p.x);
      const JumpMoments mo = jump_moments(p.seg, p.t);
      mu_j = mo.mu_j;
      var_j = mo.var_j;
    }
    loss += f_objective(lam_true, mu_j, var_j, pred);
    const JumpKernelGrads jg = analytic_grads(pred.lam, pred.mu, pred.sigma,
                                              lam_true, mu_j, var_j);
    mlp_backward(model, cache,
                 {jg.d_lam * sigmoid(raw[0]) / batch_size, jg.d_mu / batch_size,
                  jg.d_sigma * sigmoid(raw[2]) / batch_size},
                 g);
  }
  return loss / batch_size;
}

// Endpoint-regression baseline: the model predicts the right knot value from
// the same conditioning as the drift model.
inline double tfm_baseline_loss(const Mlp& model, const Dataset& ds, const TrainConfig& cfg,
                                int batch_size, Rng& rng, Grads& g) {
  grads_zero(g);
  const double eta = std::sqrt(cfg.eta2), rho = std::sqrt(cfg.rho2);
  double loss = 0.0;
  std::vector<double> in;
  ForwardCache cache;
  for (int b = 0; b < batch_size; ++b) {
    const TrainingPoint p = sample_training_point(ds, eta, rho, rng);
    const TimeSeries& s = ds.series[static_cast<size_t>(p.series_idx)];
    const ConditionVector c{p.x, p.t, p.seg.t1,
                            memory_window(s, p.seg_idx, cfg.memory_len), ds.horizon};
    flatten_condition(c, in);
    const double x1_hat = mlp_forward(model, in, &cache)[0];
    const double r = x1_hat - p.seg.x1;
    loss += r * r;
    mlp_backward(model, cache, {2.0 * r / batch_size}, g);
  }
  return loss / batch_size;
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mmd = 0.0;
  std::int64_t wall_ms = 0;
};

struct TrainResult {
  Mlp model;       // weights from the epoch with the lowest validation MMD
  int best_epoch = -1;
  double best_val = 0.0;
  std::vector<EpochLog> log;
};

inline void write_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open log file " + path);
  std::fprintf(f, "epoch,train_loss,val_mmd,wall_ms\n");
  for (const EpochLog& e : log) {
    std::fprintf(f, "%d,%.17g,%.17g,%lld\n", e.epoch, e.train_loss, e.val_mmd,
                 static_cast<long long>(e.wall_ms));
  }
  std::fclose(f);
}

namespace detail {

// all validation series must share one knot grid so generated and held-out
// series live in the same vector space for the energy distance
inline std::vector<double> common_grid(const Dataset& ds) {
  if (ds.series.empty()) throw std::invalid_argument("validation dataset is empty");
  const std::vector<double>& grid = ds.series.front().times;
  for (const TimeSeries& s : ds.series) {
    if (s.times != grid) {
      throw std::invalid_argument("validation series do not share a common time grid");
    }
  }
  return grid;
}

inline std::vector<std::vector<double>> value_matrix(const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.series.size());
  for (const TimeSeries& s : ds.series) out.push_back(s.values);
  return out;
}

}  // namespace detail

// Scores a model by generating n_gen series on the validation grid and
// computing the energy MMD against the held-out series. Initial states are
// resampled from the observed initial values in x0_pool.
inline double validation_mmd(const Mlp& model, LossKind kind, const Dataset& val_ds,
                             const std::vector<double>& x0_pool, const TrainConfig& cfg,
                             Rng& rng) {
  if (x0_pool.empty()) throw std::invalid_argument("validation_mmd: empty x0 pool");
  const std::vector<double> grid = detail::common_grid(val_ds);
  StepPlan plan;
  plan.n_steps = cfg.sample_steps;
  plan.eta = std::sqrt(cfg.eta2);
  SeriesGenFactory factory;
  switch (kind) {
    case LossKind::drift:
      plan.alpha = 1.0;
      factory = learned_factory(&model, nullptr, val_ds.horizon, plan.alpha);
      break;
    case LossKind::jump:
      plan.alpha = 0.0;
      factory = learned_factory(nullptr, &model, val_ds.horizon, plan.alpha);
      break;
    case LossKind::tfm:
      plan.alpha = 1.0;
      plan.eta = 0.0;
      factory = tfm_factory(&model, val_ds.horizon);
      break;
  }
  std::vector<std::vector<double>> gen;
  gen.reserve(static_cast<size_t>(cfg.n_val_gen));
  for (int i = 0; i < cfg.n_val_gen; ++i) {
    const double x0 = x0_pool[rng.uniform_int(x0_pool.size())];
    gen.push_back(simulate_series(x0, grid, cfg.memory_len, factory, plan, rng).values);
  }
  return energy_mmd(gen, detail::value_matrix(val_ds));
}

// Minibatch training with per-epoch validation scoring; returns the model
// checkpointed at the best validation MMD. Non-finite losses or generated
// states abort with the offending epoch.
inline TrainResult train(const Dataset& train_ds, const Dataset& val_ds,
                         const TrainConfig& cfg, std::vector<EpochLog>* live_log = nullptr) {
  cfg.validate();
  if (train_ds.series.empty()) throw std::invalid_argument("train: empty training dataset");

  std::vector<int> dims;
  dims.push_back(condition_dim(cfg.memory_len));
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.loss_kind == LossKind::jump ? 3 : 1);
  const HeadType head = cfg.loss_kind == LossKind::jump ? HeadType::jump : HeadType::drift;
  Mlp model = mlp_init(dims, cfg.seed, head);

  std::int64_t n_segments = 0;
  for (const TimeSeries& s : train_ds.series) {
    n_segments += static_cast<std::int64_t>(s.n_points()) - 1;
  }
  const int steps = cfg.steps_per_epoch > 0
                        ? cfg.steps_per_epoch
                        : static_cast<int>((n_segments + cfg.batch_size - 1) / cfg.batch_size);

  std::vector<double> x0_pool;
  x0_pool.reserve(train_ds.series.size());
  for (const TimeSeries& s : train_ds.series) x0_pool.push_back(s.values.front());

  TrainResult res;
  res.model = model;
  Grads g = make_grads(model);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    Rng batch_rng = derive_stream(cfg.seed, 0x10000 + static_cast<std::uint64_t>(epoch));
    double mean_loss = 0.0;
    for (int s = 0; s < steps; ++s) {
      double loss = 0.0;
      switch (cfg.loss_kind) {
        case LossKind::drift:
          loss = drift_loss_batch(model, train_ds, cfg, cfg.batch_size, batch_rng, g);
          break;
        case LossKind::jump:
          loss = jump_loss_batch(model, train_ds, cfg, cfg.batch_size, batch_rng, g);
          break;
        case LossKind::tfm:
          loss = tfm_baseline_loss(model, train_ds, cfg, cfg.batch_size, batch_rng, g);
          break;
      }
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch, "non-finite batch loss");
      try {
        adam_step(model, g, cfg.lr);
      } catch (const std::invalid_argument& e) {
        // adam_step rejects non-finite gradients without touching the state
        throw TrainingDiverged(epoch, e.what());
      }
      mean_loss += loss;
    }
    mean_loss /= steps;

    Rng val_rng = derive_stream(cfg.seed, 0x20000 + static_cast<std::uint64_t>(epoch));
    double val = 0.0;
    try {
      val = validation_mmd(model, cfg.loss_kind, val_ds, x0_pool, cfg, val_rng);
    } catch (const DivergenceError& e) {
      throw TrainingDiverged(epoch, e.what());
    }
    if (!std::isfinite(val)) throw TrainingDiverged(epoch, "non-finite validation MMD");

    if (res.best_epoch < 0 || val < res.best_val) {
      res.best_epoch = epoch;
      res.best_val = val;
      res.model = model;
    }
    const auto toc = std::chrono::steady_clock::now();
    res.log.push_back(EpochLog{
        epoch, mean_loss, val,
        std::chrono::duration_cast<std::chrono::milliseconds>(toc - tic).count()});
    if (live_log) live_log->push_back(res.log.back());
  }
  return res;
}

}  // namespace markovgen
