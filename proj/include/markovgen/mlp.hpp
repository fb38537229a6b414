#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jump_kl.hpp"
#include "rng.hpp"

namespace markovgen {

enum class HeadType { drift, jump };

inline const char* head_name(HeadType h) {
  return h == HeadType::drift ? "drift" : "jump";
}

inline HeadType head_from_name(const std::string& s) {
  if (s == "drift") return HeadType::drift;
  if (s == "jump") return HeadType::jump;
  throw std::invalid_argument("unknown head type: " + s);
}

// floor added to softplus outputs so lam and sigma stay strictly positive
inline constexpr double kSoftplusFloor = 1e-6;

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                 : std::exp(x) / (1.0 + std::exp(x));
}

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  std::int64_t step = 0;
};

// Plain feedforward net, ReLU on hidden layers, identity output. Weights are
// row-major (dims[l+1] x dims[l]); all math in double.
struct Mlp {
  std::vector<int> layer_dims;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  HeadType head = HeadType::drift;
  AdamState adam;

  int in_dim() const { return layer_dims.front(); }
  int out_dim() const { return layer_dims.back(); }
  size_t n_layers() const { return weights.size(); }
};

inline Mlp mlp_init(const std::vector<int>& dims, std::uint64_t seed,
                    HeadType head = HeadType::drift) {
  if (dims.size() < 2) throw std::invalid_argument("mlp_init: need >= 2 dims");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("mlp_init: dims must be >= 1");
  }
  Mlp m;
  m.layer_dims = dims;
  m.head = head;
  Rng rng = derive_stream(seed, 0x6d6c70);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double scale = std::sqrt(2.0 / fan_in);
    std::vector<double> w(static_cast<size_t>(fan_in) * fan_out);
    for (double& v : w) v = scale * rng.normal();
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(static_cast<size_t>(fan_out), 0.0);
    m.adam.m_w.emplace_back(m.weights.back().size(), 0.0);
    m.adam.v_w.emplace_back(m.weights.back().size(), 0.0);
    m.adam.m_b.emplace_back(m.biases.back().size(), 0.0);
    m.adam.v_b.emplace_back(m.biases.back().size(), 0.0);
  }
  return m;
}

// post-activations per layer, acts[0] is the input
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

inline std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& in,
                                       ForwardCache* cache = nullptr) {
  if (static_cast<int>(in.size()) != m.in_dim()) {
    throw std::invalid_argument("mlp_forward: input size " +
                                std::to_string(in.size()) + " != " +
                                std::to_string(m.in_dim()));
  }
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(in);
  }
  std::vector<double> cur = in;
  for (size_t l = 0; l < m.n_layers(); ++l) {
    const int rows = m.layer_dims[l + 1];
    const int cols = m.layer_dims[l];
    const bool hidden = l + 1 < m.n_layers();
    std::vector<double> next(static_cast<size_t>(rows));
    const double* w = m.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      double s = m.biases[l][static_cast<size_t>(r)];
      const double* wr = w + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) s += wr[c] * cur[static_cast<size_t>(c)];
      next[static_cast<size_t>(r)] = hidden && s < 0.0 ? 0.0 : s;
    }
    cur = std::move(next);
    if (cache) cache->acts.push_back(cur);
  }
  return cur;
}

struct Grads {
  std::vector<std::vector<double>> w, b;
};

inline Grads make_grads(const Mlp& m) {
  Grads g;
  for (size_t l = 0; l < m.n_layers(); ++l) {
    g.w.emplace_back(m.weights[l].size(), 0.0);
    g.b.emplace_back(m.biases[l].size(), 0.0);
  }
  return g;
}

inline void grads_zero(Grads& g) {
  for (auto& v : g.w) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : g.b) std::fill(v.begin(), v.end(), 0.0);
}

// Reverse-mode pass for one sample; accumulates into `out` so batch
// gradients are built by repeated calls.
inline void mlp_backward(const Mlp& m, const ForwardCache& cache,
                         const std::vector<double>& dout, Grads& out) {
  if (cache.acts.size() != m.n_layers() + 1) {
    throw std::invalid_argument("mlp_backward: cache does not match model");
  }
  if (static_cast<int>(dout.size()) != m.out_dim()) {
    throw std::invalid_argument("mlp_backward: bad output gradient size");
  }
  std::vector<double> delta = dout;
  for (size_t l = m.n_layers(); l-- > 0;) {
    const int rows = m.layer_dims[l + 1];
    const int cols = m.layer_dims[l];
    const std::vector<double>& below = cache.acts[l];
    double* gw = out.w[l].data();
    for (int r = 0; r < rows; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      if (d == 0.0) continue;
      out.b[l][static_cast<size_t>(r)] += d;
      double* gwr = gw + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gwr[c] += d * below[static_cast<size_t>(c)];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<size_t>(cols), 0.0);
    const double* w = m.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      if (d == 0.0) continue;
      const double* wr = w + static_cast<size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) prev[static_cast<size_t>(c)] += d * wr[c];
    }
    // ReLU gate: layer l's output activation was zeroed where negative
    for (int c = 0; c < cols; ++c) {
      if (cache.acts[l][static_cast<size_t>(c)] <= 0.0) prev[static_cast<size_t>(c)] = 0.0;
    }
    delta = std::move(prev);
  }
}

// Adam with bias correction. Rejects non-finite gradients before touching
// any state so a failed update leaves the model unchanged.
inline void adam_step(Mlp& m, const Grads& g, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  for (size_t l = 0; l < m.n_layers(); ++l) {
    for (double v : g.w[l]) {
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
    for (double v : g.b[l]) {
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
  }
  m.adam.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(m.adam.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(m.adam.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& grad,
                    std::vector<double>& mm, std::vector<double>& vv) {
    for (size_t i = 0; i < p.size(); ++i) {
      mm[i] = beta1 * mm[i] + (1.0 - beta1) * grad[i];
      vv[i] = beta2 * vv[i] + (1.0 - beta2) * grad[i] * grad[i];
      p[i] -= lr * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + eps);
    }
  };
  for (size_t l = 0; l < m.n_layers(); ++l) {
    update(m.weights[l], g.w[l], m.adam.m_w[l], m.adam.v_w[l]);
    update(m.biases[l], g.b[l], m.adam.m_b[l], m.adam.v_b[l]);
  }
}

// Network conditioning: current state, current time, right knot time, and
// the last m+1 observed (value, time) knots oldest first. Times are divided
// by t_horizon when flattened so inputs are scale-free across datasets.
struct ConditionVector {
  double x = 0.0;
  double t = 0.0;
  double t_next = 0.0;
  std::vector<std::pair<double, double>> memory;  // (value, time)
  double t_horizon = 1.0;
};

inline int condition_dim(int memory_len) { return 2 * (memory_len + 1) + 3; }

// layout: x, t/T, t_next/T, then (value, time/T) per memory entry
inline void flatten_condition(const ConditionVector& c, std::vector<double>& out) {
  out.clear();
  out.reserve(static_cast<size_t>(condition_dim(static_cast<int>(c.memory.size()) - 1)));
  out.push_back(c.x);
  out.push_back(c.t / c.t_horizon);
  out.push_back(c.t_next / c.t_horizon);
  for (const auto& [value, time] : c.memory) {
    out.push_back(value);
    out.push_back(time / c.t_horizon);
  }
}

inline double drift_eval(const Mlp& m, const ConditionVector& c) {
  if (m.out_dim() != 1) throw std::invalid_argument("drift_eval: model must have 1 output");
  std::vector<double> in;
  flatten_condition(c, in);
  return mlp_forward(m, in)[0];
}

// raw 3-vector through (softplus, identity, softplus) -> (lam, mu, sigma)
inline GaussianJumpKernel jump_eval(const Mlp& m, const ConditionVector& c) {
  if (m.out_dim() != 3) throw std::invalid_argument("jump_eval: model must have 3 outputs");
  std::vector<double> in;
  flatten_condition(c, in);
  const std::vector<double> raw = mlp_forward(m, in);
  return {softplus(raw[0]) + kSoftplusFloor, raw[1], softplus(raw[2]) + kSoftplusFloor};
}

}  // namespace markovgen
