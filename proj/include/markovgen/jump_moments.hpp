#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bridge.hpp"

namespace markovgen {

// Inside this band around the segment midpoint the jump channel is switched
// off: the quadratic part of xi vanishes there and the moment formulas
// change branch, so callers treat lambda ~ 0 and skip the jump moments.
inline constexpr double kMidpointEpsRel = 1e-6;

struct MidpointDegenerate : std::runtime_error {
  explicit MidpointDegenerate(double t)
      : std::runtime_error("jump moments undefined in the midpoint band (t=" +
                           std::to_string(t) + ")") {}
};

struct DegenerateJump : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool near_midpoint(const BridgeSegment& seg, double t) {
  return std::abs(t - seg.mid()) <= kMidpointEpsRel * seg.len();
}

struct JumpMoments {
  double mu_j = 0.0;    // mean of the jump target distribution J_t
  double var_j = 0.0;   // variance of J_t
  double z_minus = 0.0;  // roots of z^2 + 2 a z - 1
  double z_plus = 0.0;
  double a = 0.0;       // a_t = sqrt(tau) (t1-t0)(x1-x0) / (eta^2 (t0+t1-2t))
  double c = 0.0;       // normalizer C_t = integral of max(0, xi_t) p_t
};

namespace detail {

// I_0..I_4 with I_k = integral of z^k e^{-z^2/2} over [z_minus, z_plus];
// I_0 via erf, I_1 in closed form, I_k = (k-1) I_{k-2} - boundary term.
inline std::array<double, 5> truncated_i_all(double zm, double zp) {
  const double em = std::exp(-0.5 * zm * zm);
  const double ep = std::exp(-0.5 * zp * zp);
  std::array<double, 5> i{};
  i[0] = std::sqrt(kPi / 2.0) *
         (std::erf(zp / std::sqrt(2.0)) - std::erf(zm / std::sqrt(2.0)));
  i[1] = em - ep;
  for (int k = 2; k <= 4; ++k) {
    i[k] = (k - 1) * i[k - 2] -
           (std::pow(zp, k - 1) * ep - std::pow(zm, k - 1) * em);
  }
  return i;
}

}  // namespace detail

inline double truncated_i(int k, double z_minus, double z_plus) {
  if (k < 0 || k > 4) throw std::invalid_argument("truncated_i: k must be 0..4");
  if (!(z_minus <= z_plus)) {
    throw std::invalid_argument("truncated_i: need z_minus <= z_plus");
  }
  return detail::truncated_i_all(z_minus, z_plus)[static_cast<size_t>(k)];
}

// Closed-form mean/variance of J_t, the normalized density
// max(0, xi_t(y)) p_t(y). Upper branch t > mid uses I_k directly; lower
// branch replaces I_k by M_k - I_k where M_k = sqrt(2 pi) (k-1)!! for even k
// (the full-line unnormalized Gaussian moments) and 0 for odd k.
inline JumpMoments jump_moments(const BridgeSegment& seg, double t) {
  if (!(seg.rho > 0.0)) throw std::invalid_argument("jump_moments: need rho > 0");
  if (near_midpoint(seg, t)) throw MidpointDegenerate(t);
  const BridgeStats st = bridge_stats(seg, t);
  const double len = seg.len();
  const double sq = std::sqrt(st.tau);
  const double dt = seg.t0 + seg.t1 - 2.0 * t;  // > 0 on the lower branch
  const double a = sq * len * (seg.x1 - seg.x0) / (seg.eta * seg.eta * dt);
  const double r = std::sqrt(a * a + 1.0);
  const double zm = -a - r;
  const double zp = -a + r;

  std::array<double, 5> i = detail::truncated_i_all(zm, zp);
  if (t < seg.mid()) {
    constexpr double kFullLine[5] = {kSqrt2Pi, 0.0, kSqrt2Pi, 0.0, 3.0 * kSqrt2Pi};
    for (int k = 0; k <= 4; ++k) i[static_cast<size_t>(k)] = kFullLine[k] - i[static_cast<size_t>(k)];
  }

  const double den = i[2] + 2.0 * a * i[1] - i[0];
  if (std::abs(den) < 1e-300 || !std::isfinite(den)) {
    throw DegenerateJump("jump_moments: degenerate normalizer");
  }
  const double mu = st.m + sq * (i[3] + 2.0 * a * i[2] - i[1]) / den;
  double var = st.tau * (i[4] + 2.0 * a * i[3] - i[2]) / den - (st.m - mu) * (st.m - mu);
  if (var < 0.0) {
    if (var < -1e-9 * st.tau) throw DegenerateJump("jump_moments: negative variance");
    var = 0.0;
  }

  JumpMoments jm;
  jm.mu_j = mu;
  jm.var_j = var;
  jm.z_minus = zm;
  jm.z_plus = zp;
  jm.a = a;
  jm.c = xi_curvature(seg, t) * den / kSqrt2Pi;  // = integral of max(0,xi) p
  return jm;
}

// unnormalized jump density max(0, xi_t(y)) p_t(y)
inline double jump_density(const BridgeSegment& seg, double t, double y) {
  const BridgeStats st = bridge_stats(seg, t);
  return std::max(0.0, xi(seg, t, y)) * gauss_density(st, y);
}

// Brute-force reference for jump_moments: composite midpoint quadrature of
// the normalizer / mean / variance over m_t +- 12 sqrt(tau) (tail mass of
// the window is ~1e-30, far below any tolerance used here).
inline JumpMoments quadrature_oracle(const BridgeSegment& seg, double t, int nodes) {
  if (nodes < 16) throw std::invalid_argument("quadrature_oracle: nodes < 16");
  if (near_midpoint(seg, t)) throw MidpointDegenerate(t);
  const BridgeStats st = bridge_stats(seg, t);
  const double sq = std::sqrt(st.tau);
  const double lo = st.m - 12.0 * sq;
  const double h = 24.0 * sq / nodes;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double y = lo + (k + 0.5) * h;
    const double f = jump_density(seg, t, y);
    s0 += f;
    s1 += f * y;
    s2 += f * y * y;
  }
  const double z = s0 * h;
  if (!(z > 1e-300)) throw DegenerateJump("quadrature_oracle: zero normalizer");
  const double mu = s1 / s0;
  const double var = s2 / s0 - mu * mu;

  JumpMoments jm;
  jm.mu_j = mu;
  jm.var_j = var < 0.0 ? 0.0 : var;
  const double len = seg.len();
  const double dt = seg.t0 + seg.t1 - 2.0 * t;
  jm.a = sq * len * (seg.x1 - seg.x0) / (seg.eta * seg.eta * dt);
  const double r = std::sqrt(jm.a * jm.a + 1.0);
  jm.z_minus = -jm.a - r;
  jm.z_plus = -jm.a + r;
  jm.c = z;
  return jm;
}

// Discretized inverse CDF of J_t over m_t +- 12 sqrt(tau); cells with zero
// mass are skipped by the search, so u=0 maps to the left edge of the
// support region.
struct JumpTable {
  double lo = 0.0;
  double cell = 0.0;
  std::vector<double> cdf;  // cumulative mass per cell, back() == 1

  double sample(double u) const {
    size_t left = 0, right = cdf.size();
    while (left < right) {  // first index with cdf[idx] > u
      const size_t midp = (left + right) / 2;
      if (cdf[midp] > u) right = midp; else left = midp + 1;
    }
    const double prev = left == 0 ? 0.0 : cdf[left - 1];
    const double frac = (u - prev) / (cdf[left] - prev);
    return lo + cell * (static_cast<double>(left) + frac);
  }
};

inline JumpTable build_jump_table(const BridgeSegment& seg, double t, int cells = 1 << 14) {
  if (cells < 2) throw std::invalid_argument("build_jump_table: cells < 2");
  if (near_midpoint(seg, t)) throw MidpointDegenerate(t);
  const BridgeStats st = bridge_stats(seg, t);
  const double sq = std::sqrt(st.tau);
  JumpTable tab;
  tab.lo = st.m - 12.0 * sq;
  tab.cell = 24.0 * sq / cells;
  tab.cdf.resize(static_cast<size_t>(cells));
  double acc = 0.0;
  for (int k = 0; k < cells; ++k) {
    acc += jump_density(seg, t, tab.lo + (k + 0.5) * tab.cell);
    tab.cdf[static_cast<size_t>(k)] = acc;
  }
  if (!(acc > 1e-300)) throw DegenerateJump("build_jump_table: zero mass");
  for (double& v : tab.cdf) v /= acc;
  tab.cdf.back() = 1.0;
  return tab;
}

// one-shot inverse-CDF sample; deterministic in u
inline double sample_jump(const BridgeSegment& seg, double t, double u, int cells = 1 << 14) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("sample_jump: u outside [0,1)");
  return build_jump_table(seg, t, cells).sample(u);
}

}  // namespace markovgen
