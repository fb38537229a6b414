#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace markovgen {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

// One interpolation segment between knots (x0,t0) and (x1,t1).
// The process marginal on the segment is N(m_t, tau_t) with
//   m_t   = ((t1-t)x0 + (t-t0)x1) / (t1-t0)
//   tau_t = eta^2 (t-t0)(t1-t)/(t1-t0)^2 + rho^2
// eta scales the diffusion, rho the endpoint noise (rho > 0 keeps tau
// bounded away from zero at the knots).
struct BridgeSegment {
  double x0 = 0.0;
  double x1 = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  double eta = 1.0;
  double rho = 0.0;

  double len() const { return t1 - t0; }
  double mid() const { return 0.5 * (t0 + t1); }

  void validate() const {
    if (!(t0 < t1)) throw std::invalid_argument("BridgeSegment: need t0 < t1");
    if (!(eta > 0.0)) throw std::invalid_argument("BridgeSegment: need eta > 0");
    if (!(rho >= 0.0)) throw std::invalid_argument("BridgeSegment: need rho >= 0");
    if (!std::isfinite(x0) || !std::isfinite(x1) || !std::isfinite(t0) ||
        !std::isfinite(t1) || !std::isfinite(eta) || !std::isfinite(rho)) {
      throw std::invalid_argument("BridgeSegment: non-finite field");
    }
  }
};

struct BridgeStats {
  double m = 0.0;    // mean m_t
  double tau = 0.0;  // variance tau_t
};

namespace detail {
inline void check_time(const BridgeSegment& seg, double t) {
  if (!(t >= seg.t0 && t <= seg.t1)) {
    throw std::domain_error("bridge: t=" + std::to_string(t) +
                            " outside [" + std::to_string(seg.t0) + "," +
                            std::to_string(seg.t1) + "]");
  }
}
}  // namespace detail

inline BridgeStats bridge_stats(const BridgeSegment& seg, double t) {
  detail::check_time(seg, t);
  const double len = seg.len();
  const double m = ((seg.t1 - t) * seg.x0 + (t - seg.t0) * seg.x1) / len;
  const double tau =
      seg.eta * seg.eta * (t - seg.t0) * (seg.t1 - t) / (len * len) +
      seg.rho * seg.rho;
  return {m, tau};
}

// Drift of the SDE whose marginals are N(m_t, tau_t):
//   u_t(x) = (x1-x0)/(t1-t0) + (x-m_t) (tau_t' - eta^2) / (2 tau_t)
// with tau_t' = eta^2 (t0+t1-2t)/(t1-t0)^2. For rho=0 this reduces to the
// plain bridge drift (x1-x)/(t1-t).
inline double drift(const BridgeSegment& seg, double t, double x) {
  const BridgeStats st = bridge_stats(seg, t);
  if (!(st.tau > 0.0)) {
    throw std::domain_error("drift: tau=0 at a knot with rho=0 (singular)");
  }
  const double len = seg.len();
  const double slope =
      seg.eta * seg.eta / (2.0 * st.tau) *
      ((seg.t0 + seg.t1 - 2.0 * t) / (len * len) - 1.0);
  return (seg.x1 - seg.x0) / len + (x - st.m) * slope;
}

// xi_t(y) = d/dt log p_t(y), in the expanded form that stays finite at the
// segment midpoint:
//   xi_t(y) = c_t ((y-m_t)^2/tau_t - 1) + (x1-x0)(y-m_t)/((t1-t0) tau_t)
//   c_t     = eta^2 (t0+t1-2t) / (2 (t1-t0)^2 tau_t)
inline double xi(const BridgeSegment& seg, double t, double y) {
  const BridgeStats st = bridge_stats(seg, t);
  if (!(st.tau > 0.0)) {
    throw std::domain_error("xi: tau=0 at a knot with rho=0");
  }
  const double len = seg.len();
  const double c =
      seg.eta * seg.eta * (seg.t0 + seg.t1 - 2.0 * t) /
      (2.0 * len * len * st.tau);
  const double d = y - st.m;
  return c * (d * d / st.tau - 1.0) + (seg.x1 - seg.x0) * d / (len * st.tau);
}

// c_t as above; the quadratic coefficient of xi in w = (y-m)/sqrt(tau)
inline double xi_curvature(const BridgeSegment& seg, double t) {
  const BridgeStats st = bridge_stats(seg, t);
  if (!(st.tau > 0.0)) {
    throw std::domain_error("xi_curvature: tau=0 at a knot with rho=0");
  }
  const double len = seg.len();
  return seg.eta * seg.eta * (seg.t0 + seg.t1 - 2.0 * t) /
         (2.0 * len * len * st.tau);
}

// jump intensity lambda_t(x) = max(0, -xi_t(x))
inline double rate_lambda(const BridgeSegment& seg, double t, double x) {
  return std::max(0.0, -xi(seg, t, x));
}

inline double gauss_density(const BridgeStats& st, double y) {
  if (!(st.tau > 0.0)) {
    throw std::domain_error("gauss_density: need tau > 0");
  }
  const double d = y - st.m;
  return std::exp(-d * d / (2.0 * st.tau)) / std::sqrt(2.0 * kPi * st.tau);
}

}  // namespace markovgen
