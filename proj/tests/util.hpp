#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

// Shared test utilities: independent oracles (quadrature, finite
// differences, a derivative-free minimizer) and statistics helpers. These
// deliberately avoid the library's own code paths wherever they are used to
// cross-check it.

namespace testutil {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance of samples against a model CDF; sorts a copy.
inline double ks_stat(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_stat: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// 1% critical value of the one-sample KS test (asymptotic)
inline double ks_crit_1pct(size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// composite-midpoint quadrature on [a,b]
inline double quad_mid(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(a + (i + 0.5) * h);
  return s * h;
}

// central difference d/dx f at x
inline double fd_central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Nelder-Mead in d dimensions, enough to recover smooth 3-parameter minima.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> start, double scale, int iters) {
  const size_t d = start.size();
  std::vector<std::vector<double>> simplex(d + 1, start);
  for (size_t i = 0; i < d; ++i) simplex[i + 1][i] += scale;
  std::vector<double> fv(d + 1);
  for (size_t i = 0; i <= d; ++i) fv[i] = f(simplex[i]);

  const auto centroid = [&](size_t skip) {
    std::vector<double> c(d, 0.0);
    for (size_t i = 0; i <= d; ++i) {
      if (i == skip) continue;
      for (size_t k = 0; k < d; ++k) c[k] += simplex[i][k];
    }
    for (double& x : c) x /= static_cast<double>(d);
    return c;
  };
  const auto blend = [&](const std::vector<double>& a, const std::vector<double>& b,
                         double w) {
    std::vector<double> r(d);
    for (size_t k = 0; k < d; ++k) r[k] = a[k] + w * (b[k] - a[k]);
    return r;
  };

  for (int it = 0; it < iters; ++it) {
    size_t lo = 0, hi = 0, second = 0;
    for (size_t i = 1; i <= d; ++i) {
      if (fv[i] < fv[lo]) lo = i;
      if (fv[i] > fv[hi]) hi = i;
    }
    second = lo;
    for (size_t i = 0; i <= d; ++i) {
      if (i != hi && fv[i] > fv[second]) second = i;
    }
    const std::vector<double> c = centroid(hi);
    std::vector<double> xr = blend(c, simplex[hi], -1.0);
    double fr = f(xr);
    if (fr < fv[lo]) {
      std::vector<double> xe = blend(c, simplex[hi], -2.0);
      const double fe = f(xe);
      simplex[hi] = fe < fr ? xe : xr;
      fv[hi] = std::min(fe, fr);
    } else if (fr < fv[second]) {
      simplex[hi] = xr;
      fv[hi] = fr;
    } else {
      std::vector<double> xc = blend(c, simplex[hi], 0.5);
      const double fc = f(xc);
      if (fc < fv[hi]) {
        simplex[hi] = xc;
        fv[hi] = fc;
      } else {
        for (size_t i = 0; i <= d; ++i) {
          if (i == lo) continue;
          simplex[i] = blend(simplex[lo], simplex[i], 0.5);
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  size_t lo = 0;
  for (size_t i = 1; i <= d; ++i) {
    if (fv[i] < fv[lo]) lo = i;
  }
  return simplex[lo];
}

}  // namespace testutil
