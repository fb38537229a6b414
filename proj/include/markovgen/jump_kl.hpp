#pragma once

#include <cmath>
#include <stdexcept>

namespace markovgen {

// Scaled Gaussian jump kernel lam * N(mu, sigma^2).
struct GaussianJumpKernel {
  double lam = 1.0;
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!(lam > 0.0) || !(sigma > 0.0) || !std::isfinite(lam) ||
        !std::isfinite(mu) || !std::isfinite(sigma)) {
      throw std::invalid_argument("GaussianJumpKernel: need finite lam > 0, sigma > 0");
    }
  }
};

// KL divergence (up to an additive term independent of the kernel) between
// the true rate kernel lam_true * J and the scaled Gaussian k:
//   F = k.lam + lam_true (log k.sigma - log k.lam
//                         + (var_j + (mu_j - k.mu)^2) / (2 k.sigma^2))
// Unique minimizer: (lam_true, mu_j, sqrt(var_j)).
inline double f_objective(double lam_true, double mu_j, double var_j,
                          const GaussianJumpKernel& k) {
  k.validate();
  if (lam_true == 0.0) return k.lam;
  const double s2 = k.sigma * k.sigma;
  const double dm = mu_j - k.mu;
  const double f = k.lam + lam_true * (std::log(k.sigma) - std::log(k.lam) +
                                       var_j / (2.0 * s2) + dm * dm / (2.0 * s2));
  if (!std::isfinite(f)) throw std::domain_error("f_objective: non-finite value");
  return f;
}

// per-sample training loss; identical to f_objective with the predicted
// kernel, kept as a named entry point for the loss code
inline double jump_loss_term(double lam_pred, double mu_pred, double sigma_pred,
                             double lam_true, double mu_j, double var_j) {
  return f_objective(lam_true, mu_j, var_j, {lam_pred, mu_pred, sigma_pred});
}

struct JumpKernelGrads {
  double d_lam = 0.0;
  double d_mu = 0.0;
  double d_sigma = 0.0;
};

// Partials of F in (lam, mu, sigma) of the predicted kernel:
//   dF/dlam   = 1 - lam_true/lam
//   dF/dmu    = lam_true (mu - mu_j) / sigma^2
//   dF/dsigma = lam_true (1/sigma - (var_j + (mu_j - mu)^2) / sigma^3)
inline JumpKernelGrads analytic_grads(double lam_pred, double mu_pred,
                                      double sigma_pred, double lam_true,
                                      double mu_j, double var_j) {
  JumpKernelGrads g;
  g.d_lam = 1.0 - lam_true / lam_pred;
  if (lam_true == 0.0) return g;
  const double s2 = sigma_pred * sigma_pred;
  const double dm = mu_pred - mu_j;
  g.d_mu = lam_true * dm / s2;
  g.d_sigma = lam_true * (1.0 / sigma_pred - (var_j + dm * dm) / (s2 * sigma_pred));
  return g;
}

}  // namespace markovgen
