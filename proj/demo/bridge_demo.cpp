// Prints the closed-form quantities of one stabilized bridge segment and
// draws a handful of exact sample paths into bridge_demo.svg.

#include <cstdio>
#include <vector>

#include "markovgen/markovgen.hpp"

int main() {
  using namespace markovgen;
  const BridgeSegment seg{0.0, 1.0, 0.0, 1.0, 1.0, 0.2};

  std::printf("segment: x0=%g x1=%g on [%g,%g], eta=%g rho=%g\n\n", seg.x0, seg.x1, seg.t0,
              seg.t1, seg.eta, seg.rho);
  std::printf("%6s %10s %10s %12s %12s %12s %12s\n", "t", "m_t", "tau_t", "drift(m_t)",
              "lambda(m_t)", "mu_J", "sigma_J");
  for (double t : {0.1, 0.25, 0.4, 0.6, 0.75, 0.9}) {
    const BridgeStats st = bridge_stats(seg, t);
    const JumpMoments mo = jump_moments(seg, t);
    std::printf("%6.2f %10.4f %10.4f %12.4f %12.4f %12.4f %12.4f\n", t, st.m, st.tau,
                drift(seg, t, st.m), rate_lambda(seg, t, st.m), mo.mu_j,
                std::sqrt(mo.var_j));
  }

  // drift-only and jump-only samplers target the same bridge marginals
  SvgPlot plot("bridge sample paths (drift-driven and jump-driven)", "t", "x");
  Rng rng(42);
  StepPlan plan;
  plan.n_steps = 200;
  plan.eta = seg.eta;
  std::vector<double> ts(plan.n_steps + 1);
  for (int k = 0; k <= plan.n_steps; ++k) ts[k] = seg.t0 + (seg.t1 - seg.t0) * k / plan.n_steps;

  for (int mode = 0; mode < 2; ++mode) {
    plan.alpha = mode == 0 ? 1.0 : 0.0;
    const SegmentGen gen = make_exact_gen(seg, plan.alpha > 0.0, plan.alpha < 1.0);
    for (int p = 0; p < 4; ++p) {
      std::vector<double> xs(1, rng.normal(seg.x0, seg.rho));
      const double h = (seg.t1 - seg.t0) / plan.n_steps;
      for (int k = 0; k < plan.n_steps; ++k) {
        xs.push_back(simulate_segment(xs.back(), ts[k], ts[k] + h, gen,
                                      StepPlan{1, plan.alpha, plan.eta}, rng));
      }
      plot.add_series(ts, xs, mode == 0 ? "#4682b4" : "#dc143c");
    }
  }
  plot.write("bridge_demo.svg");
  std::printf("\nwrote bridge_demo.svg (blue: alpha=1 diffusion, red: alpha=0 jumps)\n");
  return 0;
}
