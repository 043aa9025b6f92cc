// Simulates a heavy-tailed sample, picks the contrast and kernel by
// minimizing the estimated variance, then picks the bandwidth by Lepski's
// method, and prints each stage.

#include <iostream>

#include "rlpa/rlpa.hpp"

int main() {
  using namespace rlpa;
  ModelSpec model;
  model.target = TargetSpec(SinusoidTarget{1.0, 1.0, 0.3, 0});
  model.noise = contaminated_noise(0.1, cauchy_noise());
  const auto sample = generate_sample(model, 4096, 2024);

  LpaConfig cfg;
  cfg.degree = 1;
  LambdaGrid grid{{}, default_kernels(1)};
  for (double g : geometric_grid(0.25, 8.0, 6)) grid.contrasts.push_back(ContrastSpec::huber(g));
  grid.contrasts.push_back(ContrastSpec::arctan(1.0));

  const auto h = Bandwidth::isotropic(0.1, 1);
  const auto sel = select_lambda(sample, grid, h, cfg);
  std::cout << "truth           " << model.target(cfg.x0) << '\n'
            << "D-adaptive fit  " << sel.best_fit().estimate << " (" << to_string(sel.best().contrast.kind())
            << " gamma=" << sel.best().contrast.gamma() << ", V_hat=" << sel.best().v_hat << ")\n";

  const auto net = build_net(NetKind::Iso, sample.size(), 1, 0.8, 0.02, default_h_plus(sample.size()));
  LepskiConfig lc;
  lc.threshold_multiplier = 1e-3;
  const auto iso = select_bandwidth_iso(sample, grid, net, cfg, lc);
  std::cout << "Lepski fit      " << iso.estimate << " (h=" << iso.h_hat << " of " << net.size()
            << " candidates" << (iso.fallback ? ", fallback" : "") << ")\n";
  return 0;
}
