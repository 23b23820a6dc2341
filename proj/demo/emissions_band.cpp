// Plants a NOx band just above a synthetic cruise cycle and lets the
// falsifier find a cycle within the tolerance tube that exposes it.

#include <iostream>

#include "hyperclean/hyperclean.hpp"

using namespace hyperclean;

int main() {
  std::vector<double> cycle;
  for (int t = 0; t < 30; ++t) cycle.push_back(50.0 * t / 30.0);
  for (int t = 0; t < 240; ++t) cycle.push_back(50.0);
  for (int t = 0; t < 30; ++t) cycle.push_back(50.0 - 50.0 * (t + 1) / 30.0);

  std::vector<TripSample> trips;
  for (int v = 0; v <= 140; ++v)
    for (int k = -8; k <= 8; ++k) {
      double nox = 1.0 + 0.02 * v;
      if (v >= 59 && v <= 61) nox += 100.0;
      trips.push_back({static_cast<double>(v), 0.5 * k, nox});
    }

  const NoxPredictor predictor(trips);
  const auto ctx = make_emission_context(predictor, cycle, 15, 88);
  std::cout << "standard cycle: " << cycle_emissions(predictor, cycle).mg_per_km << " mg/km\n";

  EmissionSearchConfig cfg;
  cfg.falsifier.rng_seed = 7;
  const auto res = falsify_emissions(ctx, predictor, cfg);
  std::cout << (res.outcome.falsified ? "falsified" : "not falsified") << " after "
            << res.outcome.iterations_used << " proposals, robustness " << res.outcome.min_robustness
            << '\n';
  if (res.outcome.falsified)
    std::cout << "witness cycle: " << cycle_emissions(predictor, res.outcome.argmin).mg_per_km
              << " mg/km\n";
}
