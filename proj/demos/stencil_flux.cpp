// Draws one stencil per family and compares the exact outgoing fraction with
// upwind, limited downwind and the network flux.
//
//   stencil_flux [weights.txt]
//
// Without a weights file an untrained (Xavier) network is used.

#include <cstdio>

#include "vofml/flux.hpp"
#include "vofml/network.hpp"
#include "vofml/random.hpp"
#include "vofml/synthconfig.hpp"

using namespace vofml;

int main(int argc, char** argv) {
  const NetworkWeights w = argc > 1 ? read_weights(argv[1]) : NetworkWeights::xavier(1);
  const double beta = 0.3;
  Rng rng(7);
  std::printf("%-13s %8s %8s %8s %8s %8s\n", "family", "alpha", "exact", "UW", "LD", "VOFML");
  for (Family f : kAllFamilies) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<double> theta;
      for (auto [lo, hi] : parameter_box(f)) theta.push_back(rng.uniform(lo, hi));
      try {
        const StencilConfig cfg = sample_config(f, theta, 2000);
        const Stencil x = stencil_fractions(cfg);
        std::printf("%-13s %8.4f %8.4f %8.4f %8.4f %8.4f\n", std::string(family_name(f)).c_str(), x[kCentralCell],
                    exact_flux(cfg, beta), flux_upwind(x, beta), flux_limited_downwind(x, beta),
                    flux_vofml(w, x, beta));
        break;
      } catch (const RejectedConfig&) {
      }
    }
  }
}
