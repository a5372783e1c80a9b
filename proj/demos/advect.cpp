// Advects the sphere of the third test case with one scheme and prints the
// mixed-cell ratio and mass as it goes.
//
//   advect [uw|ld|vofml] [cells] [weights.txt]

#include <cstdio>
#include <memory>
#include <string>

#include "vofml/experiments.hpp"

using namespace vofml;

int main(int argc, char** argv) {
  const std::string name = argc > 1 ? argv[1] : "ld";
  const int n = argc > 2 ? std::stoi(argv[2]) : 20;
  FluxScheme scheme = FluxScheme::limited_downwind();
  if (name == "uw") scheme = FluxScheme::upwind();
  if (name == "vofml") {
    if (argc < 4) {
      std::fprintf(stderr, "vofml needs a weights file\n");
      return 2;
    }
    scheme = FluxScheme::vofml(std::make_shared<const NetworkWeights>(read_weights(argv[3])));
  }
  RunOptions opt;
  opt.on_step = [](const StepRecord& s) {
    if (s.step % 50 == 0) std::printf("step %4ld  t %.3f  Rmix %.4f  mass %.15f\n", s.step, s.time, s.rmix, s.mass);
  };
  const RunReport r = run(3, scheme, n, opt);
  std::printf("%s N=%d: relative L1 error %.4e, Rmix T/0 %.3f, range [%.2e, %.6f]\n", r.scheme.c_str(), n, r.error,
              r.rmix_ratio, r.min_value, r.max_value);
}
