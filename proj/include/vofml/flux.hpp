#pragma once

// Per-face feasibility interval and the two reference fluxes. Stencils are
// donor-oriented: flow goes from the central cell through its +x face.

#include <algorithm>
#include <utility>

#include "vofml/lattice.hpp"

namespace vofml {

/// [m, M] such that any flux in it keeps the donor's updated value in [0, 1].
/// Always contains alpha itself.
inline std::pair<double, double> face_bounds(double alpha, double beta) {
  // The min/max with alpha only absorbs rounding.
  const double lo = std::min(alpha, std::max(0.0, 1.0 - (1.0 - alpha) / beta));
  const double hi = std::max(alpha, std::min(1.0, alpha / beta));
  return {lo, hi};
}

inline double project(double flux, double alpha, double beta) {
  const auto [lo, hi] = face_bounds(alpha, beta);
  return std::clamp(flux, lo, hi);
}

inline double flux_upwind(const Stencil& x, double /*beta*/) { return x[kCentralCell]; }

inline double flux_limited_downwind(const Stencil& x, double beta) {
  return project(x[kDownwindCell], x[kCentralCell], beta);
}

}  // namespace vofml
