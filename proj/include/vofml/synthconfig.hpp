#pragma once

// Parametric two-fluid configurations over the normalized 3x3x3 stencil
// (cells of edge 1, central cell centered at the origin), their exact
// volume fractions and the exact x-flux through the central cell's +x face.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vofml/convex_hull.hpp"
#include "vofml/geometry.hpp"
#include "vofml/lattice.hpp"

namespace vofml {

enum class Family { OnePlane = 0, TwoPlanes = 1, ThreePlanes = 2, Ellipsoid = 3 };

inline constexpr std::array<Family, 4> kAllFamilies = {Family::OnePlane, Family::TwoPlanes,
                                                       Family::ThreePlanes, Family::Ellipsoid};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::OnePlane: return "one_plane";
    case Family::TwoPlanes: return "two_planes";
    case Family::ThreePlanes: return "three_planes";
    case Family::Ellipsoid: return "ellipsoid";
  }
  return "?";
}

inline Family family_from_name(std::string_view s) {
  for (auto f : kAllFamilies)
    if (family_name(f) == s) return f;
  throw std::invalid_argument("unknown family '" + std::string(s) + "'");
}

/// Number of raw parameters per family.
inline int parameter_count(Family f) {
  switch (f) {
    case Family::OnePlane: return 3;
    case Family::TwoPlanes: return 6;
    case Family::ThreePlanes: return 9;
    case Family::Ellipsoid: return 6;
  }
  return 0;
}

/// Parameter box of a family, as per-coordinate (lo, hi).
inline std::vector<std::pair<double, double>> parameter_box(Family f) {
  constexpr double tau = 2.0 * std::numbers::pi;
  const double c = std::sqrt(3.0 * (1 + 0.5));
  switch (f) {
    case Family::OnePlane: return {{0, tau}, {-1, 1}, {0, 1}};
    case Family::TwoPlanes: return {{0, tau}, {0, tau}, {0, tau}, {0, tau}, {0, tau}, {0, 1}};
    case Family::ThreePlanes:
      return {{0, tau}, {0, tau}, {0, tau}, {0, tau}, {0, tau}, {0, 1}, {0, tau}, {-1, 1}, {0, 1}};
    case Family::Ellipsoid: return {{-c, c}, {-c, c}, {-c, c}, {0, tau}, {-1, 1}, {0, 1}};
  }
  return {};
}

/// The central cell does not hold both fluids for these parameters.
class RejectedConfig : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

inline constexpr double kRejectTol = 1e-9;
inline constexpr int kDefaultEllipsoidPoints = 10000;
inline constexpr double kMinAxisDirection = 0.05;

/// Region A of one stencil configuration: the intersection of 1–3 open
/// half-spaces, or the interior of an ellipsoid (integrated through its
/// inscribed polytope). `complemented` swaps the roles of A and B.
struct StencilConfig {
  Family kind = Family::OnePlane;
  std::vector<HalfSpace> halfspaces;
  std::optional<Ellipsoid> ellipsoid;
  std::shared_ptr<const ConvexPolytope> polytope;
  std::vector<double> raw_params;
  bool complemented = false;

  static StencilConfig from_halfspaces(std::vector<HalfSpace> hs) {
    StencilConfig c;
    c.kind = hs.size() <= 1 ? Family::OnePlane : hs.size() == 2 ? Family::TwoPlanes : Family::ThreePlanes;
    c.halfspaces = std::move(hs);
    return c;
  }

  static StencilConfig from_ellipsoid(const Ellipsoid& e, int points = kDefaultEllipsoidPoints) {
    StencilConfig c;
    c.kind = Family::Ellipsoid;
    c.ellipsoid = e;
    c.polytope = std::make_shared<const ConvexPolytope>(ellipsoid_polytope(e, points));
    return c;
  }

  StencilConfig complement() const {
    StencilConfig c = *this;
    c.complemented = !c.complemented;
    return c;
  }
};

/// Volume of (region A) ∩ [lo, hi].
inline double region_volume_in_box(const StencilConfig& cfg, const Vec3& lo, const Vec3& hi) {
  const double box_volume = (hi - lo).prod();
  if (cfg.polytope) {
    const double inside = volume(clip_to_box(*cfg.polytope, lo, hi));
    return cfg.complemented ? box_volume - inside : inside;
  }
  if (!cfg.complemented) {
    ConvexPolytope p = box(lo, hi);
    for (const auto& h : cfg.halfspaces) {
      if (p.empty()) break;
      p = clip(p, h);
    }
    return volume(p);
  }
  // Complement of h1 ∩ ... ∩ hn as the disjoint union of
  // h1 ∩ ... ∩ h(k-1) ∩ not(hk), k = 1..n.
  double total = 0.0;
  ConvexPolytope prefix = box(lo, hi);
  for (const auto& h : cfg.halfspaces) {
    if (prefix.empty()) break;
    total += volume(clip(prefix, h.flipped()));
    prefix = clip(prefix, h);
  }
  if (cfg.halfspaces.empty()) total = 0.0;
  return total;
}

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

inline double central_fraction(const StencilConfig& cfg) {
  return clamp_unit(region_volume_in_box(cfg, Vec3::Constant(-0.5), Vec3::Constant(0.5)));
}

/// 27 volume fractions, index (i', j', k') lexicographic with x fastest.
inline Stencil stencil_fractions(const StencilConfig& cfg) {
  Stencil out{};
  if (!cfg.polytope) {
    for (int idx = 0; idx < kStencilSize; ++idx) {
      const auto o = stencil_offset(idx);
      const Vec3 c(o[0], o[1], o[2]);
      out[idx] = clamp_unit(region_volume_in_box(cfg, c - Vec3::Constant(0.5), c + Vec3::Constant(0.5)));
    }
    return out;
  }
  // Slice the polytope x -> y -> z so each clip works on a smaller piece.
  const ConvexPolytope whole = clip_to_box(*cfg.polytope, Vec3::Constant(-1.5), Vec3::Constant(1.5));
  for (int i = -1; i <= 1; ++i) {
    const ConvexPolytope px =
        whole.empty() ? whole
                      : clip(whole, {HalfSpace{-Vec3::UnitX(), -(i - 0.5)}, HalfSpace{Vec3::UnitX(), i + 0.5}});
    for (int j = -1; j <= 1; ++j) {
      const ConvexPolytope pxy =
          px.empty() ? px : clip(px, {HalfSpace{-Vec3::UnitY(), -(j - 0.5)}, HalfSpace{Vec3::UnitY(), j + 0.5}});
      for (int k = -1; k <= 1; ++k) {
        const ConvexPolytope cell =
            pxy.empty() ? pxy
                        : clip(pxy, {HalfSpace{-Vec3::UnitZ(), -(k - 0.5)}, HalfSpace{Vec3::UnitZ(), k + 0.5}});
        const double v = clamp_unit(volume(cell));
        out[stencil_index(i, j, k)] = cfg.complemented ? 1.0 - v : v;
      }
    }
  }
  return out;
}

/// Mean A-fraction of the slab (0.5 - beta, 0.5) x (-0.5, 0.5)^2 swept through
/// the central cell's +x face in one step. Returns the central fraction for
/// beta below 1e-12.
inline double exact_flux(const StencilConfig& cfg, double beta) {
  if (beta < 1e-12) return central_fraction(cfg);
  const Vec3 lo(0.5 - beta, -0.5, -0.5);
  const Vec3 hi(0.5, 0.5, 0.5);
  return clamp_unit(region_volume_in_box(cfg, lo, hi) / beta);
}

/// Geometric image Q(A) of the configuration under a lattice map. Stencil
/// fractions of the result are the Q-permutation of the original ones.
inline StencilConfig transform(const StencilConfig& cfg, const LatticeMap& q) {
  StencilConfig out = cfg;
  for (auto& h : out.halfspaces) h.normal = q.apply(h.normal);
  if (cfg.ellipsoid) {
    Ellipsoid e;
    e.center = q.apply(cfg.ellipsoid->center);
    e.semi_axes = q.apply(cfg.ellipsoid->semi_axes).cwiseAbs();
    out.ellipsoid = e;
  }
  if (cfg.polytope)
    out.polytope = std::make_shared<const ConvexPolytope>(cfg.polytope->transformed(q.matrix()));
  return out;
}

/// One of the 6 augmentation maps (see augmentation_maps()).
inline StencilConfig transform(const StencilConfig& cfg, int sigma) {
  return transform(cfg, augmentation_maps().at(sigma));
}

namespace synth_detail {

inline void require_mixed(const StencilConfig& cfg) {
  const double c = central_fraction(cfg);
  if (!(c > kRejectTol && c < 1.0 - kRejectTol))
    throw RejectedConfig("central cell holds a single fluid (fraction " + std::to_string(c) + ")");
}

inline void require_params(std::span<const double> theta, Family f) {
  if (int(theta.size()) != parameter_count(f))
    throw std::invalid_argument("wrong parameter count for " + std::string(family_name(f)));
}

// Whether the line {p + t*dir} meets the closed central cube.
inline bool line_meets_central_cell(const Vec3& p, const Vec3& dir) {
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir[k]) < 1e-15) {
      if (std::abs(p[k]) > 0.5) return false;
      continue;
    }
    double a = (-0.5 - p[k]) / dir[k];
    double b = (0.5 - p[k]) / dir[k];
    if (a > b) std::swap(a, b);
    t_lo = std::max(t_lo, a);
    t_hi = std::min(t_hi, b);
  }
  return t_lo <= t_hi;
}

}  // namespace synth_detail

/// Largest r >= 0 such that the line through r*dir with direction `line`
/// still meets the closed central cube. `dir` must be a unit vector
/// orthogonal to `line`.
inline double max_line_offset(const Vec3& dir, const Vec3& line) {
  // The closest line point to the origin is r*dir, so r <= sqrt(3)/2.
  double lo = 0.0, hi = std::sqrt(3.0) / 2.0 + 1e-9;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (synth_detail::line_meets_central_cell(mid * dir, line))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

/// A = {n . p - d < 0}, n uniform on the sphere, d = theta3 * |n|_1 / 2.
inline StencilConfig sample_one_plane(std::span<const double> theta) {
  synth_detail::require_params(theta, Family::OnePlane);
  const Vec3 n = archimedes_point(theta[0], theta[1]);
  StencilConfig cfg;
  cfg.kind = Family::OnePlane;
  cfg.halfspaces = {HalfSpace{n, theta[2] * n.lpNorm<1>() / 2.0}};
  cfg.raw_params.assign(theta.begin(), theta.end());
  return cfg;
}

namespace synth_detail {

inline std::vector<HalfSpace> two_plane_halfspaces(std::span<const double> theta) {
  const Mat3 r = rotation(theta[1], theta[2], theta[3]);
  const Vec3 n1 = r * Vec3::UnitZ();
  const Vec3 n2 = r * Vec3(-std::sin(theta[0]), 0.0, std::cos(theta[0]));
  const Vec3 line = r * Vec3::UnitY();
  const Vec3 dir = std::cos(theta[4]) * (r * Vec3::UnitX()) + std::sin(theta[4]) * (r * Vec3::UnitZ());
  const Vec3 t = theta[5] * max_line_offset(dir, line) * dir;
  return {HalfSpace{n1, n1.dot(t)}, HalfSpace{n2, n2.dot(t)}};
}

}  // namespace synth_detail

/// Wedge of two planes sharing a line: planes z = 0 and
/// -sin(t1) x + cos(t1) z = 0 rotated by R(t2, t3, t4), then translated
/// orthogonally to the shared line by t6 * r_max(t5) in direction angle t5.
inline StencilConfig sample_two_planes(std::span<const double> theta) {
  synth_detail::require_params(theta, Family::TwoPlanes);
  StencilConfig cfg;
  cfg.kind = Family::TwoPlanes;
  cfg.halfspaces = synth_detail::two_plane_halfspaces(theta);
  cfg.raw_params.assign(theta.begin(), theta.end());
  synth_detail::require_mixed(cfg);
  return cfg;
}

/// Two-plane wedge from theta[0..5] cut by a third one-plane half-space from
/// theta[6..8]; the third half-space is complemented when it misses the
/// wedge inside the central cell.
inline StencilConfig sample_three_planes(std::span<const double> theta) {
  synth_detail::require_params(theta, Family::ThreePlanes);
  StencilConfig cfg;
  cfg.kind = Family::ThreePlanes;
  cfg.halfspaces = synth_detail::two_plane_halfspaces(theta.subspan(0, 6));
  const Vec3 n3 = archimedes_point(theta[6], theta[7]);
  cfg.halfspaces.push_back(HalfSpace{n3, theta[8] * n3.lpNorm<1>() / 2.0});
  cfg.raw_params.assign(theta.begin(), theta.end());
  if (central_fraction(cfg) <= kRejectTol) cfg.halfspaces[2] = cfg.halfspaces[2].flipped();
  synth_detail::require_mixed(cfg);
  return cfg;
}

/// Scale range [s_min, s_max] for an ellipsoid with center c and axis
/// direction magnitudes `dirs`: at s_min the surface first touches the
/// central cell boundary, at s_max the cell is just contained.
inline std::pair<double, double> ellipsoid_scale_range(const Vec3& c, const Vec3& dirs) {
  const bool center_inside = (c.cwiseAbs().array() < 0.5).all();
  double s_min;
  if (center_inside) {
    s_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) s_min = std::min(s_min, (0.5 - std::abs(c[k])) / dirs[k]);
  } else {
    const Vec3 nearest = c.cwiseMax(Vec3::Constant(-0.5)).cwiseMin(Vec3::Constant(0.5));
    s_min = (nearest - c).cwiseQuotient(dirs).norm();
  }
  double s_max = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 p((corner & 1) ? 0.5 : -0.5, (corner & 2) ? 0.5 : -0.5, (corner & 4) ? 0.5 : -0.5);
    s_max = std::max(s_max, (p - c).cwiseQuotient(dirs).norm());
  }
  return {s_min, s_max};
}

/// Ellipsoid with center theta[0..2], axis directions |archimedes(theta3, theta4)|
/// floored at 0.05, scaled linearly between s_min (theta5 = 0) and s_max
/// (theta5 = 1).
inline StencilConfig sample_ellipsoid(std::span<const double> theta, int points = kDefaultEllipsoidPoints) {
  synth_detail::require_params(theta, Family::Ellipsoid);
  const Vec3 c(theta[0], theta[1], theta[2]);
  const Vec3 dirs = archimedes_point(theta[3], theta[4]).cwiseAbs().cwiseMax(Vec3::Constant(kMinAxisDirection));
  const auto [s_min, s_max] = ellipsoid_scale_range(c, dirs);
  if (!(s_max > s_min) || !std::isfinite(s_max)) throw RejectedConfig("ellipsoid scale range is empty");
  if (theta[5] >= 1.0) throw RejectedConfig("central cell entirely inside the ellipsoid");
  const double s = s_min + theta[5] * (s_max - s_min);
  StencilConfig cfg = StencilConfig::from_ellipsoid(Ellipsoid{c, s * dirs}, points);
  cfg.raw_params.assign(theta.begin(), theta.end());
  synth_detail::require_mixed(cfg);
  return cfg;
}

inline StencilConfig sample_config(Family f, std::span<const double> theta,
                                   int ellipsoid_points = kDefaultEllipsoidPoints) {
  switch (f) {
    case Family::OnePlane: return sample_one_plane(theta);
    case Family::TwoPlanes: return sample_two_planes(theta);
    case Family::ThreePlanes: return sample_three_planes(theta);
    case Family::Ellipsoid: return sample_ellipsoid(theta, ellipsoid_points);
  }
  throw std::invalid_argument("unknown family");
}

}  // namespace vofml
