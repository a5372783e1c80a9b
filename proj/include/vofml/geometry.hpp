#pragma once

// Exact convex geometry on small polytopes: half-space clipping, volumes,
// sphere sampling and the rotations used to build stencil configurations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace vofml {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Coordinates closer than this (in stencil-cell units) are considered equal.
inline constexpr double kMergeTol = 1e-12;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateClip : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class HullFailure : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Open region { p : normal . p - offset < 0 } with a unit normal.
struct HalfSpace {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;

  /// Builds a half-space from an arbitrary non-zero normal, rescaling the
  /// offset so the region is unchanged.
  static HalfSpace from_unnormalized(const Vec3& n, double d) {
    const double len = n.norm();
    if (!(len > 0.0)) throw GeometryError("half-space normal has zero length");
    return {n / len, d / len};
  }

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
  bool contains(const Vec3& p) const { return signed_distance(p) < 0.0; }

  /// The complementary half-space through the same plane.
  HalfSpace flipped() const { return {-normal, -offset}; }
};

/// Bounded convex region stored as vertices plus outward-oriented (CCW seen
/// from outside) face cycles. An object without faces is the empty set.
struct ConvexPolytope {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;

  bool empty() const { return faces.empty(); }

  Vec3 vertex_centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& v : vertices) c += v;
    return vertices.empty() ? c : Vec3(c / double(vertices.size()));
  }

  void bounds(Vec3& lo, Vec3& hi) const {
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  ConvexPolytope transformed(const Mat3& m, const Vec3& shift = Vec3::Zero()) const {
    ConvexPolytope out;
    out.vertices.reserve(vertices.size());
    for (const auto& v : vertices) out.vertices.push_back(m * v + shift);
    out.faces = faces;
    // An improper map reverses the orientation of every face cycle.
    if (m.determinant() < 0.0)
      for (auto& f : out.faces) std::reverse(f.begin(), f.end());
    return out;
  }
};

/// Axis-aligned box [lo, hi].
inline ConvexPolytope box(const Vec3& lo, const Vec3& hi) {
  ConvexPolytope p;
  p.vertices.reserve(8);
  for (int i = 0; i < 8; ++i) {
    p.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  p.faces = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
             {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  return p;
}

inline ConvexPolytope unit_cube(const Vec3& center, double edge) {
  if (!(edge > 0.0)) throw GeometryError("cube edge must be positive");
  const Vec3 h = Vec3::Constant(0.5 * edge);
  return box(center - h, center + h);
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

// Orders coplanar points counter-clockwise around `normal`, dropping
// near-duplicates. Returns indices into `pts`.
inline std::vector<int> order_cap(const std::vector<Vec3>& pts, const std::vector<int>& ids,
                                  const Vec3& normal) {
  std::vector<int> uniq;
  uniq.reserve(ids.size());
  for (int id : ids) {
    bool dup = false;
    for (int u : uniq)
      if ((pts[u] - pts[id]).cwiseAbs().maxCoeff() <= kMergeTol) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(id);
  }
  if (uniq.size() < 3) return {};
  Vec3 c = Vec3::Zero();
  for (int u : uniq) c += pts[u];
  c /= double(uniq.size());
  const Vec3 ref = (std::abs(normal.x()) < 0.9) ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = normal.cross(ref).normalized();
  const Vec3 v = normal.cross(u);
  std::vector<std::pair<double, int>> keyed;
  keyed.reserve(uniq.size());
  for (int id : uniq) {
    const Vec3 d = pts[id] - c;
    keyed.emplace_back(std::atan2(d.dot(v), d.dot(u)), id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  out.reserve(keyed.size());
  for (const auto& [angle, id] : keyed) out.push_back(id);
  return out;
}

}  // namespace detail

/// poly ∩ {normal.p - offset <= 0}. Throws DegenerateClip when the plane
/// separates vertices but no cap polygon can be formed.
inline ConvexPolytope clip_checked(const ConvexPolytope& poly, const HalfSpace& h) {
  if (poly.empty()) return poly;
  const std::size_t n = poly.vertices.size();
  std::vector<double> dist(n);
  bool any_out = false, any_in = false;
  for (std::size_t i = 0; i < n; ++i) {
    double d = h.signed_distance(poly.vertices[i]);
    if (std::abs(d) <= kMergeTol) d = 0.0;
    dist[i] = d;
    any_out |= d > 0.0;
    any_in |= d < 0.0;
  }
  if (!any_out) return poly;
  if (!any_in) return {};

  ConvexPolytope out;
  std::vector<int> remap(n, -1);
  std::vector<int> cap;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] <= 0.0) {
      remap[i] = int(out.vertices.size());
      out.vertices.push_back(poly.vertices[i]);
      if (dist[i] == 0.0) cap.push_back(remap[i]);
    }
  }

  std::unordered_map<std::uint64_t, int> cut_points;
  auto cut_point = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    if (auto it = cut_points.find(key); it != cut_points.end()) return it->second;
    if (a > b) std::swap(a, b);
    const double t = dist[a] / (dist[a] - dist[b]);
    const int id = int(out.vertices.size());
    out.vertices.push_back(poly.vertices[a] + t * (poly.vertices[b] - poly.vertices[a]));
    cap.push_back(id);
    cut_points.emplace(key, id);
    return id;
  };

  out.faces.reserve(poly.faces.size() + 1);
  std::vector<int> nf;
  for (const auto& face : poly.faces) {
    nf.clear();
    const std::size_t m = face.size();
    for (std::size_t k = 0; k < m; ++k) {
      const int a = face[k];
      const int b = face[(k + 1) % m];
      if (dist[a] <= 0.0) nf.push_back(remap[a]);
      if ((dist[a] < 0.0 && dist[b] > 0.0) || (dist[a] > 0.0 && dist[b] < 0.0))
        nf.push_back(cut_point(a, b));
    }
    if (nf.size() >= 3) out.faces.push_back(nf);
  }

  auto cap_face = detail::order_cap(out.vertices, cap, h.normal);
  if (cap_face.empty()) throw DegenerateClip("plane separates vertices but cap is degenerate");
  out.faces.push_back(std::move(cap_face));
  return out;
}

/// As clip_checked, but a degenerate cut resolves to the whole polytope or
/// the empty set according to the side of the vertex centroid.
inline ConvexPolytope clip(const ConvexPolytope& poly, const HalfSpace& h) {
  try {
    return clip_checked(poly, h);
  } catch (const DegenerateClip&) {
    if (h.signed_distance(poly.vertex_centroid()) <= 0.0) return poly;
    return {};
  }
}

inline ConvexPolytope clip(ConvexPolytope poly, std::initializer_list<HalfSpace> hs) {
  for (const auto& h : hs) {
    if (poly.empty()) break;
    poly = clip(poly, h);
  }
  return poly;
}

/// The six inward constraints of the box [lo, hi].
inline std::array<HalfSpace, 6> box_halfspaces(const Vec3& lo, const Vec3& hi) {
  return {HalfSpace{-Vec3::UnitX(), -lo.x()}, HalfSpace{Vec3::UnitX(), hi.x()},
          HalfSpace{-Vec3::UnitY(), -lo.y()}, HalfSpace{Vec3::UnitY(), hi.y()},
          HalfSpace{-Vec3::UnitZ(), -lo.z()}, HalfSpace{Vec3::UnitZ(), hi.z()}};
}

inline ConvexPolytope clip_to_box(ConvexPolytope poly, const Vec3& lo, const Vec3& hi) {
  for (const auto& h : box_halfspaces(lo, hi)) {
    if (poly.empty()) break;
    poly = clip(poly, h);
  }
  return poly;
}

/// Divergence-theorem volume over fan-triangulated faces.
inline double volume(const ConvexPolytope& poly) {
  if (poly.empty()) return 0.0;
  const Vec3 o = poly.vertices.front();
  double six_v = 0.0;
  for (const auto& f : poly.faces) {
    const Vec3 a = poly.vertices[f[0]] - o;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) {
      const Vec3 b = poly.vertices[f[k]] - o;
      const Vec3 c = poly.vertices[f[k + 1]] - o;
      six_v += a.dot(b.cross(c));
    }
  }
  return std::max(0.0, six_v / 6.0);
}

/// Quasi-uniform spiral points on the unit sphere: phi_i = 2 pi i / golden,
/// theta_i = acos(1 - (2i+1)/n).
inline std::vector<Vec3> fibonacci_sphere(int n) {
  if (n < 2) throw GeometryError("fibonacci_sphere needs at least 2 points");
  const double golden = (std::sqrt(5.0) + 1.0) / 2.0;
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / golden;
    const double theta = std::acos(1.0 - (2.0 * i + 1.0) / n);
    const double s = std::sin(theta);
    pts.emplace_back(std::cos(phi) * s, std::sin(phi) * s, std::cos(theta));
  }
  return pts;
}

/// Cylinder-to-sphere projection: uniform (angle, height) maps to a uniform
/// point on the unit sphere.
inline Vec3 archimedes_point(double angle, double height) {
  const double r = std::sqrt(std::max(0.0, 1.0 - height * height));
  return {r * std::cos(angle), r * std::sin(angle), height};
}

inline Mat3 rotation_x(double t) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
  return m;
}

inline Mat3 rotation_y(double t) {
  Mat3 m;
  m << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return m;
}

inline Mat3 rotation_z(double t) {
  Mat3 m;
  m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return m;
}

/// R = Rx(ax) Ry(ay) Rz(az).
inline Mat3 rotation(double ax, double ay, double az) {
  return rotation_x(ax) * rotation_y(ay) * rotation_z(az);
}

struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();

  /// s(p) = sum ((p - c)_k / a_k)^2 - 1; negative inside.
  double level(const Vec3& p) const {
    return (p - center).cwiseQuotient(semi_axes).squaredNorm() - 1.0;
  }
  bool contains(const Vec3& p) const { return level(p) < 0.0; }
  double volume() const {
    return 4.0 * std::numbers::pi / 3.0 * semi_axes.prod();
  }
};

}  // namespace vofml
