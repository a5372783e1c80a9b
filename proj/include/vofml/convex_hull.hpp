#pragma once

// Quickhull in 3D: triangulated convex hull of a point set.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "vofml/geometry.hpp"

namespace vofml {

namespace hull_detail {

struct Face {
  std::array<int, 3> v{};
  Vec3 normal;
  double offset = 0.0;
  std::vector<int> outside;
  bool alive = true;

  double distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

inline std::uint64_t directed(int a, int b) {
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

}  // namespace hull_detail

/// Returns outward (CCW) triangles of the hull. Points strictly inside the
/// hull are skipped; throws HullFailure for flat or degenerate inputs.
inline std::vector<std::array<int, 3>> convex_hull(const std::vector<Vec3>& pts) {
  using hull_detail::Face;
  const int n = int(pts.size());
  if (n < 4) throw HullFailure("convex hull needs at least 4 points");

  Vec3 lo, hi;
  lo = hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = (hi - lo).maxCoeff();
  if (!(scale > 0.0)) throw HullFailure("all points coincide");
  const double eps = 1e-12 * scale;

  // Initial simplex: extreme pair, farthest from line, farthest from plane.
  int i0 = 0, i1 = 0;
  {
    double best = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
      int a = 0, b = 0;
      for (int i = 1; i < n; ++i) {
        if (pts[i][axis] < pts[a][axis]) a = i;
        if (pts[i][axis] > pts[b][axis]) b = i;
      }
      const double d = (pts[b] - pts[a]).squaredNorm();
      if (d > best) best = d, i0 = a, i1 = b;
    }
  }
  int i2 = -1;
  {
    const Vec3 dir = (pts[i1] - pts[i0]).normalized();
    double best = eps;
    for (int i = 0; i < n; ++i) {
      const Vec3 r = pts[i] - pts[i0];
      const double d = (r - r.dot(dir) * dir).norm();
      if (d > best) best = d, i2 = i;
    }
  }
  if (i2 < 0) throw HullFailure("points are collinear");
  int i3 = -1;
  const Vec3 base_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  {
    double best = eps;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(base_n.dot(pts[i] - pts[i0]));
      if (d > best) best = d, i3 = i;
    }
  }
  if (i3 < 0) throw HullFailure("points are coplanar");

  std::vector<Face> faces;
  std::unordered_map<std::uint64_t, int> edge_owner;

  auto make_face = [&](int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    f.normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = f.normal.norm();
    if (!(len > 0.0)) throw HullFailure("zero-area hull facet");
    f.normal /= len;
    f.offset = f.normal.dot(pts[a]);
    const int id = int(faces.size());
    edge_owner[hull_detail::directed(a, b)] = id;
    edge_owner[hull_detail::directed(b, c)] = id;
    edge_owner[hull_detail::directed(c, a)] = id;
    faces.push_back(std::move(f));
    return id;
  };

  if (base_n.dot(pts[i3] - pts[i0]) > 0.0) std::swap(i1, i2);
  make_face(i0, i1, i2);
  make_face(i0, i3, i1);
  make_face(i1, i3, i2);
  make_face(i2, i3, i0);

  {
    for (int i = 0; i < n; ++i) {
      if (i == i0 || i == i1 || i == i2 || i == i3) continue;
      int best_face = -1;
      double best = eps;
      for (int f = 0; f < 4; ++f) {
        const double d = faces[f].distance(pts[i]);
        if (d > best) best = d, best_face = f;
      }
      if (best_face >= 0) faces[best_face].outside.push_back(i);
    }
  }

  std::vector<int> stack;
  std::vector<int> visible;
  std::vector<char> is_visible;
  std::vector<std::pair<int, int>> horizon;
  std::vector<int> orphans;

  for (std::size_t cursor = 0; cursor < faces.size(); ++cursor) {
    if (!faces[cursor].alive || faces[cursor].outside.empty()) continue;

    const Face& seed = faces[cursor];
    int apex = seed.outside.front();
    double far = -1.0;
    for (int p : seed.outside) {
      const double d = seed.distance(pts[p]);
      if (d > far) far = d, apex = p;
    }

    // Flood-fill the faces visible from the apex.
    visible.clear();
    is_visible.assign(faces.size(), 0);
    stack.assign(1, int(cursor));
    is_visible[cursor] = 1;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      visible.push_back(f);
      for (int k = 0; k < 3; ++k) {
        const int a = faces[f].v[k], b = faces[f].v[(k + 1) % 3];
        const auto it = edge_owner.find(hull_detail::directed(b, a));
        if (it == edge_owner.end()) throw HullFailure("open hull surface");
        const int g = it->second;
        if (is_visible[g]) continue;
        if (faces[g].distance(pts[apex]) > eps) {
          is_visible[g] = 1;
          stack.push_back(g);
        }
      }
    }

    horizon.clear();
    for (int f : visible) {
      for (int k = 0; k < 3; ++k) {
        const int a = faces[f].v[k], b = faces[f].v[(k + 1) % 3];
        const int g = edge_owner.at(hull_detail::directed(b, a));
        if (!is_visible[g]) horizon.emplace_back(a, b);
      }
    }

    orphans.clear();
    for (int f : visible) {
      Face& face = faces[f];
      face.alive = false;
      for (int p : face.outside)
        if (p != apex) orphans.push_back(p);
      face.outside.clear();
      face.outside.shrink_to_fit();
      for (int k = 0; k < 3; ++k) {
        const auto key = hull_detail::directed(face.v[k], face.v[(k + 1) % 3]);
        const auto it = edge_owner.find(key);
        if (it != edge_owner.end() && it->second == f) edge_owner.erase(it);
      }
    }

    const int first_new = int(faces.size());
    for (const auto& [a, b] : horizon) make_face(a, b, apex);
    const int last_new = int(faces.size());

    for (int p : orphans) {
      int best_face = -1;
      double best = eps;
      for (int f = first_new; f < last_new; ++f) {
        const double d = faces[f].distance(pts[p]);
        if (d > best) best = d, best_face = f;
      }
      if (best_face >= 0) faces[best_face].outside.push_back(p);
    }
  }

  std::vector<std::array<int, 3>> tris;
  for (const auto& f : faces)
    if (f.alive) tris.push_back(f.v);
  return tris;
}

/// Polytope with hull faces of `pts`, vertex indices compacted.
inline ConvexPolytope hull_polytope(const std::vector<Vec3>& pts) {
  const auto tris = convex_hull(pts);
  std::vector<int> remap(pts.size(), -1);
  ConvexPolytope poly;
  poly.faces.reserve(tris.size());
  for (const auto& t : tris) {
    std::vector<int> f(3);
    for (int k = 0; k < 3; ++k) {
      int& r = remap[t[k]];
      if (r < 0) {
        r = int(poly.vertices.size());
        poly.vertices.push_back(pts[t[k]]);
      }
      f[k] = r;
    }
    poly.faces.push_back(std::move(f));
  }
  return poly;
}

/// Hull of the n-point spiral on the unit sphere, memoized per n.
inline std::shared_ptr<const ConvexPolytope> unit_sphere_polytope(int n) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const ConvexPolytope>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const ConvexPolytope>(hull_polytope(fibonacci_sphere(n)));
  return slot;
}

/// Inscribed polytope of an ellipsoid: hull of n spiral points, mapped by
/// p -> center + diag(semi_axes) p. The hull is built on the unit sphere
/// since affine maps preserve hull combinatorics.
inline ConvexPolytope ellipsoid_polytope(const Ellipsoid& e, int n) {
  if (n < 4) throw HullFailure("ellipsoid polytope needs at least 4 points");
  if ((e.semi_axes.array() <= 1e-8).any()) throw HullFailure("degenerate ellipsoid semi-axes");
  ConvexPolytope unit = *unit_sphere_polytope(n);
  for (auto& v : unit.vertices) v = e.center + e.semi_axes.cwiseProduct(v);
  return unit;
}

}  // namespace vofml
