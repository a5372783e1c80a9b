#pragma once

#include <map>
#include <string>
#include <utility>

#include "vofml/geometry.hpp"

namespace checks {

/// Empty string when the polytope is planar, convex, closed and outward
/// oriented (tolerance 1e-9); otherwise a description of the first failure.
inline std::string validate(const vofml::ConvexPolytope& p, double tol = 1e-9) {
  using vofml::Vec3;
  if (p.empty()) return {};
  const Vec3 centroid = p.vertex_centroid();
  std::map<std::pair<int, int>, int> directed;
  for (std::size_t f = 0; f < p.faces.size(); ++f) {
    const auto& face = p.faces[f];
    if (face.size() < 3) return "face with fewer than 3 vertices";
    Vec3 normal = Vec3::Zero();
    for (std::size_t k = 0; k < face.size(); ++k) {
      const Vec3& a = p.vertices[face[k]];
      const Vec3& b = p.vertices[face[(k + 1) % face.size()]];
      normal += a.cross(b);
    }
    if (normal.norm() < 1e-300) return "zero-area face";
    normal.normalize();
    const double offset = normal.dot(p.vertices[face[0]]);
    for (int v : face)
      if (std::abs(normal.dot(p.vertices[v]) - offset) > tol) return "non-planar face " + std::to_string(f);
    for (const auto& v : p.vertices)
      if (normal.dot(v) - offset > tol) return "non-convex at face " + std::to_string(f);
    if (normal.dot(centroid) - offset > tol) return "inward-oriented face " + std::to_string(f);
    for (std::size_t k = 0; k < face.size(); ++k) {
      const auto key = std::make_pair(face[k], face[(k + 1) % face.size()]);
      if (++directed[key] > 1) return "directed edge used twice";
    }
  }
  for (const auto& [edge, count] : directed)
    if (!directed.count({edge.second, edge.first})) return "edge without a twin";
  return {};
}

}  // namespace checks
