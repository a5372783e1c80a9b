#pragma once

// Signed axis permutations of the 3x3x3 stencil and the induced
// permutations of its 27 volume fractions.

#include <array>
#include <span>
#include <vector>

#include "vofml/geometry.hpp"

namespace vofml {

inline constexpr int kStencilWidth = 3;
inline constexpr int kStencilSize = 27;
inline constexpr int kCentralCell = 13;
inline constexpr int kDownwindCell = 14;

/// Flat index of the stencil cell at offset (i, j, k) in {-1,0,1}^3, x fastest.
constexpr int stencil_index(int i, int j, int k) { return (i + 1) + 3 * (j + 1) + 9 * (k + 1); }

constexpr std::array<int, 3> stencil_offset(int idx) {
  return {idx % 3 - 1, (idx / 3) % 3 - 1, idx / 9 - 1};
}

using Stencil = std::array<double, kStencilSize>;

/// Orthogonal map of the lattice: (Q p)_r = sign[r] * p[axis[r]].
struct LatticeMap {
  std::array<int, 3> axis{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};

  static LatticeMap identity() { return {}; }
  /// (x, y, z) -> (z, x, y).
  static LatticeMap cycle() { return {{2, 0, 1}, {1, 1, 1}}; }
  /// x -> -x.
  static LatticeMap reflect_x() { return {{0, 1, 2}, {-1, 1, 1}}; }

  Vec3 apply(const Vec3& p) const {
    return {sign[0] * p[axis[0]], sign[1] * p[axis[1]], sign[2] * p[axis[2]]};
  }
  std::array<int, 3> apply(const std::array<int, 3>& c) const {
    return {sign[0] * c[axis[0]], sign[1] * c[axis[1]], sign[2] * c[axis[2]]};
  }

  Mat3 matrix() const {
    Mat3 m = Mat3::Zero();
    for (int r = 0; r < 3; ++r) m(r, axis[r]) = sign[r];
    return m;
  }

  /// (this ∘ other)(p) = this(other(p)).
  LatticeMap compose(const LatticeMap& other) const {
    LatticeMap out;
    for (int r = 0; r < 3; ++r) {
      out.axis[r] = other.axis[axis[r]];
      out.sign[r] = sign[r] * other.sign[axis[r]];
    }
    return out;
  }

  LatticeMap inverse() const {
    LatticeMap out;
    for (int r = 0; r < 3; ++r) {
      out.axis[axis[r]] = r;
      out.sign[axis[r]] = sign[r];
    }
    return out;
  }

  bool operator==(const LatticeMap&) const = default;
};

/// Permutation of stencil entries: (σx)[dst] = x[source[dst]].
struct StencilPermutation {
  std::array<int, kStencilSize> source{};

  static StencilPermutation from_map(const LatticeMap& q) {
    StencilPermutation p;
    for (int idx = 0; idx < kStencilSize; ++idx) {
      const auto c = q.apply(stencil_offset(idx));
      p.source[stencil_index(c[0], c[1], c[2])] = idx;
    }
    return p;
  }

  template <class T>
  std::array<T, kStencilSize> apply(const std::array<T, kStencilSize>& x) const {
    std::array<T, kStencilSize> y;
    for (int d = 0; d < kStencilSize; ++d) y[d] = x[source[d]];
    return y;
  }

  /// (this ∘ other)x = this(other(x)).
  StencilPermutation compose(const StencilPermutation& other) const {
    StencilPermutation out;
    for (int d = 0; d < kStencilSize; ++d) out.source[d] = other.source[source[d]];
    return out;
  }

  bool operator==(const StencilPermutation&) const = default;
};

/// Axis reorderings (identity and the two cyclic rotations) combined with
/// the reflection orthogonal to the flux axis: 6 maps, index = 2*cycle + refl.
/// The exact x-flux may change under these.
inline const std::array<LatticeMap, 6>& augmentation_maps() {
  static const std::array<LatticeMap, 6> maps = [] {
    std::array<LatticeMap, 6> m;
    LatticeMap c = LatticeMap::identity();
    for (int k = 0; k < 3; ++k) {
      m[2 * k] = c;
      m[2 * k + 1] = c.compose(LatticeMap::reflect_x());
      c = LatticeMap::cycle().compose(c);
    }
    return m;
  }();
  return maps;
}

/// The 8 maps fixing the x axis pointwise-direction: dihedral group of the
/// (y, z) plane. The exact x-flux is invariant under these.
inline const std::array<LatticeMap, 8>& flux_preserving_maps() {
  static const std::array<LatticeMap, 8> maps = [] {
    std::array<LatticeMap, 8> m;
    int n = 0;
    for (int swap = 0; swap < 2; ++swap)
      for (int sy : {1, -1})
        for (int sz : {1, -1}) {
          LatticeMap q;
          q.axis = swap ? std::array<int, 3>{0, 2, 1} : std::array<int, 3>{0, 1, 2};
          q.sign = {1, sy, sz};
          m[n++] = q;
        }
    return m;
  }();
  return maps;
}

/// Frame that maps sweep axis `axis` onto +x (proper rotation), optionally
/// followed by the x reflection for negative velocities.
inline LatticeMap sweep_frame(int axis, bool negative) {
  LatticeMap q = LatticeMap::identity();
  if (axis == 1) q = LatticeMap::cycle().compose(LatticeMap::cycle());
  if (axis == 2) q = LatticeMap::cycle();
  if (negative) q = LatticeMap::reflect_x().compose(q);
  return q;
}

}  // namespace vofml
