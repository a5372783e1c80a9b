#pragma once

// Directionally split finite-volume advection of a volume fraction on a
// periodic N^3 Cartesian mesh.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vofml/flux.hpp"
#include "vofml/geometry.hpp"
#include "vofml/lattice.hpp"
#include "vofml/network.hpp"
#include "vofml/parallel.hpp"

namespace vofml {

class CflViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroSum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Mesh {
  int n = 0;
  Vec3 lo = Vec3::Zero();
  double extent = 1;
  double dx = 1;

  Mesh() = default;
  Mesh(int cells, const Vec3& lower, double length) : n(cells), lo(lower), extent(length), dx(length / cells) {
    if (cells < 3) throw std::invalid_argument("mesh needs at least 3 cells per direction");
    if (!(length > 0)) throw std::invalid_argument("mesh extent must be positive");
  }

  std::size_t cells() const { return static_cast<std::size_t>(n) * n * n; }
  int wrap(int i) const { return ((i % n) + n) % n; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(wrap(i)) + static_cast<std::size_t>(n) * (wrap(j) + static_cast<std::size_t>(n) * wrap(k));
  }
  Vec3 cell_center(int i, int j, int k) const { return lo + dx * Vec3(i + 0.5, j + 0.5, k + 0.5); }
};

struct FractionField {
  Mesh mesh;
  std::vector<double> values;
  double time = 0;

  FractionField() = default;
  explicit FractionField(const Mesh& m, double fill = 0) : mesh(m), values(m.cells(), fill) {}

  double& operator()(int i, int j, int k) { return values[mesh.index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return values[mesh.index(i, j, k)]; }

  double total() const {
    double s = 0;
    for (double v : values) s += v;
    return s;
  }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }
};

inline constexpr double kDefaultMarkEpsilon = 0.01;

enum class SchemeKind { Upwind, LimitedDownwind, Vofml };

struct FluxScheme {
  SchemeKind kind = SchemeKind::Upwind;
  std::shared_ptr<const NetworkWeights> weights;
  double eps_mark = kDefaultMarkEpsilon;

  static FluxScheme upwind() { return {}; }
  static FluxScheme limited_downwind() { return {SchemeKind::LimitedDownwind, nullptr, kDefaultMarkEpsilon}; }
  static FluxScheme vofml(std::shared_ptr<const NetworkWeights> w, double eps = kDefaultMarkEpsilon) {
    if (!w) throw std::invalid_argument("VOFML scheme needs network weights");
    if (!(eps > 0 && eps < 0.5)) throw std::invalid_argument("eps_mark must lie in (0, 0.5)");
    return {SchemeKind::Vofml, std::move(w), eps};
  }
};

inline std::string scheme_tag(SchemeKind k) {
  switch (k) {
    case SchemeKind::Upwind: return "uw";
    case SchemeKind::LimitedDownwind: return "ld";
    case SchemeKind::Vofml: return "vofml";
  }
  return "?";
}

struct VelocitySpec {
  std::function<Vec3(const Vec3&, double)> u;
  bool divergence_free = true;
  bool componentwise_derivative_free = false;
};

/// Mean of the indicator over the n_sub^3 midpoint sub-grid of every cell.
template <class Indicator>
FractionField init_fractions(Indicator&& inside, const Mesh& mesh, int n_sub) {
  if (n_sub < 1) throw std::invalid_argument("n_sub must be at least 1");
  FractionField f(mesh);
  const double h = mesh.dx / n_sub;
  const double inv = 1.0 / (static_cast<double>(n_sub) * n_sub * n_sub);
  parallel_for(static_cast<std::size_t>(mesh.n), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < mesh.n; ++j)
      for (int i = 0; i < mesh.n; ++i) {
        const Vec3 corner = mesh.lo + mesh.dx * Vec3(i, j, k);
        long count = 0;
        for (int c = 0; c < n_sub; ++c)
          for (int b = 0; b < n_sub; ++b)
            for (int a = 0; a < n_sub; ++a)
              count += inside(Vec3(corner.x() + (a + 0.5) * h, corner.y() + (b + 0.5) * h, corner.z() + (c + 0.5) * h));
        f(i, j, k) = count * inv;
      }
  });
  return f;
}

inline bool is_mixed(double alpha, double eps) { return alpha >= eps && alpha <= 1 - eps; }

inline std::vector<char> mark_mixed(const FractionField& f, double eps) {
  if (!(eps > 0 && eps < 0.5)) throw std::invalid_argument("eps_mark must lie in (0, 0.5)");
  std::vector<char> mask(f.values.size());
  for (std::size_t c = 0; c < mask.size(); ++c) mask[c] = is_mixed(f.values[c], eps);
  return mask;
}

inline double mixed_ratio(const FractionField& f, double eps = kDefaultMarkEpsilon) {
  std::size_t n = 0;
  for (double v : f.values) n += is_mixed(v, eps);
  return static_cast<double>(n) / f.values.size();
}

// ------------------------------------------------------------ sweeps

namespace solver_detail {

/// Global offset of each local stencil entry in the frame of a sweep.
inline const std::array<std::array<int, 3>, kStencilSize>& frame_offsets(int axis, bool negative) {
  static const auto table = [] {
    std::array<std::array<std::array<int, 3>, kStencilSize>, 6> t{};
    for (int a = 0; a < 3; ++a)
      for (int neg = 0; neg < 2; ++neg) {
        const LatticeMap q = sweep_frame(a, neg);
        for (int g = 0; g < kStencilSize; ++g) {
          const auto c = q.apply(stencil_offset(g));
          t[2 * a + neg][stencil_index(c[0], c[1], c[2])] = stencil_offset(g);
        }
      }
    return t;
  }();
  return table[2 * axis + (negative ? 1 : 0)];
}

inline Stencil gather(const FractionField& f, int i, int j, int k, int axis, bool negative) {
  const auto& off = frame_offsets(axis, negative);
  Stencil s;
  for (int l = 0; l < kStencilSize; ++l) s[l] = f(i + off[l][0], j + off[l][1], k + off[l][2]);
  return s;
}

// Face f of cell c lies between c and its +axis neighbour.
struct FaceFluxes {
  std::vector<double> beta;   // Courant number, >= 0
  std::vector<char> forward;  // flow towards +axis
  std::vector<double> flux;   // mean A-fraction of the swept slab
};

inline std::array<int, 3> cell_coords(const Mesh& m, std::size_t c) {
  const int n = m.n;
  return {static_cast<int>(c % n), static_cast<int>((c / n) % n), static_cast<int>(c / (static_cast<std::size_t>(n) * n))};
}

inline std::size_t neighbour(const Mesh& m, std::size_t c, int axis, int delta) {
  auto p = cell_coords(m, c);
  p[axis] += delta;
  return m.index(p[0], p[1], p[2]);
}

inline FaceFluxes face_fluxes(const FractionField& f, int axis, const VelocitySpec& vel, double t, double dt,
                              const FluxScheme& scheme) {
  const Mesh& m = f.mesh;
  const std::size_t nc = m.cells();
  FaceFluxes out;
  out.beta.resize(nc);
  out.forward.resize(nc);
  out.flux.assign(nc, 0.0);
  const double th = t + 0.5 * dt;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto p = cell_coords(m, c);
    Vec3 x = m.cell_center(p[0], p[1], p[2]);
    x[axis] += 0.5 * m.dx;
    const double u = vel.u(x, th)[axis];
    const double beta = std::abs(u) * dt / m.dx;
    if (!std::isfinite(beta) || beta > 1 + 1e-12)
      throw CflViolation("Courant number " + std::to_string(beta) + " exceeds 1 on axis " + std::to_string(axis));
    out.beta[c] = std::min(beta, 1.0);
    out.forward[c] = u >= 0;
  }
  // Total outflow Courant number of each donor cell along this axis.
  std::vector<double> outflow(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t donor = out.forward[c] ? c : neighbour(m, c, axis, 1);
    outflow[donor] += out.beta[c];
  }
  const std::vector<char> marked =
      scheme.kind == SchemeKind::Vofml ? mark_mixed(f, scheme.eps_mark) : std::vector<char>{};
  std::vector<std::size_t> net_faces;
  std::vector<Stencil> net_stencils;
  for (std::size_t c = 0; c < nc; ++c) {
    const double beta = out.beta[c];
    if (beta == 0) continue;
    const std::size_t donor = out.forward[c] ? c : neighbour(m, c, axis, 1);
    const double alpha = f.values[donor];
    const double bound_beta = outflow[donor];
    if (scheme.kind == SchemeKind::Upwind) {
      out.flux[c] = alpha;
      continue;
    }
    const auto p = cell_coords(m, donor);
    const std::size_t downwind = neighbour(m, donor, axis, out.forward[c] ? 1 : -1);
    if (scheme.kind == SchemeKind::Vofml && marked[donor]) {
      net_faces.push_back(c);
      net_stencils.push_back(gather(f, p[0], p[1], p[2], axis, !out.forward[c]));
      continue;
    }
    out.flux[c] = project(f.values[downwind], alpha, bound_beta);
  }
  if (!net_faces.empty()) {
    // Chunks are independent; each worker writes its own slots.
    constexpr std::size_t chunk = 1024;
    const std::size_t nchunks = (net_faces.size() + chunk - 1) / chunk;
    parallel_for(nchunks, [&](std::size_t q) {
      const std::size_t s = q * chunk, e = std::min(net_faces.size(), s + chunk);
      const auto pred = wrapped_forward_many(
          *scheme.weights, e - s, [&](std::size_t i) -> const Stencil& { return net_stencils[s + i]; },
          [&](std::size_t i) { return out.beta[net_faces[s + i]]; }, chunk);
      for (std::size_t i = s; i < e; ++i) {
        const std::size_t c = net_faces[i];
        const std::size_t donor = out.forward[c] ? c : neighbour(m, c, axis, 1);
        out.flux[c] = project(pred[i - s], f.values[donor], outflow[donor]);
      }
    });
  }
  return out;
}

/// α_new = (α − Σ_out β F) + Σ_in β F, outflows first.
inline std::vector<double> apply_fluxes(const FractionField& f, int axis, const FaceFluxes& ff, bool complement) {
  const Mesh& m = f.mesh;
  const std::size_t nc = m.cells();
  std::vector<double> out(nc);
  for (std::size_t c = 0; c < nc; ++c) out[c] = complement ? 1.0 - f.values[c] : f.values[c];
  auto amount = [&](std::size_t face) {
    const double F = complement ? 1.0 - ff.flux[face] : ff.flux[face];
    return ff.beta[face] * F;
  };
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t left_face = neighbour(m, c, axis, -1);
    if (ff.forward[c]) out[c] -= amount(c);
    if (!ff.forward[left_face]) out[c] -= amount(left_face);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t left_face = neighbour(m, c, axis, -1);
    if (ff.forward[left_face]) out[c] += amount(left_face);
    if (!ff.forward[c]) out[c] += amount(c);
  }
  return out;
}

}  // namespace solver_detail

inline FractionField sweep(const FractionField& f, int axis, const VelocitySpec& vel, double t, double dt,
                           const FluxScheme& scheme) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("sweep axis must be 0, 1 or 2");
  const auto ff = solver_detail::face_fluxes(f, axis, vel, t, dt, scheme);
  FractionField out = f;
  out.values = solver_detail::apply_fluxes(f, axis, ff, false);
  return out;
}

/// Sweep of the two-species system (A with flux F, B = 1 − A with flux
/// 1 − F), renormalized so that the fractions sum to one.
inline FractionField sweep_renormalized(const FractionField& f, int axis, const VelocitySpec& vel, double t,
                                        double dt, const FluxScheme& scheme) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("sweep axis must be 0, 1 or 2");
  const auto ff = solver_detail::face_fluxes(f, axis, vel, t, dt, scheme);
  const auto a = solver_detail::apply_fluxes(f, axis, ff, false);
  const auto b = solver_detail::apply_fluxes(f, axis, ff, true);
  FractionField out = f;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double sum = a[c] + b[c];
    if (!(sum >= 1e-14)) throw ZeroSum("vanishing species sum in cell " + std::to_string(c));
    out.values[c] = a[c] / sum;
  }
  return out;
}

using SweepObserver = std::function<void(const FractionField&, int axis)>;

namespace solver_detail {

inline std::array<int, 3> sweep_order(bool cycle, long step_number) {
  if (!cycle) return {0, 1, 2};
  const int s = static_cast<int>(((step_number % 3) + 3) % 3);
  return {s, (s + 1) % 3, (s + 2) % 3};
}

}  // namespace solver_detail

struct StepOptions {
  bool cycle_order = false;
  long step_number = 0;
  SweepObserver after_sweep;
};

/// x, y, z sweeps; time advances by dt.
inline FractionField step(const FractionField& f, const VelocitySpec& vel, double t, double dt,
                          const FluxScheme& scheme, const StepOptions& opt = {}) {
  FractionField cur = f;
  for (int axis : solver_detail::sweep_order(opt.cycle_order, opt.step_number)) {
    cur = sweep(cur, axis, vel, t, dt, scheme);
    if (opt.after_sweep) opt.after_sweep(cur, axis);
  }
  cur.time = t + dt;
  return cur;
}

/// As step(), with the two-species renormalization after each sweep. The
/// stored field is α_A; α_B is 1 − α_A by definition.
inline FractionField step_renormalized(const FractionField& f, const VelocitySpec& vel, double t, double dt,
                                       const FluxScheme& scheme, const StepOptions& opt = {}) {
  FractionField cur = f;
  for (int axis : solver_detail::sweep_order(opt.cycle_order, opt.step_number)) {
    cur = sweep_renormalized(cur, axis, vel, t, dt, scheme);
    if (opt.after_sweep) opt.after_sweep(cur, axis);
  }
  cur.time = t + dt;
  return cur;
}

}  // namespace vofml
