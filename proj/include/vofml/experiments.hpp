#pragma once

// The three advection benchmarks: initial regions, velocity fields, runs
// with error / mixed-cell tracking, convergence fits and CSV reports.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vofml/solver.hpp"

namespace vofml {

class InsufficientPoints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// R0 = Rz(π/9)·Ry(π/7)·Rx(π/5).
inline Mat3 initial_rotation() {
  constexpr double pi = std::numbers::pi;
  return rotation_z(pi / 9) * rotation_y(pi / 7) * rotation_x(pi / 5);
}

struct TestCase {
  int id = 1;
  Vec3 lo = Vec3::Zero();
  double extent = 1;
  double final_time = 1;
  bool renormalized = false;
  std::function<bool(const Vec3&)> inside;
  VelocitySpec velocity;

  Vec3 center() const { return lo + Vec3::Constant(0.5 * extent); }
};

namespace experiments_detail {

inline bool zalesak(const Vec3& p) {
  const bool sphere = p.squaredNorm() < 0.4 * 0.4;
  const bool slot = std::abs(p.x()) < 0.2 && std::abs(p.y()) < 0.2 && p.z() < 0;
  return sphere && !slot;
}

inline bool sphere_and_bars(const Vec3& q) {
  const Vec3 p = q - Vec3::Constant(0.5);
  const Vec3 a = p.cwiseAbs();
  return p.squaredNorm() < 0.2 * 0.2 || (a.x() < 0.3 && a.y() < 0.075 && a.z() < 0.075) ||
         (a.x() < 0.075 && a.y() < 0.3 && a.z() < 0.075) || (a.x() < 0.075 && a.y() < 0.075 && a.z() < 0.3);
}

/// Region R rotated by R0 about `center`: p ∈ R̂ iff R0ᵀ(p − c) + c ∈ R.
template <class Region>
std::function<bool(const Vec3&)> rotated(Region region, const Vec3& center) {
  const Mat3 rt = initial_rotation().transpose();
  return [=](const Vec3& p) { return region(Vec3(rt * (p - center) + center)); };
}

}  // namespace experiments_detail

inline std::function<bool(const Vec3&)> initial_condition(int test) {
  switch (test) {
    case 1: return experiments_detail::rotated(experiments_detail::zalesak, Vec3::Zero());
    case 2: return experiments_detail::rotated(experiments_detail::sphere_and_bars, Vec3::Constant(0.5));
    case 3:
      return [](const Vec3& p) { return (p - Vec3::Constant(0.35)).squaredNorm() < 0.15 * 0.15; };
  }
  throw std::invalid_argument("test id must be 1, 2 or 3");
}

inline VelocitySpec velocity_field(int test) {
  constexpr double pi = std::numbers::pi;
  VelocitySpec v;
  switch (test) {
    case 1:
      v.u = [](const Vec3&, double) { return Vec3(1, 2, 3); };
      v.componentwise_derivative_free = true;
      return v;
    case 2: {
      constexpr double T = 1;
      v.u = [](const Vec3& p, double t) {
        const double x = p.x(), y = p.y(), z = p.z(), c = std::cos(pi * t / T);
        auto s = [](double a) { return std::sin(2 * pi * a); };
        return Vec3(25 * s(y) * s(y) * s(z) * y * (y - 1) * z * (z - 1) * c,
                    25 * s(z) * s(z) * s(x) * z * (z - 1) * x * (x - 1) * c,
                    25 * s(x) * s(x) * s(y) * x * (x - 1) * y * (y - 1) * c);
      };
      v.componentwise_derivative_free = true;
      return v;
    }
    case 3: {
      constexpr double T = 2;
      v.u = [](const Vec3& p, double t) {
        const double c = std::cos(pi * t / T);
        auto s1 = [](double a) { return std::sin(pi * a); };
        auto s2 = [](double a) { return std::sin(2 * pi * a); };
        const double x = p.x(), y = p.y(), z = p.z();
        return Vec3(2 * s1(x) * s1(x) * s2(y) * s2(z) * c, -s1(y) * s1(y) * s2(x) * s2(z) * c,
                    -s1(z) * s1(z) * s2(x) * s2(y) * c);
      };
      v.componentwise_derivative_free = false;
      return v;
    }
  }
  throw std::invalid_argument("test id must be 1, 2 or 3");
}

inline TestCase test_case(int test) {
  TestCase tc;
  tc.id = test;
  tc.inside = initial_condition(test);
  tc.velocity = velocity_field(test);
  switch (test) {
    case 1:
      tc.lo = Vec3::Constant(-1);
      tc.extent = 2;
      tc.final_time = 2;
      break;
    case 2: tc.final_time = 1; break;
    case 3:
      tc.final_time = 2;
      tc.renormalized = true;
      break;
  }
  return tc;
}

inline std::vector<int> desk_meshes() { return {10, 14, 20, 27, 38}; }
inline std::vector<int> full_meshes() { return {10, 14, 20, 27, 38, 54, 75, 105}; }

struct StepRecord {
  long step = 0;
  double time = 0;
  double rmix = 0;
  double mass = 0;
  double max = 0;
  double min = 0;
};

struct RunReport {
  int test = 1;
  std::string scheme;
  int nh = 0;
  long steps = 0;
  double dt = 0;
  double error = 0;  // relative L1 against the initial field
  double rmix_initial = 0;
  double rmix_final = 0;
  double rmix_ratio = 0;
  double wall_seconds = 0;
  double max_mass_drift = 0;      // max over steps of |M_{n+1} − M_n| / M_0
  double min_value = 0, max_value = 0;  // over every intermediate sweep
  double max_sum_defect = 0;      // max |α_A + α_B − 1| after sweeps
  std::vector<StepRecord> history;
};

struct RunOptions {
  int n_sub = 10;
  double cfl_factor = 0.1;  // Δt = cfl_factor · Δx (before rounding to reach T exactly)
  bool cycle_order = false;
  SweepObserver after_sweep;
  std::function<void(const StepRecord&)> on_step;
};

inline double relative_l1(const FractionField& a, const FractionField& ref) {
  double num = 0, den = 0;
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    num += std::abs(a.values[c] - ref.values[c]);
    den += std::abs(ref.values[c]);
  }
  return num / den;
}

inline RunReport run(const TestCase& tc, const FluxScheme& scheme, int nh, const RunOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mesh mesh(nh, tc.lo, tc.extent);
  const FractionField initial = init_fractions(tc.inside, mesh, opt.n_sub);
  RunReport r;
  r.test = tc.id;
  r.scheme = scheme_tag(scheme.kind);
  r.nh = nh;
  r.steps = static_cast<long>(std::ceil(tc.final_time / (opt.cfl_factor * mesh.dx) - 1e-9));
  r.dt = tc.final_time / r.steps;
  r.rmix_initial = mixed_ratio(initial);
  r.min_value = initial.min();
  r.max_value = initial.max();
  const double mass0 = initial.total();

  auto record = [&](const FractionField& f, long step) {
    StepRecord s{step, f.time, mixed_ratio(f), f.total() * std::pow(mesh.dx, 3), f.max(), f.min()};
    r.history.push_back(s);
    if (opt.on_step) opt.on_step(s);
  };
  record(initial, 0);

  StepOptions so;
  so.cycle_order = opt.cycle_order;
  so.after_sweep = [&](const FractionField& f, int axis) {
    r.min_value = std::min(r.min_value, f.min());
    r.max_value = std::max(r.max_value, f.max());
    if (tc.renormalized)
      for (double a : f.values) r.max_sum_defect = std::max(r.max_sum_defect, std::abs(a + (1.0 - a) - 1.0));
    if (opt.after_sweep) opt.after_sweep(f, axis);
  };
  FractionField cur = initial;
  double prev_mass = mass0;
  for (long n = 0; n < r.steps; ++n) {
    so.step_number = n;
    const double t = n * r.dt;
    cur = tc.renormalized ? step_renormalized(cur, tc.velocity, t, r.dt, scheme, so)
                          : step(cur, tc.velocity, t, r.dt, scheme, so);
    cur.time = (n + 1) * r.dt;
    const double mass = cur.total();
    r.max_mass_drift = std::max(r.max_mass_drift, std::abs(mass - prev_mass) / mass0);
    prev_mass = mass;
    record(cur, n + 1);
  }
  r.error = relative_l1(cur, initial);
  r.rmix_final = mixed_ratio(cur);
  r.rmix_ratio = r.rmix_initial > 0 ? r.rmix_final / r.rmix_initial : 0.0;
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline RunReport run(int test, const FluxScheme& scheme, int nh, const RunOptions& opt = {}) {
  return run(test_case(test), scheme, nh, opt);
}

struct ConvergenceFit {
  double rate = 0;       // −slope of log E against log N
  double intercept = 0;  // log E ≈ intercept − rate·log N
};

inline ConvergenceFit convergence(const std::vector<int>& nh, const std::vector<double>& errors) {
  if (nh.size() != errors.size()) throw std::invalid_argument("convergence: size mismatch");
  if (nh.size() < 3) throw InsufficientPoints("convergence needs at least 3 mesh sizes");
  const double n = static_cast<double>(nh.size());
  std::vector<double> x(nh.size()), y(nh.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < nh.size(); ++k) {
    if (!(errors[k] > 0)) throw std::invalid_argument("convergence: errors must be positive");
    x[k] = std::log(static_cast<double>(nh[k]));
    y[k] = std::log(errors[k]);
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < nh.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 1e-12)) throw InsufficientPoints("convergence needs at least 2 distinct mesh sizes");
  const double slope = sxy / sxx;
  return {-slope, my - slope * mx};
}

// ------------------------------------------------------------ reports

inline std::string history_filename(int test, const std::string& scheme, int nh) {
  return "test" + std::to_string(test) + "_" + scheme + "_n" + std::to_string(nh) + ".csv";
}

inline std::string summary_filename(int test, const std::string& scheme) {
  return "summary_test" + std::to_string(test) + "_" + scheme + ".csv";
}

inline void write_history_csv(const RunReport& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(17);
  os << "step,time,rmix,mass,max,min\n";
  for (const auto& s : r.history)
    os << s.step << ',' << s.time << ',' << s.rmix << ',' << s.mass << ',' << s.max << ',' << s.min << '\n';
}

inline constexpr const char* kSummaryHeader =
    "test,scheme,nh,steps,error,rmix_initial,rmix_final,rmix_ratio,max_mass_drift,min_value,max_value,wall_seconds";

inline void write_summary_csv(const std::vector<RunReport>& reports, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(17);
  os << kSummaryHeader << '\n';
  for (const auto& r : reports)
    os << r.test << ',' << r.scheme << ',' << r.nh << ',' << r.steps << ',' << r.error << ',' << r.rmix_initial << ','
       << r.rmix_final << ',' << r.rmix_ratio << ',' << r.max_mass_drift << ',' << r.min_value << ',' << r.max_value
       << ',' << r.wall_seconds << '\n';
}

struct SummaryRow {
  int test = 0;
  std::string scheme;
  int nh = 0;
  double error = 0;
  double rmix_ratio = 0;
};

inline std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kSummaryHeader) throw std::runtime_error("bad summary header in " + path.string());
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 12) throw std::runtime_error("bad summary row in " + path.string());
    rows.push_back({std::stoi(cells[0]), cells[1], std::stoi(cells[2]), std::stod(cells[4]), std::stod(cells[7])});
  }
  return rows;
}

struct ConvergenceRow {
  int test = 0;
  std::string scheme;
  std::vector<int> nh;
  std::vector<double> errors;
  bool fitted = false;  // false when fewer than 3 distinct meshes were found
  ConvergenceFit fit;
};

/// Reads every summary_*.csv in `dir` and fits one rate per (test, scheme).
inline std::vector<ConvergenceRow> convergence_from_directory(const std::filesystem::path& dir) {
  std::map<std::pair<int, std::string>, std::map<int, double>> groups;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("summary_", 0) != 0 || entry.path().extension() != ".csv") continue;
    for (const auto& row : read_summary_csv(entry.path())) groups[{row.test, row.scheme}][row.nh] = row.error;
  }
  std::vector<ConvergenceRow> out;
  for (const auto& [key, by_mesh] : groups) {
    ConvergenceRow row;
    row.test = key.first;
    row.scheme = key.second;
    for (const auto& [n, e] : by_mesh) {
      row.nh.push_back(n);
      row.errors.push_back(e);
    }
    if (row.nh.size() >= 3) {
      row.fit = convergence(row.nh, row.errors);
      row.fitted = true;
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace vofml
