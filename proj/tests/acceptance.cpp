// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance --workdir DIR [--reuse]
//
// Criterion 4 generates the desk dataset and trains two networks on it (tens
// of minutes on one core): one with the fixed desk schedule on the raw-network
// loss, which criterion 4 scores, and one trained through the symmetrized
// network, which the advection runs of criteria 5, 7 and 8 use. With --reuse,
// a dataset and weights left in DIR by an earlier run are used instead.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>

#include "oracles.hpp"
#include "vofml/cli.hpp"
#include "vofml/parallel.hpp"

using namespace vofml;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o, double seconds) {
  std::printf("criterion %d %-28s %s  %s  [%.0f s]\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <class F>
void check(int id, const char* name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ------------------------------------------------------------ 1

Outcome geometry_oracle() {
  constexpr int kConfigs = 100;
  constexpr long kSamplesPerConfig = 10'000'000;
  constexpr long kPerCell = kSamplesPerConfig / kStencilSize;
  int worst_family = -1, beyond = 0, mixed = 0;
  double worst = 0;  // largest |error| / allowed
  double z_sum = 0, z_sq = 0;
  long compared = 0;
  for (Family f : kAllFamilies) {
    const int fi = static_cast<int>(f);
    // Draw the configurations first, then estimate all cells in parallel.
    std::vector<StencilConfig> configs;
    oracle::Uniform rng(1000 + fi);
    while (static_cast<int>(configs.size()) < kConfigs) {
      std::vector<double> theta;
      for (auto [lo, hi] : parameter_box(f)) theta.push_back(rng.in(lo, hi));
      try {
        configs.push_back(sample_config(f, theta));
      } catch (const RejectedConfig&) {
      }
    }
    const double extra = f == Family::Ellipsoid ? 5e-4 : 0.0;
    std::vector<double> ratio(configs.size() * kStencilSize), z(ratio.size(), 0.0);
    parallel_for(ratio.size(), [&](std::size_t job) {
      const auto& cfg = configs[job / kStencilSize];
      const int c = static_cast<int>(job % kStencilSize);
      const Vec3 lo = Vec3(c % 3 - 1.5, c / 3 % 3 - 1.5, c / 9 - 1.5);
      const double exact = std::clamp(stencil_fractions(cfg)[c], 0.0, 1.0);
      const auto mc = oracle::monte_carlo_fraction([&](const Vec3& p) { return oracle::analytic_inside(cfg, p); },
                                                   lo, lo + Vec3::Ones(), kPerCell, 7919 * job + fi);
      const double se = std::sqrt(exact * (1 - exact) / kPerCell);
      ratio[job] = std::abs(mc.mean - exact) / (4 * se + extra + 1e-12);
      if (se > 0) z[job] = (mc.mean - exact) / se;
    });
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      if (ratio[k] > worst) {
        worst = ratio[k];
        worst_family = fi;
      }
      beyond += ratio[k] > 1.0;
      if (z[k] != 0.0) {
        ++mixed;
        z_sum += z[k];
        z_sq += z[k] * z[k];
      }
    }
    compared += static_cast<long>(ratio.size());
  }
  // The z moments show whether a miss is a tail event or a bias.
  const double z_mean = z_sum / std::max(mixed, 1), z_var = z_sq / std::max(mixed, 1) - z_mean * z_mean;
  return {beyond == 0,
          fmt("%ld cell volumes, %d outside tolerance, worst |error|/tolerance %.4f (%s); %d mixed cells: z mean "
              "%.3f, z variance %.3f",
              compared, beyond, worst,
              worst_family < 0 ? "-" : std::string(family_name(Family(worst_family))).c_str(), mixed, z_mean,
              z_var)};
}

// ------------------------------------------------------------ 2

Outcome symmetry(const NetworkWeights& w) {
  oracle::Uniform rng(2);
  double perm_err = 0, switch_err = 0;
  for (int i = 0; i < 100; ++i) {
    Stencil x;
    for (double& v : x) v = rng.next();
    const double beta = rng.in(0, 0.6);
    const double base = wrapped_forward(w, x, beta);
    for (const auto& p : s_equal_permutations())
      perm_err = std::max(perm_err, std::abs(wrapped_forward(w, p.apply(x), beta) - base));
    switch_err = std::max(switch_err, std::abs(base + wrapped_forward(w, material_switch(x), beta) - 1.0));
  }
  return {perm_err <= 1e-12 && switch_err <= 1e-12,
          fmt("max permutation deviation %.2e, max |f(x)+f(Mx)-1| %.2e", perm_err, switch_err)};
}

// ------------------------------------------------------------ 3

std::vector<bool> activation_pattern(const NetworkWeights& w, const MatrixXd& X) {
  std::vector<bool> pattern;
  MatrixXd h = X;
  for (int l = 0; l + 1 < w.layers(); ++l) {
    MatrixXd z = w.A[l] * h;
    z.colwise() += w.b[l];
    for (Eigen::Index k = 0; k < z.size(); ++k) pattern.push_back(z.data()[k] > 0);
    h = z.cwiseMax(0.0);
  }
  return pattern;
}

Outcome gradient_check() {
  DatasetSpec spec;
  spec.counts = {10, 10, 10, 5};
  spec.seed = 3;
  spec.ellipsoid_points = 1000;
  const Dataset data = build(spec);
  NetworkWeights w = NetworkWeights::xavier(3);
  const MatrixXd X = input_matrix(data);
  const LossFunction loss(data, LossTarget::Raw);
  VectorXd g;
  loss.evaluate(w, &g);
  const VectorXd p = w.flatten();
  const auto pattern = activation_pattern(w, X);
  oracle::Uniform rng(3);
  double worst = 0;
  int checked = 0;
  for (int attempt = 0; checked < 20 && attempt < 5000; ++attempt) {
    const auto k = static_cast<Eigen::Index>(rng.next() * p.size());
    if (std::abs(g[k]) < 1e-5) continue;
    const double h = 1e-6;
    VectorXd q = p;
    q[k] = p[k] + h;
    w.unflatten(q);
    const bool same_plus = activation_pattern(w, X) == pattern;
    const double fp = loss.evaluate(w, nullptr);
    q[k] = p[k] - h;
    w.unflatten(q);
    const bool same_minus = activation_pattern(w, X) == pattern;
    const double fm = loss.evaluate(w, nullptr);
    w.unflatten(p);
    if (!same_plus || !same_minus) continue;
    worst = std::max(worst, std::abs((fp - fm) / (2 * h) - g[k]) / std::abs(g[k]));
    ++checked;
  }
  return {checked == 20 && worst < 1e-6, fmt("%d coordinates, max relative error %.2e", checked, worst)};
}

// ------------------------------------------------------------ 4

struct Networks {
  std::shared_ptr<NetworkWeights> raw;      // criterion 4: fixed desk schedule, raw-network loss
  std::shared_ptr<NetworkWeights> wrapped;  // advection runs: loss through the symmetrized network
};

std::shared_ptr<NetworkWeights> trained_or_cached(const fs::path& path, bool reuse, const Split& parts,
                                                  const TrainSchedule& s) {
  if (reuse && fs::exists(path)) return std::make_shared<NetworkWeights>(read_weights(path.string()));
  auto w = std::make_shared<NetworkWeights>(train(NetworkWeights::xavier(kSeed), parts.train, parts.validation, s).weights);
  write_weights(*w, path.string());
  return w;
}

Outcome flux_quality(const fs::path& dir, bool reuse, Networks& nets) {
  const fs::path data_path = dir / "desk_dataset.csv";
  Dataset data;
  if (reuse && fs::exists(data_path)) {
    data = read_dataset(data_path.string());
  } else {
    DatasetSpec spec;
    spec.counts = {1000, 2000, 3000, 2000};
    spec.seed = kSeed;
    data = build(spec);
    write_dataset(data, data_path.string());
  }
  if (data.size() != 48000) return {false, fmt("dataset has %zu samples, expected 48000", data.size())};
  const Split parts = split(data, 0.8, 0.1, kSeed);

  TrainSchedule raw;
  raw.adam_epochs = 2000;
  raw.qn_steps = 500;
  raw.seed = kSeed;
  nets.raw = trained_or_cached(dir / "desk_weights_raw.txt", reuse, parts, raw);

  TrainSchedule wrapped;
  wrapped.adam_epochs = 150;
  wrapped.qn_steps = 0;
  wrapped.batch_size = 256;
  wrapped.target = LossTarget::Wrapped;
  wrapped.seed = kSeed;
  nets.wrapped = trained_or_cached(dir / "desk_weights_wrapped.txt", reuse, parts, wrapped);

  const auto m = compare_schemes(*nets.raw, parts.test);
  const double uw = m.upwind.mse, ld = m.limited_downwind.mse, nn = m.vofml.mse;
  const double nn_wrapped = compare_schemes(*nets.wrapped, parts.test).vofml.mse;
  return {nn < ld && ld < uw && nn <= ld / 3,
          fmt("test MSE UW %.3e  LD %.3e  VOFML %.3e  (LD/VOFML %.2f, need >= 3; wrapped-loss network %.3e)", uw,
              ld, nn, ld / nn, nn_wrapped)};
}

// ------------------------------------------------------------ 5, 7, 8

using RunKey = std::tuple<int, std::string, int>;  // test, scheme, N

struct Runs {
  std::map<RunKey, RunReport> reports;
  std::map<std::string, FluxScheme> schemes;

  const RunReport& get(int test, const std::string& scheme, int n) {
    const RunKey key{test, scheme, n};
    auto it = reports.find(key);
    if (it == reports.end()) it = reports.emplace(key, run(test, schemes.at(scheme), n)).first;
    return it->second;
  }
};

Outcome bounds_and_conservation(Runs& runs) {
  double worst_low = 0, worst_high = 0, worst_drift = 0, worst_defect = 0;
  int count = 0;
  for (int test : {1, 2, 3})
    for (const char* scheme : {"uw", "ld", "vofml"})
      for (int n : {10, 27}) {
        const auto& r = runs.get(test, scheme, n);
        worst_low = std::max(worst_low, -r.min_value);
        worst_high = std::max(worst_high, r.max_value - 1);
        if (test < 3) worst_drift = std::max(worst_drift, r.max_mass_drift);
        if (test == 3) worst_defect = std::max(worst_defect, r.max_sum_defect);
        ++count;
      }
  const bool pass = worst_low <= 1e-12 && worst_high <= 1e-12 && worst_drift <= 1e-12 && worst_defect == 0.0;
  return {pass, fmt("%d runs: undershoot %.1e, overshoot %.1e, mass drift/step %.1e, |aA+aB-1| %.1e", count,
                    worst_low, worst_high, worst_drift, worst_defect)};
}

Outcome convergence_order(Runs& runs) {
  std::map<std::string, double> rate;
  std::string detail;
  for (const char* scheme : {"uw", "ld", "vofml"}) {
    std::vector<int> nh = desk_meshes();
    std::vector<double> err;
    for (int n : nh) err.push_back(runs.get(1, scheme, n).error);
    rate[scheme] = convergence(nh, err).rate;
    detail += fmt("%s %.3f  ", scheme, rate[scheme]);
  }
  const bool pass = rate["vofml"] > rate["ld"] && rate["ld"] > rate["uw"] && rate["vofml"] >= 0.7 && rate["uw"] <= 0.3;
  return {pass, "rates " + detail + "(need vofml > ld > uw, vofml >= 0.7, uw <= 0.3)"};
}

Outcome mixed_cells(Runs& runs) {
  const double uw = runs.get(1, "uw", 27).rmix_ratio, ld = runs.get(1, "ld", 27).rmix_ratio,
               nn = runs.get(1, "vofml", 27).rmix_ratio;
  return {ld <= 3 && nn <= 3 && uw >= 10, fmt("Rmix T/0 at N=27: UW %.2f  LD %.2f  VOFML %.2f", uw, ld, nn)};
}

// ------------------------------------------------------------ 6

Outcome upwind_exact() {
  const int n = 10;
  const Mesh mesh(n, Vec3::Zero(), 1.0);
  const FractionField initial = init_fractions(initial_condition(3), mesh, 10);
  int exact = 0, total = 0;
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {1.0, -1.0}) {
      VelocitySpec vel;
      vel.u = [=](const Vec3&, double) {
        Vec3 u = Vec3::Zero();
        u[axis] = sign;
        return u;
      };
      vel.componentwise_derivative_free = true;
      const double dt = mesh.dx;  // Courant number 1
      FractionField f = initial;
      for (int s = 0; s < n; ++s) f = step(f, vel, s * dt, dt, FluxScheme::upwind());
      exact += f.values == initial.values;
      ++total;
    }
  return {exact == total, fmt("%d of %d directions return the initial field bitwise", exact, total)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string workdir = "acceptance_work";
  bool reuse = false;
  app.add_option("--workdir", workdir, "Scratch directory for the dataset, weights and run reports");
  app.add_flag("--reuse", reuse, "Reuse a dataset and weights already in the work directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  Networks nets;
  check(1, "geometry-oracle", geometry_oracle);
  check(2, "symmetry", [] { return symmetry(NetworkWeights::xavier(kSeed)); });
  check(3, "gradient", gradient_check);
  check(4, "flux-quality", [&] { return flux_quality(workdir, reuse, nets); });

  Runs runs;
  runs.schemes.emplace("uw", FluxScheme::upwind());
  runs.schemes.emplace("ld", FluxScheme::limited_downwind());
  if (nets.wrapped) runs.schemes.emplace("vofml", FluxScheme::vofml(nets.wrapped));
  check(5, "bounds-conservation", [&] { return bounds_and_conservation(runs); });
  check(6, "upwind-exact", upwind_exact);
  check(7, "convergence-order", [&] { return convergence_order(runs); });
  check(8, "mixed-cells", [&] { return mixed_cells(runs); });

  std::vector<RunReport> all;
  for (const auto& [key, r] : runs.reports) all.push_back(r);
  std::map<std::pair<int, std::string>, std::vector<RunReport>> by_experiment;
  for (const auto& r : all) {
    write_history_csv(r, fs::path(workdir) / history_filename(r.test, r.scheme, r.nh));
    by_experiment[{r.test, r.scheme}].push_back(r);
  }
  for (const auto& [key, reports] : by_experiment)
    write_summary_csv(reports, fs::path(workdir) / summary_filename(key.first, key.second));

  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
