#pragma once
// Command bodies behind the `vofml` executable, kept separate from argument
// parsing so they can be driven from tests.

#include <charconv>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "experiments.hpp"
#include "training.hpp"

namespace vofml::cli {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ------------------------------------------------------------ parsing

inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string_view s = text;
  while (true) {
    const auto comma = s.find(',');
    const auto item = s.substr(0, comma);
    int v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size())
      throw UsageError("not an integer list: '" + text + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline std::array<int, 4> parse_counts(const std::string& text) {
  const auto v = parse_int_list(text);
  if (v.size() != 4) throw UsageError("--counts needs 4 values (one_plane, two_planes, three_planes, ellipsoid)");
  std::array<int, 4> out{};
  for (int f = 0; f < 4; ++f) {
    if (v[f] < 0) throw UsageError("--counts values must be non-negative");
    out[f] = v[f];
  }
  return out;
}

inline std::vector<int> parse_mesh_list(const std::string& text) {
  auto v = parse_int_list(text);
  for (int n : v)
    if (n < 3) throw UsageError("mesh sizes must be at least 3");
  return v;
}

inline SchemeKind parse_scheme(const std::string& s) {
  if (s == "uw") return SchemeKind::Upwind;
  if (s == "ld") return SchemeKind::LimitedDownwind;
  if (s == "vofml") return SchemeKind::Vofml;
  throw UsageError("unknown scheme '" + s + "' (expected uw, ld or vofml)");
}

inline LossTarget parse_target(const std::string& s) {
  if (s == "raw") return LossTarget::Raw;
  if (s == "wrapped") return LossTarget::Wrapped;
  throw UsageError("unknown loss target '" + s + "' (expected raw or wrapped)");
}

// ------------------------------------------------------------ gen-dataset

struct GenDatasetOptions {
  std::array<int, 4> counts{3000, 6000, 9000, 6000};
  double beta_max = 0.6;
  std::uint64_t seed = 0;
  std::string out;
  bool augment = true;
};

inline int gen_dataset(const GenDatasetOptions& o, std::ostream& log) {
  if (!(o.beta_max > 0 && o.beta_max <= 1)) throw UsageError("--beta-max must be in (0, 1]");
  DatasetSpec spec;
  spec.counts = o.counts;
  spec.beta_max = o.beta_max;
  spec.seed = o.seed;
  spec.augment = o.augment;
  BuildStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = build(spec, &stats);
  write_dataset(data, o.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << "wrote " << data.size() << " samples to " << o.out << " in " << std::fixed << std::setprecision(1) << secs
      << " s\n";
  log << std::defaultfloat;
  for (Family f : kAllFamilies) {
    const auto k = static_cast<int>(f);
    log << "  " << family_name(f) << ": " << o.counts[k] << " configs, " << stats.rejections[k]
        << " rejected draws\n";
  }
  return 0;
}

// ------------------------------------------------------------ train

struct TrainOptions {
  std::string dataset;
  std::string out;
  int adam_epochs = 5000;
  int qn_steps = 5000;
  bool full_bfgs = false;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  double learning_rate = 1e-3;
  LossTarget target = LossTarget::Raw;
  int report_every = 100;
};

inline void print_metrics(const BaselineMetrics& m, std::ostream& os) {
  const auto line = [&](const char* name, const Metrics& x) {
    os << "  " << std::left << std::setw(8) << name << std::right << " MSE " << std::scientific
       << std::setprecision(4) << x.mse << "  MAE " << x.mae << '\n';
  };
  line("UW", m.upwind);
  line("LD", m.limited_downwind);
  line("VOFML", m.vofml);
  line("VOFML+P", m.vofml_projected);
  os << std::defaultfloat;
}

inline int train_network(const TrainOptions& o, std::ostream& log) {
  const Dataset data = read_dataset(o.dataset);
  const Split parts = split(data, 0.8, 0.1, o.seed);
  log << "train " << parts.train.size() << ", validation " << parts.validation.size() << ", test "
      << parts.test.size() << " samples\n";
  TrainSchedule s;
  s.adam_epochs = o.adam_epochs;
  s.qn_steps = o.qn_steps;
  s.full_bfgs = o.full_bfgs;
  s.batch_size = o.batch_size;
  s.learning_rate = o.learning_rate;
  s.target = o.target;
  s.seed = o.seed;
  const auto t0 = std::chrono::steady_clock::now();
  s.on_progress = [&](const TrainProgress& p) {
    if (o.report_every <= 0 || p.step % o.report_every != 0) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << p.phase << ' ' << p.step << " train " << std::scientific << std::setprecision(3) << p.train_loss
        << " val " << p.validation_loss << std::defaultfloat << "  t=" << std::lround(secs) << "s\n"
        << std::flush;
  };
  const TrainResult r = train(NetworkWeights::xavier(o.seed), parts.train, parts.validation, s);
  write_weights(r.weights, o.out);
  log << "best validation loss " << std::scientific << std::setprecision(4) << r.best_validation
      << std::defaultfloat << " (" << r.best_phase << " step " << r.best_step << "), weights written to " << o.out
      << '\n';
  log << "test partition:\n";
  print_metrics(compare_schemes(r.weights, parts.test), log);
  return 0;
}

// ------------------------------------------------------------ eval-net

struct EvalOptions {
  std::string weights;
  std::string dataset;
  // When set, only the test partition of the split used by `train` is scored.
  std::optional<std::uint64_t> split_seed;
};

inline BaselineMetrics evaluate_network(const EvalOptions& o) {
  const NetworkWeights w = read_weights(o.weights);
  const Dataset data = read_dataset(o.dataset);
  if (!o.split_seed) {
    if (data.empty()) throw EmptyPartition("dataset is empty");
    return compare_schemes(w, data);
  }
  const Split parts = split(data, 0.8, 0.1, *o.split_seed);
  if (parts.test.empty()) throw EmptyPartition("test partition is empty");
  return compare_schemes(w, parts.test);
}

inline int eval_net(const EvalOptions& o, std::ostream& log) {
  print_metrics(evaluate_network(o), log);
  return 0;
}

// ------------------------------------------------------------ run-test

struct RunTestOptions {
  int test = 1;
  SchemeKind scheme = SchemeKind::LimitedDownwind;
  std::vector<int> nh = desk_meshes();
  bool full = false;
  std::string weights;
  std::string out = ".";
};

inline FluxScheme make_scheme(SchemeKind kind, const std::string& weights_path) {
  switch (kind) {
    case SchemeKind::Upwind: return FluxScheme::upwind();
    case SchemeKind::LimitedDownwind: return FluxScheme::limited_downwind();
    case SchemeKind::Vofml:
      if (weights_path.empty()) throw UsageError("--scheme vofml needs --weights");
      return FluxScheme::vofml(std::make_shared<const NetworkWeights>(read_weights(weights_path)));
  }
  throw UsageError("unknown scheme");
}

inline std::vector<RunReport> run_test(const RunTestOptions& o, std::ostream& log) {
  if (o.test < 1 || o.test > 3) throw UsageError("--test must be 1, 2 or 3");
  const FluxScheme scheme = make_scheme(o.scheme, o.weights);
  const std::vector<int> meshes = o.full ? full_meshes() : o.nh;
  std::filesystem::create_directories(o.out);
  const std::filesystem::path dir(o.out);
  std::vector<RunReport> reports;
  for (int n : meshes) {
    RunReport r = run(o.test, scheme, n);
    write_history_csv(r, dir / history_filename(o.test, r.scheme, n));
    log << "test " << o.test << ' ' << r.scheme << " N=" << n << "  E " << std::scientific << std::setprecision(4)
        << r.error << "  Rmix T/0 " << std::defaultfloat << std::setprecision(4) << r.rmix_ratio << "  mass drift "
        << std::scientific << std::setprecision(2) << r.max_mass_drift << "  range [" << r.min_value << ", "
        << r.max_value << "]" << std::defaultfloat << std::setprecision(1) << std::fixed << "  " << r.wall_seconds
        << " s\n"
        << std::defaultfloat << std::setprecision(6) << std::flush;
    reports.push_back(std::move(r));
  }
  write_summary_csv(reports, dir / summary_filename(o.test, scheme_tag(o.scheme)));
  return reports;
}

// ------------------------------------------------------------ convergence

inline int convergence_report(const std::string& dir, std::ostream& log) {
  const auto rows = convergence_from_directory(dir);
  if (rows.empty()) throw UsageError("no summary files in " + dir);
  for (const auto& r : rows) {
    log << "test " << r.test << ' ' << std::left << std::setw(6) << r.scheme << std::right;
    if (r.fitted)
      log << " rate " << std::fixed << std::setprecision(3) << r.fit.rate;
    else
      log << " rate n/a (needs 3 meshes)";
    log << "  (N =";
    for (int n : r.nh) log << ' ' << n;
    log << ")\n" << std::defaultfloat;
  }
  return 0;
}

}  // namespace vofml::cli
