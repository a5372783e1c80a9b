#pragma once

// Synthetic training set: Latin-hypercube parameter draws per family,
// S≠ augmentation, group-aware splitting and a lossless CSV format.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vofml/parallel.hpp"
#include "vofml/random.hpp"
#include "vofml/synthconfig.hpp"

namespace vofml {

struct Sample {
  Stencil fractions{};
  double beta = 0;
  double flux = 0;
  Family family = Family::OnePlane;
  int augmentation_index = 0;
  // Base configuration this sample was generated from. Not serialized:
  // recovered on read by counting augmentation_index == 0 rows.
  std::size_t group = 0;
};

using Dataset = std::vector<Sample>;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n points in [0,1)^d, one per bin [k/n, (k+1)/n) in every coordinate.
inline std::vector<std::vector<double>> latin_hypercube(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("latin_hypercube: n and d must be positive");
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  Rng rng(seed, {0x1a7});
  std::vector<int> perm(n);
  for (int c = 0; c < d; ++c) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    for (int i = 0; i < n; ++i) {
      // Guard against rounding up to the next bin edge.
      const double v = (perm[i] + rng.uniform()) / n;
      pts[i][c] = std::min(v, std::nextafter((perm[i] + 1.0) / n, 0.0));
    }
  }
  return pts;
}

struct DatasetSpec {
  std::array<int, 4> counts{3000, 6000, 9000, 6000};
  double beta_min = 0.0;
  double beta_max = 0.6;
  bool augment = true;
  std::uint64_t seed = 0;
  int ellipsoid_points = kDefaultEllipsoidPoints;
  // Extra draws allowed per base configuration before giving up.
  int max_redraws = 1000;
};

struct BuildStats {
  std::array<long, 4> attempts{};
  std::array<long, 4> rejections{};
};

namespace dataset_detail {

inline std::vector<double> map_to_box(const std::vector<double>& u, Family f) {
  const auto box = parameter_box(f);
  std::vector<double> theta(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) theta[k] = box[k].first + (box[k].second - box[k].first) * u[k];
  return theta;
}

inline bool mixed(const StencilConfig& cfg) {
  const double c = central_fraction(cfg);
  return c > kRejectTol && c < 1 - kRejectTol;
}

}  // namespace dataset_detail

/// Builds the dataset in (family, base index, augmentation index) order.
/// The 6 augmentations of a base configuration share its β.
inline Dataset build(const DatasetSpec& spec, BuildStats* stats = nullptr) {
  if (spec.beta_min < 0 || spec.beta_max > 1 || spec.beta_min > spec.beta_max)
    throw std::invalid_argument("build: beta range must lie in [0, 1]");
  const int per_base = spec.augment ? 6 : 1;
  Dataset out;
  BuildStats local;
  std::size_t group = 0;
  for (Family f : kAllFamilies) {
    const int fi = static_cast<int>(f);
    const int n = spec.counts[fi];
    if (n < 0) throw std::invalid_argument("build: negative count");
    if (n == 0) continue;
    const auto params = latin_hypercube(n, parameter_count(f), stream_seed(spec.seed, {1, std::uint64_t(fi)}));
    const auto betas = latin_hypercube(n, 1, stream_seed(spec.seed, {2, std::uint64_t(fi)}));
    std::vector<Sample> block(static_cast<std::size_t>(n) * per_base);
    std::vector<int> tries(n, 0);
    parallel_for(n, [&](std::size_t i) {
      Rng redraw(spec.seed, {3, std::uint64_t(fi), i});
      std::vector<double> u = params[i];
      std::optional<StencilConfig> cfg;
      for (int attempt = 0;; ++attempt) {
        ++tries[i];
        try {
          auto c = sample_config(f, dataset_detail::map_to_box(u, f), spec.ellipsoid_points);
          if (dataset_detail::mixed(c)) {
            cfg = std::move(c);
            break;
          }
        } catch (const RejectedConfig&) {
        }
        if (attempt >= spec.max_redraws)
          throw DatasetError("build: no admissible " + std::string(family_name(f)) + " configuration");
        for (auto& v : u) v = redraw.uniform();
      }
      const double beta = spec.beta_min + (spec.beta_max - spec.beta_min) * betas[i][0];
      for (int s = 0; s < per_base; ++s) {
        const StencilConfig moved = s == 0 ? *cfg : transform(*cfg, s);
        Sample& smp = block[i * per_base + s];
        smp.fractions = stencil_fractions(moved);
        smp.beta = beta;
        smp.flux = exact_flux(moved, beta);
        smp.family = f;
        smp.augmentation_index = s;
      }
    });
    const long attempts = std::accumulate(tries.begin(), tries.end(), 0L);
    local.attempts[fi] = attempts;
    local.rejections[fi] = attempts - n;
    if (2 * local.rejections[fi] > attempts)
      throw DatasetError("build: rejection rate above 50% for family " + std::string(family_name(f)));
    for (std::size_t k = 0; k < block.size(); ++k) {
      block[k].group = group + k / per_base;
      out.push_back(block[k]);
    }
    group += n;
  }
  if (stats) *stats = local;
  return out;
}

struct Split {
  Dataset train, validation, test;
};

/// Shuffled split by base configuration (or by sample when `by_group` is
/// false, which lets near-identical augmentations leak across partitions).
inline Split split(const Dataset& data, double train_ratio = 0.8, double validation_ratio = 0.1,
                   std::uint64_t seed = 0, bool by_group = true) {
  if (train_ratio < 0 || validation_ratio < 0 || train_ratio + validation_ratio > 1 + 1e-12)
    throw std::invalid_argument("split: ratios must be non-negative and sum to at most 1");
  // Units are groups of consecutive samples.
  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t k = 0; k < data.size();) {
    std::size_t e = k + 1;
    if (by_group)
      while (e < data.size() && data[e].group == data[k].group) ++e;
    units.emplace_back(k, e);
    k = e;
  }
  Rng rng(seed, {0x5b1});
  std::shuffle(units.begin(), units.end(), rng.engine());
  const auto n = static_cast<double>(units.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
  const auto n_val = std::min(units.size() - n_train, static_cast<std::size_t>(std::llround(validation_ratio * n)));
  Split s;
  for (std::size_t u = 0; u < units.size(); ++u) {
    Dataset& dst = u < n_train ? s.train : u < n_train + n_val ? s.validation : s.test;
    for (std::size_t k = units[u].first; k < units[u].second; ++k) dst.push_back(data[k]);
  }
  return s;
}

// ---------------------------------------------------------------- CSV

inline constexpr int kDatasetColumns = 31;

inline std::string dataset_header() {
  std::string h;
  for (int k = 0; k < kStencilSize; ++k) h += "x" + std::to_string(k) + ",";
  return h + "beta,flux,family,augmentation_index";
}

inline void format_double(std::string& out, double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, r.ptr);
}

inline void write_dataset(const Dataset& data, std::ostream& os) {
  os << dataset_header() << '\n';
  std::string line;
  for (const auto& s : data) {
    line.clear();
    for (double v : s.fractions) {
      format_double(line, v);
      line += ',';
    }
    format_double(line, s.beta);
    line += ',';
    format_double(line, s.flux);
    line += ',';
    line += family_name(s.family);
    line += ',';
    line += std::to_string(s.augmentation_index);
    os << line << '\n';
  }
}

inline void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DatasetError("cannot open " + path + " for writing");
  write_dataset(data, os);
  if (!os) throw DatasetError("write failed: " + path);
}

namespace dataset_detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DatasetError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace dataset_detail

inline Dataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DatasetError("empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = dataset_detail::split_commas(line);
  if (header.size() != kDatasetColumns)
    throw DatasetError("header has " + std::to_string(header.size()) + " columns, expected 31");
  if (line != dataset_header()) throw DatasetError("unrecognized dataset header");
  Dataset data;
  std::size_t line_no = 1, groups = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = dataset_detail::split_commas(line);
    if (cells.size() != kDatasetColumns)
      throw DatasetError("line " + std::to_string(line_no) + ": expected 31 columns");
    Sample s;
    for (int k = 0; k < kStencilSize; ++k) s.fractions[k] = dataset_detail::parse_double(cells[k], line_no);
    s.beta = dataset_detail::parse_double(cells[27], line_no);
    s.flux = dataset_detail::parse_double(cells[28], line_no);
    try {
      s.family = family_from_name(cells[29]);
    } catch (const std::invalid_argument& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto aug = cells[30];
    const auto r = std::from_chars(aug.data(), aug.data() + aug.size(), s.augmentation_index);
    if (r.ec != std::errc() || r.ptr != aug.data() + aug.size() || s.augmentation_index < 0 ||
        s.augmentation_index > 5)
      throw DatasetError("line " + std::to_string(line_no) + ": bad augmentation index");
    if (s.augmentation_index == 0 || data.empty()) ++groups;
    s.group = groups - 1;
    data.push_back(s);
  }
  return data;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open " + path);
  return read_dataset(is);
}

}  // namespace vofml
