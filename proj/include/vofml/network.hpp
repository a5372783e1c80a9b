#pragma once

// Fully-connected ReLU network 28 -> 50 -> 50 -> 50 -> 50 -> 1 acting on
// (27 stencil fractions, beta), its symmetrized / material-switch wrapper,
// losses and reverse-mode gradients.
//
// Batches are column-major: one sample per column, rows 0..26 are the
// fractions and row 27 is beta.

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vofml/dataset.hpp"
#include "vofml/flux.hpp"
#include "vofml/lattice.hpp"
#include "vofml/random.hpp"

namespace vofml {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline constexpr int kInputSize = kStencilSize + 1;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyPartition : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WeightsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<int>& default_layer_dims() {
  static const std::vector<int> dims{kInputSize, 50, 50, 50, 50, 1};
  return dims;
}

struct NetworkWeights {
  std::vector<int> dims;
  std::vector<MatrixXd> A;
  std::vector<VectorXd> b;

  static NetworkWeights zeros(const std::vector<int>& dims = default_layer_dims()) {
    if (dims.size() < 2) throw DimensionMismatch("network needs at least an input and an output layer");
    for (int d : dims)
      if (d < 1) throw DimensionMismatch("layer sizes must be positive");
    NetworkWeights w;
    w.dims = dims;
    for (std::size_t l = 1; l < dims.size(); ++l) {
      w.A.push_back(MatrixXd::Zero(dims[l], dims[l - 1]));
      w.b.push_back(VectorXd::Zero(dims[l]));
    }
    return w;
  }

  /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero biases.
  static NetworkWeights xavier(std::uint64_t seed, const std::vector<int>& dims = default_layer_dims()) {
    NetworkWeights w = zeros(dims);
    Rng rng(seed, {0x9e7});
    for (std::size_t l = 0; l < w.A.size(); ++l) {
      const double r = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
      for (Eigen::Index i = 0; i < w.A[l].rows(); ++i)
        for (Eigen::Index j = 0; j < w.A[l].cols(); ++j) w.A[l](i, j) = rng.uniform(-r, r);
    }
    return w;
  }

  int layers() const { return static_cast<int>(A.size()); }
  int input_size() const { return dims.front(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < A.size(); ++l) n += A[l].size() + b[l].size();
    return n;
  }

  /// Parameters as one vector: per layer, A row-major then b.
  VectorXd flatten() const {
    VectorXd p(parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < A.size(); ++l) {
      for (Eigen::Index i = 0; i < A[l].rows(); ++i)
        for (Eigen::Index j = 0; j < A[l].cols(); ++j) p[k++] = A[l](i, j);
      for (Eigen::Index i = 0; i < b[l].size(); ++i) p[k++] = b[l][i];
    }
    return p;
  }

  void unflatten(const VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != parameter_count()) throw DimensionMismatch("parameter vector size");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < A.size(); ++l) {
      for (Eigen::Index i = 0; i < A[l].rows(); ++i)
        for (Eigen::Index j = 0; j < A[l].cols(); ++j) A[l](i, j) = p[k++];
      for (Eigen::Index i = 0; i < b[l].size(); ++i) b[l][i] = p[k++];
    }
  }
};

inline double relu(double v) { return v > 0 ? v : 0.0; }

/// minmod(a, b) written with ReLUs only.
inline double relu_minmod(double a, double b) { return relu(a - relu(a - b)) - relu(-a - relu(b - a)); }

// ------------------------------------------------------------ evaluation

inline RowVectorXd forward_batch(const NetworkWeights& w, const Eigen::Ref<const MatrixXd>& X) {
  if (X.rows() != w.input_size()) throw DimensionMismatch("input rows do not match the first layer");
  MatrixXd h;
  for (int l = 0; l < w.layers(); ++l) {
    MatrixXd z = l == 0 ? MatrixXd(w.A[l] * X) : MatrixXd(w.A[l] * h);
    z.colwise() += w.b[l];
    if (l + 1 < w.layers()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h.row(0);
}

inline VectorXd input_vector(const Stencil& x, double beta) {
  VectorXd v(kInputSize);
  for (int k = 0; k < kStencilSize; ++k) v[k] = x[k];
  v[kStencilSize] = beta;
  return v;
}

inline double forward(const NetworkWeights& w, const Stencil& x, double beta) {
  return forward_batch(w, input_vector(x, beta))[0];
}

/// The 8 stencil permutations that leave the exact x-flux unchanged.
inline const std::array<StencilPermutation, 8>& s_equal_permutations() {
  static const std::array<StencilPermutation, 8> perms = [] {
    std::array<StencilPermutation, 8> p;
    for (int j = 0; j < 8; ++j) p[j] = StencilPermutation::from_map(flux_preserving_maps()[j]);
    return p;
  }();
  return perms;
}

inline Stencil material_switch(const Stencil& x) {
  Stencil y;
  for (int k = 0; k < kStencilSize; ++k) y[k] = 1.0 - x[k];
  return y;
}

inline double symmetrized_forward(const NetworkWeights& w, const Stencil& x, double beta) {
  MatrixXd X(kInputSize, 8);
  for (int j = 0; j < 8; ++j) X.col(j) = input_vector(s_equal_permutations()[j].apply(x), beta);
  return forward_batch(w, X).sum() / 8.0;
}

// Wrapped network: 1/2 + (1/16) Σ_σ f(σx) − (1/16) Σ_σ f(σMx).
// Each sample expands to 16 network columns with these coefficients.
inline constexpr int kWrapExpansion = 16;

inline double wrap_coefficient(int j) { return j < 8 ? 1.0 / 16.0 : -1.0 / 16.0; }

/// Writes the 16 expanded columns of (x, beta) into X starting at `col`.
inline void expand_wrapped(const Stencil& x, double beta, MatrixXd& X, Eigen::Index col) {
  const Stencil mx = material_switch(x);
  const auto& perms = s_equal_permutations();
  for (int j = 0; j < 16; ++j) {
    const Stencil& src = j < 8 ? x : mx;
    const auto& p = perms[j % 8];
    for (int k = 0; k < kStencilSize; ++k) X(k, col + j) = src[p.source[k]];
    X(kStencilSize, col + j) = beta;
  }
}

inline double collapse_wrapped(const RowVectorXd& f, Eigen::Index col) {
  double pos = 0, neg = 0;
  for (int j = 0; j < 8; ++j) {
    pos += f[col + j];
    neg += f[col + 8 + j];
  }
  return 0.5 + (pos - neg) / 16.0;
}

inline double wrapped_forward(const NetworkWeights& w, const Stencil& x, double beta) {
  MatrixXd X(kInputSize, kWrapExpansion);
  expand_wrapped(x, beta, X, 0);
  return collapse_wrapped(forward_batch(w, X), 0);
}

/// Wrapped outputs for many (stencil, beta) pairs, evaluated in chunks.
template <class GetStencil, class GetBeta>
std::vector<double> wrapped_forward_many(const NetworkWeights& w, std::size_t n, GetStencil&& stencil,
                                         GetBeta&& beta, std::size_t chunk = 2048) {
  std::vector<double> out(n);
  MatrixXd X;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    X.resize(kInputSize, static_cast<Eigen::Index>(m * kWrapExpansion));
    for (std::size_t i = 0; i < m; ++i) expand_wrapped(stencil(start + i), beta(start + i), X, i * kWrapExpansion);
    const RowVectorXd f = forward_batch(w, X);
    for (std::size_t i = 0; i < m; ++i) out[start + i] = collapse_wrapped(f, i * kWrapExpansion);
  }
  return out;
}

inline double flux_vofml(const NetworkWeights& w, const Stencil& x, double beta) {
  return project(wrapped_forward(w, x, beta), x[kCentralCell], beta);
}

// ------------------------------------------------------------ datasets

inline MatrixXd input_matrix(const Dataset& data) {
  MatrixXd X(kInputSize, static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int k = 0; k < kStencilSize; ++k) X(k, i) = data[i].fractions[k];
    X(kStencilSize, i) = data[i].beta;
  }
  return X;
}

inline RowVectorXd target_vector(const Dataset& data) {
  RowVectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data[i].flux;
  return y;
}

struct Metrics {
  double mse = 0;
  double mae = 0;
};

inline Metrics error_metrics(const std::vector<double>& pred, const Dataset& data) {
  if (data.empty()) throw EmptyPartition("metrics of an empty partition");
  Metrics m;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = pred[i] - data[i].flux;
    m.mse += r * r;
    m.mae += std::abs(r);
  }
  m.mse /= data.size();
  m.mae /= data.size();
  return m;
}

/// Training loss: mean squared error of the raw network.
inline double loss_mse(const NetworkWeights& w, const Dataset& data) {
  if (data.empty()) throw EmptyPartition("loss of an empty partition");
  return (forward_batch(w, input_matrix(data)) - target_vector(data)).squaredNorm() / data.size();
}

/// Reported metrics: the wrapped network, without projection.
inline Metrics metrics(const NetworkWeights& w, const Dataset& data) {
  const auto pred = wrapped_forward_many(
      w, data.size(), [&](std::size_t i) -> const Stencil& { return data[i].fractions; },
      [&](std::size_t i) { return data[i].beta; });
  return error_metrics(pred, data);
}

struct BaselineMetrics {
  Metrics upwind, limited_downwind, vofml, vofml_projected;
};

inline BaselineMetrics compare_schemes(const NetworkWeights& w, const Dataset& data) {
  BaselineMetrics out;
  std::vector<double> uw(data.size()), ld(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    uw[i] = flux_upwind(data[i].fractions, data[i].beta);
    ld[i] = flux_limited_downwind(data[i].fractions, data[i].beta);
  }
  out.upwind = error_metrics(uw, data);
  out.limited_downwind = error_metrics(ld, data);
  auto net = wrapped_forward_many(
      w, data.size(), [&](std::size_t i) -> const Stencil& { return data[i].fractions; },
      [&](std::size_t i) { return data[i].beta; });
  out.vofml = error_metrics(net, data);
  for (std::size_t i = 0; i < data.size(); ++i)
    net[i] = project(net[i], data[i].fractions[kCentralCell], data[i].beta);
  out.vofml_projected = error_metrics(net, data);
  return out;
}

// ------------------------------------------------------------ gradients

/// Adds the gradient of Σ_c coeff_c·f(X_c) to `grad` (flattened layout),
/// i.e. backpropagates the per-column output sensitivities `seed`.
inline void accumulate_gradient(const NetworkWeights& w, const Eigen::Ref<const MatrixXd>& X, const RowVectorXd& seed,
                                VectorXd& grad) {
  const int L = w.layers();
  std::vector<MatrixXd> act(L);  // inputs to each layer
  act[0] = X;
  std::vector<MatrixXd> pre(L);
  for (int l = 0; l < L; ++l) {
    pre[l] = w.A[l] * act[l];
    pre[l].colwise() += w.b[l];
    if (l + 1 < L) act[l + 1] = pre[l].cwiseMax(0.0);
  }
  std::vector<Eigen::Index> offset(L);
  Eigen::Index k = 0;
  for (int l = 0; l < L; ++l) {
    offset[l] = k;
    k += w.A[l].size() + w.b[l].size();
  }
  MatrixXd delta = seed;
  for (int l = L - 1; l >= 0; --l) {
    const MatrixXd gA = delta * act[l].transpose();
    Eigen::Index o = offset[l];
    for (Eigen::Index i = 0; i < gA.rows(); ++i)
      for (Eigen::Index j = 0; j < gA.cols(); ++j) grad[o++] += gA(i, j);
    grad.segment(o, w.b[l].size()) += delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = w.A[l].transpose() * delta;
      delta = (pre[l - 1].array() > 0.0).select(back, 0.0);
    }
  }
}

enum class LossTarget { Raw, Wrapped };

/// Training objective on a fixed set of samples, evaluated in chunks so
/// that the wrapped target (16 network columns per sample) stays bounded
/// in memory. Chunks are reduced in a fixed order.
class LossFunction {
 public:
  LossFunction(const Dataset& data, LossTarget target = LossTarget::Raw, std::size_t chunk = 8192)
      : target_(target), chunk_(std::max<std::size_t>(1, chunk)) {
    if (data.empty()) throw EmptyPartition("loss of an empty partition");
    const std::size_t per = target == LossTarget::Raw ? 1 : kWrapExpansion;
    X_.resize(kInputSize, static_cast<Eigen::Index>(data.size() * per));
    y_ = target_vector(data);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (target == LossTarget::Raw) {
        for (int k = 0; k < kStencilSize; ++k) X_(k, i) = data[i].fractions[k];
        X_(kStencilSize, i) = data[i].beta;
      } else {
        expand_wrapped(data[i].fractions, data[i].beta, X_, i * kWrapExpansion);
      }
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }

  /// Loss over samples [begin, end) (all samples by default); if `grad` is
  /// non-null it receives the gradient of that loss.
  double evaluate(const NetworkWeights& w, VectorXd* grad, std::size_t begin = 0, std::size_t end = SIZE_MAX) const {
    end = std::min(end, size());
    if (begin >= end) throw EmptyPartition("empty sample range");
    const double n = static_cast<double>(end - begin);
    if (grad) *grad = VectorXd::Zero(w.parameter_count());
    double loss = 0;
    const Eigen::Index per = target_ == LossTarget::Raw ? 1 : kWrapExpansion;
    for (std::size_t s = begin; s < end; s += chunk_) {
      const std::size_t m = std::min(chunk_, end - s);
      const auto cols = X_.middleCols(static_cast<Eigen::Index>(s) * per, static_cast<Eigen::Index>(m) * per);
      const RowVectorXd f = forward_batch(w, cols);
      RowVectorXd residual(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        const double out = per == 1 ? f[i] : collapse_wrapped(f, i * per);
        residual[i] = out - y_[s + i];
      }
      loss += residual.squaredNorm();
      if (grad) {
        RowVectorXd seed(cols.cols());
        for (std::size_t i = 0; i < m; ++i)
          for (Eigen::Index j = 0; j < per; ++j)
            seed[i * per + j] = 2.0 * residual[i] / n * (per == 1 ? 1.0 : wrap_coefficient(static_cast<int>(j)));
        accumulate_gradient(w, cols, seed, *grad);
      }
    }
    return loss / n;
  }

  /// Same as evaluate() over the samples listed in `idx`.
  double evaluate_subset(const NetworkWeights& w, VectorXd* grad, const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw EmptyPartition("empty mini-batch");
    const Eigen::Index per = target_ == LossTarget::Raw ? 1 : kWrapExpansion;
    MatrixXd X(kInputSize, static_cast<Eigen::Index>(idx.size()) * per);
    RowVectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      X.middleCols(i * per, per) = X_.middleCols(idx[i] * per, per);
      y[i] = y_[idx[i]];
    }
    LossFunction sub(std::move(X), std::move(y), target_, chunk_);
    return sub.evaluate(w, grad);
  }

 private:
  LossFunction(MatrixXd X, RowVectorXd y, LossTarget target, std::size_t chunk)
      : target_(target), chunk_(chunk), X_(std::move(X)), y_(std::move(y)) {}

  LossTarget target_;
  std::size_t chunk_;
  MatrixXd X_;
  RowVectorXd y_;
};

/// Gradient of the raw-network MSE over `data`.
inline VectorXd grad(const NetworkWeights& w, const Dataset& data) {
  VectorXd g;
  LossFunction(data).evaluate(w, &g);
  return g;
}

// ------------------------------------------------------------ weights file

inline constexpr int kWeightsFormatVersion = 1;

inline void write_weights(const NetworkWeights& w, std::ostream& os) {
  auto put = [&](double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    os.write(buf, r.ptr - buf);
  };
  os << "vofml-weights " << kWeightsFormatVersion << "\nlayers";
  for (int d : w.dims) os << ' ' << d;
  os << '\n';
  for (int l = 0; l < w.layers(); ++l) {
    os << "A " << w.A[l].rows() << ' ' << w.A[l].cols() << '\n';
    for (Eigen::Index i = 0; i < w.A[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w.A[l].cols(); ++j) {
        put(w.A[l](i, j));
        os << (j + 1 == w.A[l].cols() ? '\n' : ' ');
      }
    os << "b " << w.b[l].size() << '\n';
    for (Eigen::Index i = 0; i < w.b[l].size(); ++i) {
      put(w.b[l][i]);
      os << (i + 1 == w.b[l].size() ? '\n' : ' ');
    }
  }
}

inline void write_weights(const NetworkWeights& w, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw WeightsFormatError("cannot open " + path + " for writing");
  write_weights(w, os);
  if (!os) throw WeightsFormatError("write failed: " + path);
}

inline NetworkWeights read_weights(std::istream& is) {
  std::string magic, line;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vofml-weights") throw WeightsFormatError("not a weights file");
  if (version != kWeightsFormatVersion) throw WeightsFormatError("unsupported weights format version");
  std::getline(is, line);
  if (!std::getline(is, line)) throw WeightsFormatError("missing layer line");
  std::istringstream ls(line);
  std::string tag;
  ls >> tag;
  if (tag != "layers") throw WeightsFormatError("missing layer line");
  std::vector<int> dims;
  for (int d; ls >> d;) dims.push_back(d);
  NetworkWeights w;
  try {
    w = NetworkWeights::zeros(dims);
  } catch (const DimensionMismatch& e) {
    throw WeightsFormatError(e.what());
  }
  auto read_value = [&]() {
    std::string tok;
    if (!(is >> tok)) throw WeightsFormatError("truncated weights file");
    double v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw WeightsFormatError("bad value '" + tok + "'");
    return v;
  };
  for (int l = 0; l < w.layers(); ++l) {
    Eigen::Index rows = 0, cols = 0, n = 0;
    if (!(is >> tag >> rows >> cols) || tag != "A" || rows != w.A[l].rows() || cols != w.A[l].cols())
      throw WeightsFormatError("matrix block does not match layer dims");
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) w.A[l](i, j) = read_value();
    if (!(is >> tag >> n) || tag != "b" || n != w.b[l].size())
      throw WeightsFormatError("bias block does not match layer dims");
    for (Eigen::Index i = 0; i < n; ++i) w.b[l][i] = read_value();
  }
  if (is >> tag) throw WeightsFormatError("trailing data after last layer");
  return w;
}

inline NetworkWeights read_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw WeightsFormatError("cannot open " + path);
  return read_weights(is);
}

}  // namespace vofml
