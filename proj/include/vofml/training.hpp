#pragma once

// ADAM followed by a quasi-Newton phase (limited-memory by default, dense
// BFGS on request). The weights with the lowest validation loss seen at
// any checkpoint are returned.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "vofml/network.hpp"

namespace vofml {

class DivergenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainProgress {
  std::string phase;
  int step = 0;
  double train_loss = 0;
  double validation_loss = 0;
};

struct TrainSchedule {
  int adam_epochs = 5000;
  int qn_steps = 5000;
  bool full_bfgs = false;
  std::size_t batch_size = 0;  // 0: full batch
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int history = 20;
  LossTarget target = LossTarget::Raw;
  std::uint64_t seed = 0;
  int validate_every = 1;
  std::function<void(const TrainProgress&)> on_progress;
};

struct TrainResult {
  NetworkWeights weights;
  double best_validation = std::numeric_limits<double>::infinity();
  std::string best_phase = "init";
  int best_step = 0;
  int adam_epochs_run = 0;
  int qn_steps_run = 0;
};

namespace train_detail {

inline void require_finite(double loss, const char* phase) {
  if (!std::isfinite(loss)) throw DivergenceDetected(std::string("non-finite training loss during ") + phase);
}

struct Objective {
  const LossFunction& loss;
  NetworkWeights& w;
  double operator()(const VectorXd& x, VectorXd& g) {
    w.unflatten(x);
    return loss.evaluate(w, &g);
  }
};

struct LineSearchResult {
  bool ok = false;
  double t = 0;
  double f = 0;
  VectorXd x, g;
};

/// Weak Wolfe conditions by bracketing bisection/doubling.
inline LineSearchResult weak_wolfe(Objective& obj, const VectorXd& x0, double f0, const VectorXd& g0,
                                   const VectorXd& d, double t0, double c1 = 1e-4, double c2 = 0.9,
                                   int max_evals = 40) {
  const double slope = g0.dot(d);
  double lo = 0, hi = std::numeric_limits<double>::infinity(), t = t0;
  LineSearchResult r;
  for (int k = 0; k < max_evals; ++k) {
    r.x = x0 + t * d;
    r.f = obj(r.x, r.g);
    if (!std::isfinite(r.f) || r.f > f0 + c1 * t * slope) {
      hi = t;
    } else if (r.g.dot(d) < c2 * slope) {
      lo = t;
    } else {
      r.ok = true;
      r.t = t;
      return r;
    }
    t = std::isinf(hi) ? 2 * lo : 0.5 * (lo + hi);
  }
  return r;
}

}  // namespace train_detail

inline TrainResult train(const NetworkWeights& w0, const Dataset& train_set, const Dataset& validation_set,
                         const TrainSchedule& schedule) {
  const LossFunction loss(train_set, schedule.target);
  const LossFunction val_loss(validation_set, schedule.target);
  NetworkWeights w = w0;
  TrainResult result;
  result.weights = w0;
  result.best_validation = val_loss.evaluate(w0, nullptr);

  auto checkpoint = [&](const char* phase, int step, double train_loss) {
    const double v = val_loss.evaluate(w, nullptr);
    if (v < result.best_validation) {
      result.best_validation = v;
      result.weights = w;
      result.best_phase = phase;
      result.best_step = step;
    }
    if (schedule.on_progress) schedule.on_progress({phase, step, train_loss, v});
  };
  const int every = std::max(1, schedule.validate_every);

  // ---- ADAM
  if (schedule.adam_epochs > 0) {
    VectorXd x = w.flatten(), m = VectorXd::Zero(x.size()), v = VectorXd::Zero(x.size()), g;
    const std::size_t n = loss.size();
    const std::size_t batch = schedule.batch_size == 0 ? n : std::min(schedule.batch_size, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    long t = 0;
    for (int epoch = 1; epoch <= schedule.adam_epochs; ++epoch) {
      if (batch < n) {
        Rng rng(schedule.seed, {0xada, std::uint64_t(epoch)});
        std::shuffle(order.begin(), order.end(), rng.engine());
      }
      double epoch_loss = 0;
      for (std::size_t s = 0; s < n; s += batch) {
        const std::size_t e = std::min(n, s + batch);
        double f;
        if (batch == n) {
          f = loss.evaluate(w, &g);
        } else {
          std::vector<std::size_t> idx(order.begin() + s, order.begin() + e);
          f = loss.evaluate_subset(w, &g, idx);
        }
        train_detail::require_finite(f, "ADAM");
        epoch_loss += f * (e - s);
        ++t;
        m = schedule.beta1 * m + (1 - schedule.beta1) * g;
        v = schedule.beta2 * v + (1 - schedule.beta2) * g.cwiseAbs2();
        const double c1 = 1 - std::pow(schedule.beta1, static_cast<double>(t));
        const double c2 = 1 - std::pow(schedule.beta2, static_cast<double>(t));
        x.array() -= schedule.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + schedule.epsilon);
        w.unflatten(x);
      }
      result.adam_epochs_run = epoch;
      if (epoch % every == 0 || epoch == schedule.adam_epochs) checkpoint("adam", epoch, epoch_loss / n);
    }
  }

  // ---- quasi-Newton
  if (schedule.qn_steps > 0) {
    train_detail::Objective obj{loss, w};
    VectorXd x = w.flatten(), g;
    double f = obj(x, g);
    train_detail::require_finite(f, "quasi-Newton");
    std::deque<std::pair<VectorXd, VectorXd>> memory;  // (s, y), limited-memory variant
    MatrixXd H;                                          // inverse Hessian, dense variant
    bool have_H = false;
    for (int step = 1; step <= schedule.qn_steps; ++step) {
      VectorXd d;
      if (schedule.full_bfgs) {
        d = have_H ? VectorXd(-(H * g)) : VectorXd(-g);
      } else {
        VectorXd q = g;
        std::vector<double> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
          const auto& [s, y] = memory[i];
          alpha[i] = s.dot(q) / y.dot(s);
          q -= alpha[i] * y;
        }
        if (!memory.empty()) {
          const auto& [s, y] = memory.back();
          q *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
          const auto& [s, y] = memory[i];
          const double b = y.dot(q) / y.dot(s);
          q += (alpha[i] - b) * s;
        }
        d = -q;
      }
      bool fresh = schedule.full_bfgs ? !have_H : memory.empty();
      if (g.dot(d) >= 0) {
        memory.clear();
        have_H = false;
        d = -g;
        fresh = true;
      }
      const double t0 = fresh ? std::min(1.0, 1.0 / std::max(g.norm(), 1e-300)) : 1.0;
      auto ls = train_detail::weak_wolfe(obj, x, f, g, d, t0);
      if (!ls.ok) {
        if (fresh) {
          w.unflatten(x);
          break;  // no progress possible along steepest descent
        }
        memory.clear();
        have_H = false;
        w.unflatten(x);
        continue;
      }
      VectorXd s = ls.x - x, y = ls.g - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (schedule.full_bfgs) {
          const double rho = 1.0 / sy;
          if (!have_H) {
            H = MatrixXd::Identity(x.size(), x.size()) * (sy / y.squaredNorm());
            have_H = true;
          }
          const VectorXd Hy = H * y;
          const double yHy = y.dot(Hy);
          H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
          H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
        } else {
          memory.emplace_back(std::move(s), std::move(y));
          if (static_cast<int>(memory.size()) > schedule.history) memory.pop_front();
        }
      }
      x = std::move(ls.x);
      g = std::move(ls.g);
      f = ls.f;
      train_detail::require_finite(f, "quasi-Newton");
      w.unflatten(x);
      result.qn_steps_run = step;
      if (step % every == 0 || step == schedule.qn_steps) checkpoint(schedule.full_bfgs ? "bfgs" : "lbfgs", step, f);
    }
  }
  return result;
}

}  // namespace vofml
