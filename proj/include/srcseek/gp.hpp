#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcseek/geometry.hpp"
#include "srcseek/observation.hpp"
#include "srcseek/random.hpp"

namespace srcseek {

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Squared-exponential covariance with additive observation noise.
struct Kernel {
  double length_scale = 0.4;     // m
  double signal_variance = 100;  // dB^2
  double noise_variance = 1.0;   // dB^2

  double operator()(Position a, Position b) const {
    const Position d = a - b;
    return signal_variance * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * length_scale * length_scale));
  }

  void validate() const {
    if (!(length_scale > 0 && signal_variance > 0 && noise_variance >= 0)) {
      throw std::invalid_argument("kernel: need length_scale > 0, signal_variance > 0, noise_variance >= 0");
    }
  }
};

struct GpPrediction {
  double mean = 0.0;
  double stddev = 0.0;
};

namespace detail {

// In-place lower Cholesky of a row-major n x n SPD matrix. Returns false on a
// non-positive pivot.
inline bool cholesky_lower(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double* rj = &a[j * n];
    double s = rj[j];
    for (std::size_t k = 0; k < j; ++k) s -= rj[k] * rj[k];
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    const double ljj = std::sqrt(s);
    rj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* ri = &a[i * n];
      double t = ri[j];
      for (std::size_t k = 0; k < j; ++k) t -= ri[k] * rj[k];
      ri[j] = t / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) a[i * n + k] = 0.0;
  }
  return true;
}

// Solves L z = b in place.
inline void forward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = &l[i * n];
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= ri[k] * b[k];
    b[i] = s / ri[i];
  }
}

// Solves L^T z = b in place.
inline void backward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
    b[ii] = s / l[ii * n + ii];
  }
}

}  // namespace detail

/// Exact GP regression posterior. Immutable once fitted.
class GpModel {
 public:
  static constexpr double kJitterLadder[] = {0.0, 1e-8, 1e-6};

  static GpModel fit(std::span<const Position> inputs, std::span<const double> targets, const Kernel& kernel) {
    kernel.validate();
    if (inputs.empty()) throw GpError("gp fit: no training data");
    if (inputs.size() != targets.size()) throw std::invalid_argument("gp fit: inputs/targets size mismatch");
    if (kernel.noise_variance == 0.0 && has_duplicates(inputs)) {
      throw GpError("gp fit: duplicate inputs with zero noise variance give a singular kernel matrix");
    }

    GpModel m;
    m.kernel_ = kernel;
    m.inputs_.assign(inputs.begin(), inputs.end());
    const std::size_t n = inputs.size();
    double sum = 0.0;
    for (double y : targets) sum += y;
    m.mean_ = sum / static_cast<double>(n);

    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double k = kernel(inputs[i], inputs[j]);
        gram[i * n + j] = k;
        gram[j * n + i] = k;
      }
      gram[i * n + i] += kernel.noise_variance;
    }

    bool ok = false;
    for (double jitter : kJitterLadder) {
      m.chol_ = gram;
      for (std::size_t i = 0; i < n; ++i) m.chol_[i * n + i] += jitter;
      if (detail::cholesky_lower(m.chol_, n)) {
        m.jitter_ = jitter;
        ok = true;
        break;
      }
    }
    if (!ok) throw GpError("gp fit: kernel matrix not positive definite (degenerate data)");

    m.alpha_.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.alpha_[i] = targets[i] - m.mean_;
    m.centered_ = m.alpha_;
    detail::forward_solve(m.chol_, n, m.alpha_);
    detail::backward_solve(m.chol_, n, m.alpha_);
    return m;
  }

  static GpModel fit(std::span<const Observation> data, const Kernel& kernel) {
    std::vector<Position> x;
    std::vector<double> y;
    x.reserve(data.size());
    y.reserve(data.size());
    for (const auto& o : data) {
      x.push_back(o.position);
      y.push_back(o.value());
    }
    return fit(x, y, kernel);
  }

  GpPrediction predict(Position q) const {
    std::vector<double> out_mean, out_std;
    const Position qs[] = {q};
    predict_batch(qs, out_mean, out_std);
    return {out_mean[0], out_std[0]};
  }

  /// Batched posterior: the triangular solves run over all queries at once.
  void predict_batch(std::span<const Position> queries, std::vector<double>& means, std::vector<double>& stds) const {
    const std::size_t n = inputs_.size();
    const std::size_t m = queries.size();
    means.assign(m, mean_);
    stds.assign(m, 0.0);
    // v is n x m row-major; starts as K(X, Q) and becomes L^{-1} K(X, Q).
    std::vector<double> v(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      double* vi = &v[i * m];
      for (std::size_t q = 0; q < m; ++q) {
        vi[q] = kernel_(inputs_[i], queries[q]);
        means[q] += vi[q] * alpha_[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double* vi = &v[i * m];
      const double* li = &chol_[i * n];
      for (std::size_t k = 0; k < i; ++k) {
        const double lik = li[k];
        if (lik == 0.0) continue;
        const double* vk = &v[k * m];
        for (std::size_t q = 0; q < m; ++q) vi[q] -= lik * vk[q];
      }
      const double inv = 1.0 / li[i];
      for (std::size_t q = 0; q < m; ++q) vi[q] *= inv;
    }
    std::vector<double> reduction(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* vi = &v[i * m];
      for (std::size_t q = 0; q < m; ++q) reduction[q] += vi[q] * vi[q];
    }
    for (std::size_t q = 0; q < m; ++q) {
      stds[q] = std::sqrt(std::max(0.0, kernel_.signal_variance - reduction[q]));
    }
  }

  double log_marginal_likelihood() const {
    const std::size_t n = inputs_.size();
    double quad = 0.0, logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      quad += centered_[i] * alpha_[i];
      logdet += std::log(chol_[i * n + i]);
    }
    return -0.5 * quad - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  }

  std::size_t size() const { return inputs_.size(); }
  double training_mean() const { return mean_; }
  double jitter() const { return jitter_; }
  const Kernel& kernel() const { return kernel_; }

 private:
  static bool has_duplicates(std::span<const Position> inputs) {
    std::vector<Position> sorted(inputs.begin(), inputs.end());
    auto less = [](Position a, Position b) { return a.x < b.x || (a.x == b.x && a.y < b.y); };
    std::sort(sorted.begin(), sorted.end(), less);
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  }

  Kernel kernel_;
  std::vector<Position> inputs_;
  std::vector<double> chol_;
  std::vector<double> alpha_;
  std::vector<double> centered_;
  double mean_ = 0.0;
  double jitter_ = 0.0;
};

/// Picks (length scale, noise variance) by log marginal likelihood over a
/// fixed grid; signal variance is kept from `base`.
inline Kernel select_hyperparameters(std::span<const Position> inputs, std::span<const double> targets,
                                     const Kernel& base) {
  static constexpr double kLengths[] = {0.1, 0.2, 0.4, 0.8};
  static constexpr double kNoises[] = {0.1, 1.0, 4.0};
  Kernel best = base;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (double l : kLengths) {
    for (double nv : kNoises) {
      Kernel k{l, base.signal_variance, nv};
      try {
        const double lml = GpModel::fit(inputs, targets, k).log_marginal_likelihood();
        if (lml > best_lml) {
          best_lml = lml;
          best = k;
        }
      } catch (const GpError&) {
      }
    }
  }
  return best;
}

/// Caps a training set: every robot's most recent observation is kept, the
/// rest of the budget is a uniform random subset. Output keeps input order.
inline std::vector<Observation> subsample(std::span<const Observation> data, std::size_t cap, Rng& rng) {
  if (data.size() <= cap) return {data.begin(), data.end()};
  std::vector<bool> keep(data.size(), false);
  std::vector<std::size_t> latest;  // index of most recent observation per robot
  std::vector<int> robots;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = std::find(robots.begin(), robots.end(), data[i].robot);
    if (it == robots.end()) {
      robots.push_back(data[i].robot);
      latest.push_back(i);
    } else {
      auto& cur = latest[static_cast<std::size_t>(it - robots.begin())];
      if (data[i].t >= data[cur].t) cur = i;
    }
  }
  std::size_t kept = 0;
  for (std::size_t idx : latest) {
    if (kept == cap) break;
    keep[idx] = true;
    ++kept;
  }
  std::vector<std::size_t> rest;
  rest.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!keep[i]) rest.push_back(i);
  }
  std::vector<std::size_t> chosen;
  std::sample(rest.begin(), rest.end(), std::back_inserter(chosen), cap - kept, rng);
  for (std::size_t idx : chosen) keep[idx] = true;
  std::vector<Observation> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (keep[i]) out.push_back(data[i]);
  }
  return out;
}

}  // namespace srcseek
