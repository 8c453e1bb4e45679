#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "srcseek/env.hpp"
#include "srcseek/random.hpp"

namespace srcseek {

/// Four-microphone layout on a round robot body (centimeters / degrees).
struct MicGeometry {
  double body_radius = 3.5;
  std::array<double, 4> insets{0.35, 0.35, 1.25, 0.2};
  // Not used by the calibration weights; kept for directional models.
  std::array<double, 4> angles_deg{3.5, 75.0, 285.0, 180.0};

  void validate() const {
    if (!(body_radius > 0.0)) throw std::invalid_argument("mic geometry: body radius must be positive");
    for (double d : insets) {
      if (!(d > 0.0 && d < body_radius)) {
        throw std::invalid_argument("mic geometry: each inset must satisfy 0 < d < r");
      }
    }
  }
};

struct MicArrayReading {
  std::array<double, 4> values{};
  double timestamp = 0.0;
};

/// Calibration weights w_k = (r / (r - d_k)) / D with
/// D = 2r/(r - d_0) + r/(r - d_2) + r/(r - d_3). They sum to one when d_0 == d_1.
inline std::array<double, 4> center_weights(const MicGeometry& geom) {
  geom.validate();
  const double r = geom.body_radius;
  const auto& d = geom.insets;
  const double denom = 2.0 * r / (r - d[0]) + r / (r - d[2]) + r / (r - d[3]);
  std::array<double, 4> w{};
  for (std::size_t k = 0; k < 4; ++k) w[k] = (r / (r - d[k])) / denom;
  return w;
}

/// SPL at the robot center from one mic packet.
inline double center_spl(const MicArrayReading& reading, const MicGeometry& geom) {
  const auto w = center_weights(geom);
  double phi = 0.0;
  for (std::size_t k = 0; k < 4; ++k) phi += reading.values[k] * w[k];
  return phi;
}

inline MicArrayReading simulate_mics(double true_phi, const NoiseConfig& cfg, Rng& rng, double timestamp = 0.0) {
  MicArrayReading out;
  out.timestamp = timestamp;
  for (double& v : out.values) v = cfg.is_zero() ? true_phi : perturb(true_phi, cfg, rng);
  return out;
}

struct FilterConfig {
  int window = 11;
  int smoothing_width = 5;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("filter: window must be odd and >= 3");
    if (smoothing_width < 1 || smoothing_width % 2 == 0) {
      throw std::invalid_argument("filter: smoothing width must be odd and >= 1");
    }
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sequence");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

/// Outlier threshold for a window: median + n. The count n is added to a dB
/// value as-is.
inline double outlier_threshold(std::span<const double> window, int n) {
  if (window.empty()) throw std::invalid_argument("remove_outliers: empty window");
  return median({window.begin(), window.end()}) + n;
}

/// Keep flags for a window; false marks values above median + n.
inline std::vector<bool> outlier_mask(std::span<const double> window, int n) {
  const double threshold = outlier_threshold(window, n);
  std::vector<bool> keep(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) keep[i] = !(window[i] > threshold);
  return keep;
}

inline std::vector<double> remove_outliers(std::span<const double> window, int n) {
  const double threshold = outlier_threshold(window, n);
  std::vector<double> out;
  out.reserve(window.size());
  for (double v : window) {
    if (!(v > threshold)) out.push_back(v);
  }
  return out;
}

/// Centered moving average. Windows are truncated at the edges, so every
/// output averages only in-range samples.
inline std::vector<double> smooth(std::span<const double> series, int width) {
  if (width < 1 || width % 2 == 0) throw std::invalid_argument("smooth: width must be odd and >= 1");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const std::ptrdiff_t half = width / 2;
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double sum = 0.0;
    for (auto k = lo; k <= hi; ++k) sum += series[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Two-stage filter over a trajectory stream: outlier removal in consecutive
/// non-overlapping blocks of `window` samples (the tail block may be shorter),
/// then smoothing of the survivors. Returns one entry per input sample; removed
/// samples are NaN.
inline std::vector<double> filter_stream(std::span<const double> raw, const FilterConfig& cfg) {
  cfg.validate();
  std::vector<double> out(raw.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> kept_idx;
  std::vector<double> kept;
  const auto block = static_cast<std::size_t>(cfg.window);
  for (std::size_t start = 0; start < raw.size(); start += block) {
    const std::size_t len = std::min(block, raw.size() - start);
    const auto mask = outlier_mask(raw.subspan(start, len), cfg.window);
    for (std::size_t i = 0; i < len; ++i) {
      if (mask[i]) {
        kept_idx.push_back(start + i);
        kept.push_back(raw[start + i]);
      }
    }
  }
  const auto smoothed = smooth(kept, cfg.smoothing_width);
  for (std::size_t k = 0; k < kept_idx.size(); ++k) out[kept_idx[k]] = smoothed[k];
  return out;
}

}  // namespace srcseek
