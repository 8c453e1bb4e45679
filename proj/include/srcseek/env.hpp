#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcseek/geometry.hpp"
#include "srcseek/random.hpp"

namespace srcseek {

/// Acoustic point source. Defaults: 20 uPa reference pressure, 0.00495 Pa
/// source amplitude (85 dB at the distance clamp) and a 1 cm clamp.
struct AcousticSource {
  Position location{0.85, 0.85};
  double p0 = 0.00495;
  double p_ref = 20e-6;
  double r_min = 0.01;

  void validate() const {
    if (!location.finite() || !(p0 > 0.0) || !(p_ref > 0.0) || !(r_min > 0.0)) {
      throw std::invalid_argument("acoustic source: p0, p_ref and r_min must be positive");
    }
  }
};

/// Sound pressure level in dB at `pos` for a point source:
///   f = 20 log10(p / p_ref),  p = p0 / (sqrt(2) r),  r = max(|pos - x_s|, r_min)
inline double acoustic_spl(Position pos, const AcousticSource& src) {
  const double r = std::max(distance(pos, src.location), src.r_min);
  const double p = src.p0 / (std::numbers::sqrt2 * r);
  return 20.0 * std::log10(p / src.p_ref);
}

/// Any scalar signal over the plane, in dB.
class SignalField {
 public:
  virtual ~SignalField() = default;
  virtual double value(Position pos) const = 0;
  double operator()(Position pos) const { return value(pos); }
};

class PointSourceField final : public SignalField {
 public:
  explicit PointSourceField(AcousticSource src) : src_(src) { src_.validate(); }
  double value(Position pos) const override { return acoustic_spl(pos, src_); }
  const AcousticSource& source() const { return src_; }

 private:
  AcousticSource src_;
};

/// Measurement noise: Gaussian jitter, occasionally replaced by a large
/// positive outlier drawn from [outlier_min, outlier_max].
struct NoiseConfig {
  double gaussian_sigma = 1.0;
  double outlier_probability = 0.02;
  double outlier_min = 15.0;
  double outlier_max = 30.0;

  static NoiseConfig none() { return {0.0, 0.0, 0.0, 0.0}; }

  bool is_zero() const { return gaussian_sigma == 0.0 && outlier_probability == 0.0; }

  void validate() const {
    if (!(gaussian_sigma >= 0.0)) throw std::invalid_argument("noise: gaussian_sigma must be >= 0");
    if (!(outlier_probability >= 0.0 && outlier_probability <= 1.0)) {
      throw std::invalid_argument("noise: outlier_probability must be in [0, 1]");
    }
    if (!(outlier_min <= outlier_max)) throw std::invalid_argument("noise: outlier_min > outlier_max");
  }
};

/// Perturbs a clean value. Two draws are consumed per call regardless of the
/// branch taken, so the stream position depends only on the call count.
inline double perturb(double clean, const NoiseConfig& cfg, Rng& rng) {
  const double u = uniform01(rng);
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  if (u < cfg.outlier_probability) {
    return clean + cfg.outlier_min + (cfg.outlier_max - cfg.outlier_min) * uniform01(rng);
  }
  return clean + cfg.gaussian_sigma * z;
}

inline double noisy_sample(const SignalField& field, Position pos, const NoiseConfig& cfg, Rng& rng) {
  const double clean = field.value(pos);
  if (cfg.is_zero()) return clean;
  return perturb(clean, cfg, rng);
}

/// Regular grid of dB values. values[j * nx + i] sits at (xs[i], ys[j]).
struct GridField {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[j * xs.size() + i]; }

  void validate() const {
    if (xs.size() < 2 || ys.size() < 2) throw std::invalid_argument("grid: need at least 2 samples per axis");
    if (values.size() != xs.size() * ys.size()) throw std::invalid_argument("grid: value count does not match axes");
    auto strictly_increasing = [](const std::vector<double>& v) {
      return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    if (!strictly_increasing(xs) || !strictly_increasing(ys)) {
      throw std::invalid_argument("grid: axes must be strictly increasing");
    }
  }
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = (i == n - 1) ? hi : lo + (hi - lo) * i / (n - 1);
  }
  return out;
}

template <typename Sampler>
GridField grid_scan_with(Sampler&& sample, const ArenaBounds& bounds, int resolution) {
  if (resolution < 2) throw std::invalid_argument("grid_scan: resolution must be >= 2");
  bounds.validate();
  GridField g;
  g.xs = linspace(bounds.lower.x, bounds.upper.x, resolution);
  g.ys = linspace(bounds.lower.y, bounds.upper.y, resolution);
  g.values.reserve(g.xs.size() * g.ys.size());
  for (double y : g.ys) {
    for (double x : g.xs) g.values.push_back(sample(Position{x, y}));
  }
  return g;
}

inline GridField grid_scan(const SignalField& field, const ArenaBounds& bounds, int resolution) {
  return grid_scan_with([&](Position p) { return field.value(p); }, bounds, resolution);
}

/// Bilinear interpolation over a GridField; queries outside the hull are
/// clamped to the nearest boundary point.
class InterpolatedField final : public SignalField {
 public:
  explicit InterpolatedField(GridField grid) : grid_(std::move(grid)) { grid_.validate(); }

  double value(Position pos) const override {
    const auto [i, tx] = locate(grid_.xs, pos.x);
    const auto [j, ty] = locate(grid_.ys, pos.y);
    const double v00 = grid_.at(i, j);
    const double v10 = grid_.at(i + 1, j);
    const double v01 = grid_.at(i, j + 1);
    const double v11 = grid_.at(i + 1, j + 1);
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
  }

  const GridField& grid() const { return grid_; }

 private:
  // Cell index and local coordinate in [0, 1] for a clamped query.
  static std::pair<std::size_t, double> locate(const std::vector<double>& axis, double q) {
    q = std::clamp(q, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), q);
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
    const std::size_t lo = hi - 1;
    return {lo, (q - axis[lo]) / (axis[hi] - axis[lo])};
  }

  GridField grid_;
};

inline std::unique_ptr<SignalField> interp_field(GridField grid) {
  return std::make_unique<InterpolatedField>(std::move(grid));
}

// GridField CSV: header `x,y,phi_db`, rows ordered by y then x, %.9g.

inline void write_grid_csv(std::ostream& os, const GridField& g) {
  os << "x,y,phi_db\n";
  char buf[96];
  for (std::size_t j = 0; j < g.ys.size(); ++j) {
    for (std::size_t i = 0; i < g.xs.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", g.xs[i], g.ys[j], g.at(i, j));
      os << buf;
    }
  }
}

inline void write_grid_csv(const std::string& path, const GridField& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write grid file: " + path);
  write_grid_csv(os, g);
  if (!os) throw std::runtime_error("error writing grid file: " + path);
}

inline GridField read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "x,y,phi_db") {
    throw std::runtime_error("grid csv: expected header x,y,phi_db");
  }
  std::vector<Position> pts;
  std::vector<double> vals;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    double x = 0, y = 0, v = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ls(line);
    if (!(ls >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("grid csv: malformed row at line " + std::to_string(lineno));
    }
    pts.push_back({x, y});
    vals.push_back(v);
  }
  GridField g;
  for (const auto& p : pts) {
    if (g.xs.empty() || p.x > g.xs.back()) g.xs.push_back(p.x);
    if (p.x == pts.front().x && (g.ys.empty() || p.y > g.ys.back())) g.ys.push_back(p.y);
  }
  g.values = std::move(vals);
  g.validate();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].x != g.xs[k % g.xs.size()] || pts[k].y != g.ys[k / g.xs.size()]) {
      throw std::runtime_error("grid csv: rows are not a regular grid ordered by y then x");
    }
  }
  return g;
}

inline GridField read_grid_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open grid file: " + path);
  return read_grid_csv(is);
}

}  // namespace srcseek
