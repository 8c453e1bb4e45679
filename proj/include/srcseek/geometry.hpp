#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace srcseek {

/// Planar position in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
  friend Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
  friend Position operator*(double s, Position a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Position a, Position b) = default;

  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Position a, Position b) { return (a - b).norm(); }

/// Rectangular search region [lower, upper] (componentwise).
struct ArenaBounds {
  Position lower{-1.0, -1.0};
  Position upper{1.0, 1.0};

  void validate() const {
    if (!lower.finite() || !upper.finite() || !(lower.x < upper.x) || !(lower.y < upper.y)) {
      throw std::invalid_argument("arena bounds: lower must be strictly below upper");
    }
  }

  bool contains(Position p) const {
    return p.x >= lower.x && p.x <= upper.x && p.y >= lower.y && p.y <= upper.y;
  }

  Position clip(Position p) const {
    return {std::clamp(p.x, lower.x, upper.x), std::clamp(p.y, lower.y, upper.y)};
  }

  double diagonal() const { return distance(lower, upper); }
  double width() const { return upper.x - lower.x; }
  double height() const { return upper.y - lower.y; }
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

}  // namespace srcseek
