#pragma once

#include <optional>

#include "srcseek/geometry.hpp"

namespace srcseek {

/// One signal sample taken by one robot.
struct Observation {
  double t = 0.0;
  int robot = 0;
  Position position;
  double phi = 0.0;                    // calibrated, unfiltered
  std::optional<double> phi_filtered;  // empty when dropped by the outlier filter

  /// Value used by the deciders.
  double value() const { return phi_filtered.value_or(phi); }
};

}  // namespace srcseek
