#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "srcseek/env.hpp"
#include "srcseek/geometry.hpp"
#include "srcseek/observation.hpp"
#include "srcseek/sensing.hpp"

namespace srcseek {

struct RobotState {
  Position position;
  double heading = 0.0;  // radians, (-pi, pi]
  double v = 0.0;        // commanded forward speed
  double omega = 0.0;    // commanded yaw rate
};

struct NavConfig {
  double v_max = 0.1;
  double omega_max = 3.0;
  double tol = 0.05;
  double k_omega = 2.0;
  // Integral/derivative slots of the heading controller; unused by pid_step.
  double k_i = 0.0;
  double k_d = 0.0;
  double fs = 10.0;
  double dt = 0.05;
  double stall_time = 10.0;

  void validate() const {
    if (!(v_max > 0 && omega_max > 0 && tol > 0 && k_omega > 0 && fs > 0 && dt > 0 && stall_time > 0)) {
      throw std::invalid_argument("nav config: all parameters must be positive");
    }
  }

  int ticks_per_sample() const { return std::max(1, static_cast<int>(std::lround(1.0 / (fs * dt)))); }
};

struct VelocityCommand {
  double v = 0.0;
  double omega = 0.0;
};

/// Proportional heading control with speed gating: full speed when aligned,
/// zero forward speed when the waypoint is 90 degrees or more off the heading.
inline VelocityCommand pid_step(const RobotState& state, Position waypoint, const NavConfig& cfg) {
  const Position delta = waypoint - state.position;
  const double bearing = std::atan2(delta.y, delta.x);
  const double err = wrap_angle(bearing - state.heading);
  VelocityCommand cmd;
  cmd.omega = std::clamp(cfg.k_omega * err, -cfg.omega_max, cfg.omega_max);
  cmd.v = std::clamp(cfg.v_max * std::max(0.0, std::cos(err)), 0.0, cfg.v_max);
  return cmd;
}

/// Unicycle integration; the new position is clipped to the arena.
inline RobotState kinematic_step(const RobotState& state, VelocityCommand cmd, double dt, const ArenaBounds& bounds) {
  RobotState next = state;
  next.v = cmd.v;
  next.omega = cmd.omega;
  next.position.x += cmd.v * std::cos(state.heading) * dt;
  next.position.y += cmd.v * std::sin(state.heading) * dt;
  next.position = bounds.clip(next.position);
  next.heading = wrap_angle(state.heading + cmd.omega * dt);
  return next;
}

/// Turns a true position into a calibrated SPL: field value, per-mic noise,
/// center-of-robot weighting.
struct Sensor {
  const SignalField* field = nullptr;
  NoiseConfig mic_noise = NoiseConfig::none();
  MicGeometry geometry;

  double measure(Position pos, Rng& rng, double t = 0.0) const {
    return center_spl(simulate_mics(field->value(pos), mic_noise, rng, t), geometry);
  }
};

enum class LegStatus { kMoving, kArrived, kStalled };

/// Drives one robot toward one waypoint, one dt at a time. Samples are due at
/// leg tick 0 and every ticks_per_sample() ticks after.
class LegNavigator {
 public:
  LegNavigator(RobotState start, Position waypoint, const NavConfig& cfg, const ArenaBounds& bounds)
      : state_(start), waypoint_(waypoint), cfg_(cfg), bounds_(bounds) {
    best_distance_ = distance(state_.position, waypoint_);
    status_ = best_distance_ <= cfg_.tol ? LegStatus::kArrived : LegStatus::kMoving;
  }

  LegStatus advance() {
    if (status_ != LegStatus::kMoving) return status_;
    state_ = kinematic_step(state_, pid_step(state_, waypoint_, cfg_), cfg_.dt, bounds_);
    ++ticks_;
    const double d = distance(state_.position, waypoint_);
    if (d <= cfg_.tol) {
      status_ = LegStatus::kArrived;
      state_.v = 0.0;
      state_.omega = 0.0;
    } else if (d < best_distance_ - 0.5 * cfg_.tol) {
      best_distance_ = d;
      last_progress_tick_ = ticks_;
    } else if ((ticks_ - last_progress_tick_) * cfg_.dt >= cfg_.stall_time) {
      status_ = LegStatus::kStalled;
    }
    return status_;
  }

  bool sample_due() const { return ticks_ % cfg_.ticks_per_sample() == 0; }
  LegStatus status() const { return status_; }
  const RobotState& state() const { return state_; }
  Position waypoint() const { return waypoint_; }
  long ticks() const { return ticks_; }

 private:
  RobotState state_;
  Position waypoint_;
  NavConfig cfg_;
  ArenaBounds bounds_;
  long ticks_ = 0;
  long last_progress_tick_ = 0;
  double best_distance_ = 0.0;
  LegStatus status_ = LegStatus::kMoving;
};

struct NavResult {
  RobotState final_state;
  std::vector<Observation> trajectory;
  bool stalled = false;
  long ticks = 0;
};

/// Runs a whole leg to completion, sampling along the way.
inline NavResult navigate_to(const RobotState& start, Position waypoint, const Sensor& sensor,
                             const NavConfig& cfg, const ArenaBounds& bounds, Rng& rng,
                             double t0 = 0.0, int robot = 0) {
  cfg.validate();
  if (!bounds.contains(waypoint)) throw std::invalid_argument("navigate_to: waypoint outside arena");
  LegNavigator leg(start, waypoint, cfg, bounds);
  NavResult out;
  auto record = [&] {
    const double t = t0 + static_cast<double>(leg.ticks()) * cfg.dt;
    const Position p = leg.state().position;
    out.trajectory.push_back({t, robot, p, sensor.measure(p, rng, t), std::nullopt});
  };
  record();
  while (leg.status() == LegStatus::kMoving) {
    leg.advance();
    if (leg.sample_due()) record();
  }
  out.final_state = leg.state();
  out.stalled = leg.status() == LegStatus::kStalled;
  out.ticks = leg.ticks();
  return out;
}

}  // namespace srcseek
