#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "srcseek/algos.hpp"
#include "srcseek/env.hpp"
#include "srcseek/geometry.hpp"
#include "srcseek/nav.hpp"
#include "srcseek/observation.hpp"
#include "srcseek/random.hpp"
#include "srcseek/sensing.hpp"
#include "srcseek/trace.hpp"

namespace srcseek {

enum class FieldMode { kAnalytic, kNoisy, kGrid };
enum class InitialWaypoints { kFan, kRandom };

struct MissionConfig {
  std::string name = "mission";
  ArenaBounds bounds;
  AcousticSource source;
  FieldMode field_mode = FieldMode::kAnalytic;
  std::string grid_path;                   // grid replay source file
  std::shared_ptr<const GridField> grid;   // grid replay data (loaded from grid_path when null)
  NoiseConfig noise;                       // per-mic noise, used in kNoisy mode
  MicGeometry mics;
  FilterConfig filter;
  std::string algorithm = "bs";
  AlgorithmParams params;
  int robots = 4;
  std::optional<Position> start = Position{0.0, 0.0};  // nullopt: random per robot
  double random_start_clearance = 0.4;
  NavConfig nav;
  InitialWaypoints initial_waypoints = InitialWaypoints::kFan;
  double initial_radius = 0.5;  // capped by the Bayes-Swarm reach V T
  double tolerance = 0.2;
  double time_limit = 300.0;
  double decision_latency = 0.0;
  double hold_time = 2.0;  // idle time when a decider keeps the robot in place
  std::uint64_t seed = 0;
  bool parallel_decisions = false;
  int snapshot_resolution = 0;

  void validate() const {
    bounds.validate();
    source.validate();
    noise.validate();
    mics.validate();
    filter.validate();
    nav.validate();
    if (canonical_algorithm(algorithm).empty()) throw std::invalid_argument("unknown algorithm id: " + algorithm);
    if (robots < 1) throw std::invalid_argument("mission: need at least one robot");
    if (start && !bounds.contains(*start)) throw std::invalid_argument("mission: start outside arena");
    if (!(tolerance > 0)) throw std::invalid_argument("mission: tolerance must be positive");
    if (!(time_limit > 0)) throw std::invalid_argument("mission: time limit must be positive");
    if (!(initial_radius > 0)) throw std::invalid_argument("mission: initial radius must be positive");
    if (!(decision_latency >= 0) || !(hold_time > 0)) throw std::invalid_argument("mission: bad latency/hold time");
    if (!(random_start_clearance >= 0)) throw std::invalid_argument("mission: bad start clearance");
    if (field_mode == FieldMode::kGrid && !grid && grid_path.empty()) {
      throw std::invalid_argument("mission: grid field mode needs a grid file");
    }
    if (snapshot_resolution == 1 || snapshot_resolution < 0) throw std::invalid_argument("mission: snapshot resolution must be 0 or >= 2");
  }

  /// Decider parameters with the mission-level couplings applied.
  AlgorithmParams effective_params() const {
    AlgorithmParams p = params;
    p.bayes.speed = nav.v_max;
    p.bayes.snapshot_resolution = snapshot_resolution;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Bus

enum class Topic { kObservations, kWaypoints, kPositions };

struct BusMessage {
  Topic topic = Topic::kObservations;
  int sender = 0;
  long tick = 0;
  std::variant<std::vector<Observation>, Position> payload;
};

/// In-process publish/subscribe log. Subscribers keep a cursor and pull
/// everything published strictly before a given tick.
class Bus {
 public:
  void publish(BusMessage msg) {
    if (!log_.empty() && msg.tick < log_.back().tick) throw std::logic_error("bus: out-of-order publish");
    log_.push_back(std::move(msg));
  }

  template <typename Handler>
  void consume(std::size_t& cursor, int self, long before_tick, Handler&& handle) const {
    while (cursor < log_.size() && log_[cursor].tick < before_tick) {
      const BusMessage& m = log_[cursor++];
      if (m.sender != self) handle(m);
    }
  }

  std::span<const BusMessage> log() const { return log_; }

 private:
  std::vector<BusMessage> log_;
};

// ---------------------------------------------------------------------------
// Termination

struct Termination {
  enum class Kind { kContinue, kSuccess, kTimeout } kind = Kind::kContinue;
  int robot = -1;
};

/// Success when some robot is within `tolerance` (inclusive) of the source;
/// the closest such robot, lowest id on ties, is the finder. Success beats
/// timeout within the same tick.
inline Termination check_termination(std::span<const Position> positions, Position source, double tolerance,
                                     double clock, double limit) {
  int finder = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double d = distance(positions[i], source);
    if (d <= tolerance && d < best) {
      best = d;
      finder = static_cast<int>(i);
    }
  }
  if (finder >= 0) return {Termination::Kind::kSuccess, finder};
  if (clock >= limit - 1e-9) return {Termination::Kind::kTimeout, -1};
  return {};
}

// ---------------------------------------------------------------------------
// Seed streams

struct RobotStreams {
  Rng decider;
  Rng mic_noise;
  Rng start;
  Rng initial_waypoint;
};

struct SeedStreams {
  std::vector<RobotStreams> robots;
  Rng field_noise;
};

inline SeedStreams seed_streams(std::uint64_t master, int robot_count) {
  SeedStreams s{{}, make_stream(master, StreamKind::kFieldNoise)};
  for (int r = 0; r < robot_count; ++r) {
    s.robots.push_back({make_stream(master, StreamKind::kDecider, r), make_stream(master, StreamKind::kMicNoise, r),
                        make_stream(master, StreamKind::kStart, r),
                        make_stream(master, StreamKind::kInitialWaypoint, r)});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Mission

struct SnapshotRecord {
  double t = 0.0;
  int robot = 0;
  Position waypoint;
  BeliefSnapshot belief;
};

struct RobotSummary {
  int decisions = 0;
  int explore_triggers = 0;
  int fallbacks = 0;
  int stalls = 0;
  std::size_t batches_received = 0;
  std::size_t observations_received = 0;
};

struct MissionResult {
  bool success = false;
  double mission_time = 0.0;
  std::optional<int> finder;
  std::string termination;  // "success" or "timeout"
  std::vector<TraceRow> trace;
  std::vector<RobotSummary> robots;
  std::vector<SnapshotRecord> snapshots;
  std::size_t batches_published = 0;
  std::uint64_t seed = 0;
};

inline std::unique_ptr<SignalField> make_field(const MissionConfig& cfg) {
  if (cfg.field_mode == FieldMode::kGrid) {
    return std::make_unique<InterpolatedField>(cfg.grid ? *cfg.grid : read_grid_csv(cfg.grid_path));
  }
  return std::make_unique<PointSourceField>(cfg.source);
}

inline std::vector<Position> fan_waypoints(Position start, double radius, int n, const ArenaBounds& bounds) {
  std::vector<Position> out;
  for (int r = 0; r < n; ++r) {
    const double a = std::numbers::pi / 4 + 2.0 * std::numbers::pi * r / n;
    out.push_back(bounds.clip({start.x + radius * std::cos(a), start.y + radius * std::sin(a)}));
  }
  return out;
}

/// Discrete-time world of robots that navigate while sampling,
/// broadcast the filtered batch, decide, repeat.
class World {
 public:
  enum class Mode { kMoving, kHolding, kWaiting, kDeciding };

  struct Robot {
    int id = 0;
    std::unique_ptr<Decider> decider;
    RobotStreams rng;
    RobotState state;
    Mode mode = Mode::kDeciding;
    std::optional<LegNavigator> leg;
    long leg_ticks = 0;
    long hold_ticks = 0;
    long ready_tick = 0;
    long last_sample_tick = -1;
    Position waypoint;
    std::optional<Position> pending;
    std::vector<Observation> leg_buffer;
    std::vector<Observation> own;
    std::vector<Observation> peers;
    std::vector<PeerWaypoint> peer_waypoints;
    std::size_t inbox = 0;
    RobotSummary summary;
  };

  explicit World(MissionConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    field_ = make_field(cfg_);
    sensor_ = Sensor{field_.get(), cfg_.field_mode == FieldMode::kNoisy ? cfg_.noise : NoiseConfig::none(),
                     cfg_.mics};
    auto streams = seed_streams(cfg_.seed, cfg_.robots);
    const AlgorithmParams params = cfg_.effective_params();
    limit_ticks_ = std::lround(cfg_.time_limit / cfg_.nav.dt);
    hold_ticks_ = std::max(1L, std::lround(cfg_.hold_time / cfg_.nav.dt));
    latency_ticks_ = std::lround(cfg_.decision_latency / cfg_.nav.dt);

    for (int r = 0; r < cfg_.robots; ++r) {
      Robot robot;
      robot.id = r;
      robot.decider = make_decider(cfg_.algorithm, params);
      robot.rng = std::move(streams.robots[static_cast<std::size_t>(r)]);
      robot.state.position = cfg_.start ? *cfg_.start : random_start(robot.rng.start);
      robots_.push_back(std::move(robot));
    }
    result_.seed = cfg_.seed;
  }

  const MissionConfig& config() const { return cfg_; }
  const std::vector<Robot>& robots() const { return robots_; }
  const Bus& bus() const { return bus_; }
  long tick() const { return tick_; }
  double clock() const { return static_cast<double>(tick_) * cfg_.nav.dt; }
  bool finished() const { return finished_; }

  /// Places robots and plans the first legs. Must be called once before step().
  void start() {
    if (started_) return;
    started_ = true;
    if (check_and_finish()) return;
    const double radius = std::min(cfg_.initial_radius, cfg_.effective_params().bayes.reach());
    for (auto& robot : robots_) {
      Position wp;
      if (cfg_.initial_waypoints == InitialWaypoints::kFan) {
        wp = fan_waypoints(robot.state.position, radius, cfg_.robots, cfg_.bounds)[static_cast<std::size_t>(robot.id)];
      } else {
        wp = random_in_disc(robot.state.position, radius, cfg_.bounds, robot.rng.initial_waypoint);
      }
      commit_decision(robot, Decision{.waypoint = wp});
    }
  }

  /// One dt: move, check termination, decide.
  void step() {
    if (!started_) start();
    if (finished_) return;
    ++tick_;
    for (auto& robot : robots_) advance_robot(robot);
    if (check_and_finish()) return;

    std::vector<Robot*> deciding;
    for (auto& robot : robots_) {
      if (robot.mode == Mode::kDeciding) deciding.push_back(&robot);
    }
    if (deciding.empty()) return;
    for (Robot* r : deciding) pull_inbox(*r);

    std::vector<Decision> decisions(deciding.size());
    auto run_one = [&](std::size_t i) {
      Robot& r = *deciding[i];
      DecisionContext ctx{r.id, r.state.position, r.own, r.peers, r.peer_waypoints, cfg_.bounds, clock(),
                          &r.rng.decider};
      try {
        decisions[i] = r.decider->decide(ctx);
      } catch (const std::exception&) {
        decisions[i].waypoint = random_in_disc(r.state.position, cfg_.effective_params().bayes.reach(), cfg_.bounds,
                                               r.rng.decider);
        decisions[i].fallback = true;
      }
    };
    if (cfg_.parallel_decisions && deciding.size() > 1) {
      std::vector<std::future<void>> jobs;
      for (std::size_t i = 0; i < deciding.size(); ++i) jobs.push_back(std::async(std::launch::async, run_one, i));
      for (auto& j : jobs) j.get();
    } else {
      for (std::size_t i = 0; i < deciding.size(); ++i) run_one(i);
    }
    for (std::size_t i = 0; i < deciding.size(); ++i) commit_decision(*deciding[i], std::move(decisions[i]));
  }

  MissionResult run() {
    start();
    while (!finished_) step();
    return result();
  }

  /// Result so far; trace rows are ordered by (time, robot, emission order).
  MissionResult result() const {
    MissionResult out = result_;
    std::vector<std::size_t> order(rows_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (rows_[a].tick != rows_[b].tick) return rows_[a].tick < rows_[b].tick;
      const int ra = rows_[a].robot < 0 ? std::numeric_limits<int>::max() : rows_[a].robot;
      const int rb = rows_[b].robot < 0 ? std::numeric_limits<int>::max() : rows_[b].robot;
      return ra < rb;
    });
    out.trace.reserve(rows_.size());
    for (std::size_t i : order) out.trace.push_back(rows_[i]);
    for (const auto& r : robots_) out.robots.push_back(r.summary);
    return out;
  }

 private:
  Position random_start(Rng& rng) const {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Position p{uniform(rng, cfg_.bounds.lower.x, cfg_.bounds.upper.x),
                       uniform(rng, cfg_.bounds.lower.y, cfg_.bounds.upper.y)};
      if (distance(p, cfg_.source.location) >= cfg_.random_start_clearance) return p;
    }
    throw std::invalid_argument("mission: no start position satisfies the source clearance");
  }

  void emit(TraceRow row) { rows_.push_back(std::move(row)); }

  void sample(Robot& r) {
    if (r.last_sample_tick == tick_) return;
    r.last_sample_tick = tick_;
    const double t = clock();
    r.leg_buffer.push_back({t, r.id, r.state.position, sensor_.measure(r.state.position, r.rng.mic_noise, t),
                            std::nullopt});
  }

  bool sample_due(const Robot& r) const { return r.leg_ticks % cfg_.nav.ticks_per_sample() == 0; }

  void advance_robot(Robot& r) {
    switch (r.mode) {
      case Mode::kMoving: {
        const LegStatus st = r.leg->advance();
        r.state = r.leg->state();
        r.leg_ticks = r.leg->ticks();
        if (sample_due(r)) sample(r);
        if (st != LegStatus::kMoving) {
          const bool stalled = st == LegStatus::kStalled;
          if (stalled) ++r.summary.stalls;
          emit({tick_, clock(), r.id, stalled ? TraceEvent::kStalled : TraceEvent::kWaypointReached,
                r.state.position, std::nullopt, std::nullopt, r.waypoint});
          finish_leg(r);
        }
        break;
      }
      case Mode::kHolding:
        ++r.leg_ticks;
        if (sample_due(r)) sample(r);
        if (r.leg_ticks >= r.hold_ticks) {
          emit({tick_, clock(), r.id, TraceEvent::kWaypointReached, r.state.position, std::nullopt, std::nullopt,
                r.waypoint});
          finish_leg(r);
        }
        break;
      case Mode::kWaiting:
        if (tick_ >= r.ready_tick) begin_leg(r, *r.pending);
        break;
      case Mode::kDeciding:
        break;
    }
  }

  // Filters the leg's samples, records them, broadcasts the kept batch.
  void finish_leg(Robot& r) {
    std::vector<double> raw;
    raw.reserve(r.leg_buffer.size());
    for (const auto& o : r.leg_buffer) raw.push_back(o.phi);
    const auto filtered = filter_stream(raw, cfg_.filter);
    std::vector<Observation> batch;
    for (std::size_t i = 0; i < r.leg_buffer.size(); ++i) {
      Observation& o = r.leg_buffer[i];
      if (!std::isnan(filtered[i])) o.phi_filtered = filtered[i];
      emit({std::lround(o.t / cfg_.nav.dt), o.t, r.id, TraceEvent::kSample, o.position, o.phi, o.phi_filtered,
            std::nullopt});
      if (o.phi_filtered) batch.push_back(o);
    }
    r.leg_buffer.clear();
    r.own.insert(r.own.end(), batch.begin(), batch.end());
    bus_.publish({Topic::kObservations, r.id, tick_, std::move(batch)});
    bus_.publish({Topic::kPositions, r.id, tick_, r.state.position});
    ++result_.batches_published;
    r.leg.reset();
    r.mode = Mode::kDeciding;
  }

  void pull_inbox(Robot& r) {
    bus_.consume(r.inbox, r.id, tick_, [&](const BusMessage& m) {
      switch (m.topic) {
        case Topic::kObservations: {
          const auto& obs = std::get<std::vector<Observation>>(m.payload);
          r.peers.insert(r.peers.end(), obs.begin(), obs.end());
          ++r.summary.batches_received;
          r.summary.observations_received += obs.size();
          break;
        }
        case Topic::kWaypoints: {
          const Position wp = std::get<Position>(m.payload);
          auto it = std::find_if(r.peer_waypoints.begin(), r.peer_waypoints.end(),
                                 [&](const PeerWaypoint& p) { return p.robot == m.sender; });
          if (it == r.peer_waypoints.end()) {
            r.peer_waypoints.push_back({m.sender, wp});
            std::sort(r.peer_waypoints.begin(), r.peer_waypoints.end(),
                      [](const PeerWaypoint& a, const PeerWaypoint& b) { return a.robot < b.robot; });
          } else {
            it->waypoint = wp;
          }
          break;
        }
        case Topic::kPositions:
          break;
      }
    });
  }

  void commit_decision(Robot& r, Decision d) {
    const Position wp = cfg_.bounds.clip(d.waypoint);
    ++r.summary.decisions;
    if (d.explored) {
      ++r.summary.explore_triggers;
      emit({tick_, clock(), r.id, TraceEvent::kExplore, r.state.position, std::nullopt, std::nullopt,
            d.planned_before_explore});
    }
    if (d.fallback) {
      ++r.summary.fallbacks;
      emit({tick_, clock(), r.id, TraceEvent::kFallback, r.state.position, std::nullopt, std::nullopt, wp});
    }
    emit({tick_, clock(), r.id, TraceEvent::kDecide, r.state.position, std::nullopt, std::nullopt, wp});
    if (d.belief) result_.snapshots.push_back({clock(), r.id, wp, std::move(*d.belief)});
    bus_.publish({Topic::kWaypoints, r.id, tick_, wp});
    r.waypoint = wp;
    if (latency_ticks_ > 0) {
      r.pending = wp;
      r.ready_tick = tick_ + latency_ticks_;
      r.mode = Mode::kWaiting;
    } else {
      begin_leg(r, wp);
    }
  }

  void begin_leg(Robot& r, Position wp) {
    r.pending.reset();
    r.leg_ticks = 0;
    r.leg.emplace(r.state, wp, cfg_.nav, cfg_.bounds);
    if (r.leg->status() == LegStatus::kArrived) {
      r.leg.reset();
      r.mode = Mode::kHolding;
      r.hold_ticks = hold_ticks_;
    } else {
      r.mode = Mode::kMoving;
    }
    sample(r);
  }

  bool check_and_finish() {
    std::vector<Position> pos;
    for (const auto& r : robots_) pos.push_back(r.state.position);
    const Termination t = check_termination(pos, cfg_.source.location, cfg_.tolerance, clock(), cfg_.time_limit);
    if (tick_ >= limit_ticks_ && t.kind == Termination::Kind::kContinue) {
      return finish({Termination::Kind::kTimeout, -1});
    }
    if (t.kind == Termination::Kind::kContinue) return false;
    return finish(t);
  }

  bool finish(Termination t) {
    finished_ = true;
    // Flush partially collected legs so every sample reaches the trace.
    for (auto& r : robots_) {
      if (!r.leg_buffer.empty()) {
        const auto mode = r.mode;
        finish_leg(r);
        r.mode = mode;
      }
    }
    result_.mission_time = clock();
    if (t.kind == Termination::Kind::kSuccess) {
      result_.success = true;
      result_.finder = t.robot;
      result_.termination = "success";
      const auto& r = robots_[static_cast<std::size_t>(t.robot)];
      emit({tick_, clock(), r.id, TraceEvent::kSuccess, r.state.position, std::nullopt, std::nullopt, std::nullopt});
    } else {
      result_.termination = "timeout";
      emit({tick_, clock(), -1, TraceEvent::kTimeout, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    }
    return true;
  }

  MissionConfig cfg_;
  std::unique_ptr<SignalField> field_;
  Sensor sensor_;
  std::vector<Robot> robots_;
  Bus bus_;
  std::vector<TraceRow> rows_;
  MissionResult result_;
  long tick_ = 0;
  long limit_ticks_ = 0;
  long hold_ticks_ = 1;
  long latency_ticks_ = 0;
  bool started_ = false;
  bool finished_ = false;
};

inline void scheduler_step(World& world) { world.step(); }

inline MissionResult run_mission(const MissionConfig& cfg) { return World(cfg).run(); }

}  // namespace srcseek
