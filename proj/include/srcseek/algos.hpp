#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srcseek/env.hpp"
#include "srcseek/geometry.hpp"
#include "srcseek/gp.hpp"
#include "srcseek/observation.hpp"
#include "srcseek/random.hpp"

namespace srcseek {

struct PeerWaypoint {
  int robot = 0;
  Position waypoint;
};

/// Everything a decider may look at. Spans point into a snapshot owned by the
/// caller and stay valid for the duration of one decide() call.
struct DecisionContext {
  int robot = 0;
  Position current;
  std::span<const Observation> own;
  std::span<const Observation> peers;
  std::span<const PeerWaypoint> peer_waypoints;
  ArenaBounds bounds;
  double time = 0.0;
  Rng* rng = nullptr;

  Rng& random() const {
    if (rng == nullptr) throw std::logic_error("decision context has no rng");
    return *rng;
  }
};

enum class PenaltyMode { kNone, kBsp };

struct BayesSwarmParams {
  double alpha = 0.6;
  double beta = 1.0;
  double speed = 0.1;     // V
  double horizon = 10.0;  // T
  PenaltyMode penalty = PenaltyMode::kNone;
  double epsilon = 0.1;
  double explore_alpha = 0.1;
  int candidates = 512;
  Kernel kernel;
  std::size_t gp_cap = 500;
  bool optimize_hyperparameters = false;
  int snapshot_resolution = 0;  // 0 disables belief snapshots

  double reach() const { return speed * horizon; }

  void validate() const {
    if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("bayes-swarm: alpha must be in [0, 1]");
    if (!(explore_alpha >= 0 && explore_alpha <= 1)) throw std::invalid_argument("bayes-swarm: explore alpha must be in [0, 1]");
    if (!(beta > 0 && speed > 0 && horizon > 0 && epsilon > 0)) {
      throw std::invalid_argument("bayes-swarm: beta, speed, horizon and epsilon must be positive");
    }
    if (candidates < 1 || gp_cap < 1) throw std::invalid_argument("bayes-swarm: candidates and gp_cap must be >= 1");
    kernel.validate();
  }
};

struct PsoParams {
  double inertia = 0.5;
  double local = 0.5;
  double global = 0.5;

  void validate() const {
    if (!(inertia >= 0 && local >= 0 && global >= 0)) throw std::invalid_argument("pso: weights must be >= 0");
  }
};

struct BeliefSnapshot {
  GridField mean;
  Position argmax;  // expected source location under the current belief
};

struct Decision {
  Position waypoint;
  bool explored = false;  // exploration override fired
  bool fallback = false;  // belief model failed; random waypoint used
  std::optional<Position> planned_before_explore = std::nullopt;
  std::optional<BeliefSnapshot> belief = std::nullopt;
};

// ---------------------------------------------------------------------------
// Random walk

inline Position random_walk_decide(const DecisionContext& ctx) {
  Rng& rng = ctx.random();
  const double x = uniform(rng, ctx.bounds.lower.x, ctx.bounds.upper.x);
  const double y = uniform(rng, ctx.bounds.lower.y, ctx.bounds.upper.y);
  return {x, y};
}

/// Uniform point in the disc of `radius` around `center`, clipped to bounds.
inline Position random_in_disc(Position center, double radius, const ArenaBounds& bounds, Rng& rng) {
  const double r = radius * std::sqrt(uniform01(rng));
  const double a = 2.0 * std::numbers::pi * uniform01(rng);
  return bounds.clip({center.x + r * std::cos(a), center.y + r * std::sin(a)});
}

// ---------------------------------------------------------------------------
// PSO

struct PsoBests {
  Position personal;
  Position global;
};

namespace detail {

// Strict "better sample" order: higher value, then earlier time, then lower id.
inline bool better_sample(const Observation& a, const Observation& b) {
  if (a.value() != b.value()) return a.value() > b.value();
  if (a.t != b.t) return a.t < b.t;
  return a.robot < b.robot;
}

inline const Observation* best_of(std::span<const Observation> data, const Observation* incumbent = nullptr) {
  for (const auto& o : data) {
    if (incumbent == nullptr || better_sample(o, *incumbent)) incumbent = &o;
  }
  return incumbent;
}

}  // namespace detail

/// Personal best over the robot's own trajectory samples; global best over
/// own plus peer samples.
inline PsoBests pso_update_bests(const DecisionContext& ctx) {
  const Observation* own = detail::best_of(ctx.own);
  const Observation* all = detail::best_of(ctx.peers, own);
  return {own ? own->position : ctx.current, all ? all->position : ctx.current};
}

/// v <- inertia v + r1 local (p_b - x) + r2 global (g_b - x); returns x + v
/// (unclipped) and updates v.
inline Position pso_step(Position x, Position& velocity, const PsoBests& bests, const PsoParams& p, double r1,
                         double r2) {
  velocity = p.inertia * velocity + (r1 * p.local) * (bests.personal - x) + (r2 * p.global) * (bests.global - x);
  return x + velocity;
}

inline Position pso_decide(const DecisionContext& ctx, const PsoParams& params, Position& velocity) {
  const PsoBests bests = pso_update_bests(ctx);
  Rng& rng = ctx.random();
  const double r1 = uniform01(rng);
  const double r2 = uniform01(rng);
  return ctx.bounds.clip(pso_step(ctx.current, velocity, bests, params, r1, r2));
}

// ---------------------------------------------------------------------------
// Bayes-Swarm

/// Peer-proximity factor: product over peers of 1 + |x - x_p| / (1 + diag).
inline double bsp_penalty(Position x, std::span<const PeerWaypoint> peers, const ArenaBounds& bounds) {
  const double scale = 1.0 + bounds.diagonal();
  double gamma = 1.0;
  for (const auto& p : peers) gamma *= 1.0 + distance(x, p.waypoint) / scale;
  return gamma;
}

inline double halton(std::uint32_t index, std::uint32_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

/// Disc center followed by `count` Halton points in the disc of `radius`,
/// clipped into bounds. Clipping toward an in-bounds center never leaves the disc.
inline std::vector<Position> disc_candidates(Position center, double radius, const ArenaBounds& bounds, int count) {
  std::vector<Position> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(bounds.clip(center));
  for (int i = 1; i <= count; ++i) {
    const double r = radius * std::sqrt(halton(static_cast<std::uint32_t>(i), 2));
    const double a = 2.0 * std::numbers::pi * halton(static_cast<std::uint32_t>(i), 3);
    out.push_back(bounds.clip({center.x + r * std::cos(a), center.y + r * std::sin(a)}));
  }
  return out;
}

struct MinMax {
  double lo = 0.0;
  double hi = 0.0;

  static MinMax of(std::span<const double> v) {
    const auto [a, b] = std::minmax_element(v.begin(), v.end());
    return {*a, *b};
  }
  // Degenerate ranges normalize to 0.
  double normalize(double x) const { return hi - lo > 1e-12 ? (x - lo) / (hi - lo) : 0.0; }
};

/// Acquisition (alpha Omega + (1 - alpha) beta Sigma) Gamma with Omega and Sigma
/// the GP mean and std min-max normalized by the given ranges.
inline double acquisition(double mean, double stddev, double gamma, MinMax mean_range, MinMax std_range,
                          double alpha, double beta) {
  return (alpha * mean_range.normalize(mean) + (1.0 - alpha) * beta * std_range.normalize(stddev)) * gamma;
}

/// Index of the best candidate (first on ties).
inline std::size_t acquisition_argmax(std::span<const double> means, std::span<const double> stds,
                                      std::span<const double> gammas, double alpha, double beta) {
  const MinMax mr = MinMax::of(means), sr = MinMax::of(stds);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double s = acquisition(means[i], stds[i], gammas[i], mr, sr, alpha, beta);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

namespace detail {

struct AcquisitionSurface {
  std::vector<Position> points;
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<double> gammas;
};

inline std::vector<double> gammas_for(std::span<const Position> pts, const DecisionContext& ctx,
                                      PenaltyMode mode) {
  std::vector<double> g(pts.size(), 1.0);
  if (mode == PenaltyMode::kBsp) {
    for (std::size_t i = 0; i < pts.size(); ++i) g[i] = bsp_penalty(pts[i], ctx.peer_waypoints, ctx.bounds);
  }
  return g;
}

// Argmax over the candidate set followed by one coordinate-refinement pass.
inline Position optimize_acquisition(const GpModel& gp, const AcquisitionSurface& s, const DecisionContext& ctx,
                                     const BayesSwarmParams& p, double alpha) {
  const MinMax mr = MinMax::of(s.means), sr = MinMax::of(s.stds);
  const std::size_t best = acquisition_argmax(s.means, s.stds, s.gammas, alpha, p.beta);
  Position incumbent = s.points[best];
  double incumbent_score = acquisition(s.means[best], s.stds[best], s.gammas[best], mr, sr, alpha, p.beta);

  const double radius = p.reach();
  const double step = radius / std::sqrt(static_cast<double>(p.candidates));
  std::vector<Position> probes;
  for (Position d : {Position{step, 0}, Position{-step, 0}, Position{0, step}, Position{0, -step}}) {
    const Position q = incumbent + d;
    if (ctx.bounds.contains(q) && distance(q, ctx.current) <= radius) probes.push_back(q);
  }
  if (!probes.empty()) {
    std::vector<double> pm, ps;
    gp.predict_batch(probes, pm, ps);
    const auto pg = gammas_for(probes, ctx, p.penalty);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double sc = acquisition(pm[i], ps[i], pg[i], mr, sr, alpha, p.beta);
      if (sc > incumbent_score) {
        incumbent_score = sc;
        incumbent = probes[i];
      }
    }
  }
  return incumbent;
}

inline BeliefSnapshot make_snapshot(const GpModel& gp, const ArenaBounds& bounds, int resolution) {
  GridField g;
  g.xs = linspace(bounds.lower.x, bounds.upper.x, resolution);
  g.ys = linspace(bounds.lower.y, bounds.upper.y, resolution);
  std::vector<Position> pts;
  pts.reserve(g.xs.size() * g.ys.size());
  for (double y : g.ys) {
    for (double x : g.xs) pts.push_back({x, y});
  }
  std::vector<double> sd;
  gp.predict_batch(pts, g.values, sd);
  const auto best = static_cast<std::size_t>(std::max_element(g.values.begin(), g.values.end()) - g.values.begin());
  return {std::move(g), pts[best]};
}

}  // namespace detail

/// Pooled own + peer observations, capped for the belief model.
inline std::vector<Observation> pooled_training_set(const DecisionContext& ctx, std::size_t cap) {
  std::vector<Observation> pooled;
  pooled.reserve(ctx.own.size() + ctx.peers.size());
  pooled.insert(pooled.end(), ctx.own.begin(), ctx.own.end());
  pooled.insert(pooled.end(), ctx.peers.begin(), ctx.peers.end());
  return subsample(pooled, cap, ctx.random());
}

inline Decision bayes_swarm_decide(const DecisionContext& ctx, const BayesSwarmParams& p) {
  const double radius = p.reach();
  Decision out;
  if (ctx.own.empty() && ctx.peers.empty()) {
    out.waypoint = random_in_disc(ctx.current, radius, ctx.bounds, ctx.random());
    out.fallback = true;
    return out;
  }
  const auto data = pooled_training_set(ctx, p.gp_cap);

  std::optional<GpModel> gp;
  try {
    Kernel kernel = p.kernel;
    if (p.optimize_hyperparameters) {
      std::vector<Position> x;
      std::vector<double> y;
      for (const auto& o : data) {
        x.push_back(o.position);
        y.push_back(o.value());
      }
      kernel = select_hyperparameters(x, y, p.kernel);
    }
    gp.emplace(GpModel::fit(data, kernel));
  } catch (const GpError&) {
    out.waypoint = random_in_disc(ctx.current, radius, ctx.bounds, ctx.random());
    out.fallback = true;
    return out;
  }

  detail::AcquisitionSurface s;
  s.points = disc_candidates(ctx.current, radius, ctx.bounds, p.candidates);
  gp->predict_batch(s.points, s.means, s.stds);
  s.gammas = detail::gammas_for(s.points, ctx, p.penalty);

  out.waypoint = detail::optimize_acquisition(*gp, s, ctx, p, p.alpha);
  if (p.penalty == PenaltyMode::kBsp && distance(out.waypoint, ctx.current) < p.epsilon) {
    out.planned_before_explore = out.waypoint;
    out.waypoint = detail::optimize_acquisition(*gp, s, ctx, p, p.explore_alpha);
    out.explored = true;
  }
  if (p.snapshot_resolution >= 2) out.belief = detail::make_snapshot(*gp, ctx.bounds, p.snapshot_resolution);
  return out;
}

// ---------------------------------------------------------------------------
// Decider interface

/// Per-robot decision maker. Implementations own their mutable state; all
/// randomness comes from the context's rng.
class Decider {
 public:
  virtual ~Decider() = default;
  virtual Decision decide(const DecisionContext& ctx) = 0;
  virtual std::string_view id() const = 0;
};

class RandomWalkDecider final : public Decider {
 public:
  Decision decide(const DecisionContext& ctx) override { return {.waypoint = random_walk_decide(ctx)}; }
  std::string_view id() const override { return "random_walk"; }
};

class PsoDecider final : public Decider {
 public:
  explicit PsoDecider(PsoParams p) : params_(p) { params_.validate(); }
  Decision decide(const DecisionContext& ctx) override { return {.waypoint = pso_decide(ctx, params_, velocity_)}; }
  std::string_view id() const override { return "pso"; }
  Position velocity() const { return velocity_; }
  void set_velocity(Position v) { velocity_ = v; }

 private:
  PsoParams params_;
  Position velocity_{0.0, 0.0};
};

class BayesSwarmDecider final : public Decider {
 public:
  explicit BayesSwarmDecider(BayesSwarmParams p) : params_(std::move(p)) { params_.validate(); }
  Decision decide(const DecisionContext& ctx) override { return bayes_swarm_decide(ctx, params_); }
  std::string_view id() const override { return params_.penalty == PenaltyMode::kBsp ? "bsp" : "bs"; }
  const BayesSwarmParams& params() const { return params_; }

 private:
  BayesSwarmParams params_;
};

struct AlgorithmParams {
  BayesSwarmParams bayes;
  PsoParams pso;
};

/// Canonical algorithm id, or empty when unknown.
inline std::string canonical_algorithm(std::string_view id) {
  if (id == "random_walk" || id == "rw") return "random_walk";
  if (id == "pso") return "pso";
  if (id == "bs" || id == "bayes_swarm") return "bs";
  if (id == "bsp") return "bsp";
  return {};
}

inline std::unique_ptr<Decider> make_decider(std::string_view id, const AlgorithmParams& params) {
  const std::string canon = canonical_algorithm(id);
  if (canon == "random_walk") return std::make_unique<RandomWalkDecider>();
  if (canon == "pso") return std::make_unique<PsoDecider>(params.pso);
  if (canon == "bs" || canon == "bsp") {
    BayesSwarmParams p = params.bayes;
    p.penalty = canon == "bsp" ? PenaltyMode::kBsp : PenaltyMode::kNone;
    return std::make_unique<BayesSwarmDecider>(std::move(p));
  }
  throw std::invalid_argument("unknown algorithm id: " + std::string(id));
}

/// One-shot dispatch through a fresh decider.
inline Position decide(std::string_view id, const DecisionContext& ctx, const AlgorithmParams& params = {}) {
  return make_decider(id, params)->decide(ctx).waypoint;
}

}  // namespace srcseek
