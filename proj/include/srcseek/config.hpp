#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srcseek/executor.hpp"

namespace srcseek {

struct CaseSpec {
  std::string name;
  MissionConfig mission;
};

struct CampaignSpec {
  std::vector<CaseSpec> cases;
  int repeats = 5;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";

  void validate() const {
    if (repeats < 1) throw std::invalid_argument("campaign: repeats must be >= 1");
    if (cases.empty()) throw std::invalid_argument("campaign: no cases");
    std::set<std::string> names;
    for (const auto& c : cases) {
      if (!names.insert(c.name).second) throw std::invalid_argument("campaign: duplicate case name '" + c.name + "'");
      c.mission.validate();
    }
  }
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

namespace config_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> numbers(const std::string& v, std::size_t expected) {
  std::string s = v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream is(s);
  std::vector<double> out;
  double x = 0;
  while (is >> x) out.push_back(x);
  if (!is.eof() || out.size() != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) + " number(s), got '" + v + "'");
  }
  return out;
}

inline double number(const std::string& v) { return numbers(v, 1)[0]; }

inline long integer(const std::string& v) {
  std::size_t used = 0;
  const long x = std::stol(v, &used);
  if (used != v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

inline bool boolean(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

inline Position point(const std::string& v) {
  const auto p = numbers(v, 2);
  return {p[0], p[1]};
}

using Setter = std::function<void(MissionConfig&, const std::string&)>;

// Every recognized per-case key.
inline const std::map<std::string, Setter>& case_keys() {
  static const std::map<std::string, Setter> keys = {
      {"algorithm", [](MissionConfig& c, const std::string& v) {
         if (canonical_algorithm(v).empty()) throw std::invalid_argument("unknown algorithm '" + v + "'");
         c.algorithm = canonical_algorithm(v);
       }},
      {"robots", [](MissionConfig& c, const std::string& v) { c.robots = static_cast<int>(integer(v)); }},
      {"start", [](MissionConfig& c, const std::string& v) {
         if (v == "random") c.start.reset();
         else c.start = point(v);
       }},
      {"start_clearance", [](MissionConfig& c, const std::string& v) { c.random_start_clearance = number(v); }},
      {"source", [](MissionConfig& c, const std::string& v) { c.source.location = point(v); }},
      {"source.p0", [](MissionConfig& c, const std::string& v) { c.source.p0 = number(v); }},
      {"source.p_ref", [](MissionConfig& c, const std::string& v) { c.source.p_ref = number(v); }},
      {"source.r_min", [](MissionConfig& c, const std::string& v) { c.source.r_min = number(v); }},
      {"arena", [](MissionConfig& c, const std::string& v) {
         const auto a = numbers(v, 4);
         c.bounds = {{a[0], a[1]}, {a[2], a[3]}};
       }},
      {"field", [](MissionConfig& c, const std::string& v) {
         if (v == "analytic") c.field_mode = FieldMode::kAnalytic;
         else if (v == "noisy") c.field_mode = FieldMode::kNoisy;
         else if (v == "grid") c.field_mode = FieldMode::kGrid;
         else throw std::invalid_argument("field must be analytic, noisy or grid");
       }},
      {"grid_file", [](MissionConfig& c, const std::string& v) { c.grid_path = v; }},
      {"tolerance", [](MissionConfig& c, const std::string& v) { c.tolerance = number(v); }},
      {"time_limit", [](MissionConfig& c, const std::string& v) { c.time_limit = number(v); }},
      {"decision_latency", [](MissionConfig& c, const std::string& v) { c.decision_latency = number(v); }},
      {"hold_time", [](MissionConfig& c, const std::string& v) { c.hold_time = number(v); }},
      {"initial_waypoints", [](MissionConfig& c, const std::string& v) {
         if (v == "fan") c.initial_waypoints = InitialWaypoints::kFan;
         else if (v == "random") c.initial_waypoints = InitialWaypoints::kRandom;
         else throw std::invalid_argument("initial_waypoints must be fan or random");
       }},
      {"initial_radius", [](MissionConfig& c, const std::string& v) { c.initial_radius = number(v); }},
      {"parallel_decisions", [](MissionConfig& c, const std::string& v) { c.parallel_decisions = boolean(v); }},
      {"snapshot_resolution", [](MissionConfig& c, const std::string& v) { c.snapshot_resolution = static_cast<int>(integer(v)); }},
      {"noise.sigma", [](MissionConfig& c, const std::string& v) { c.noise.gaussian_sigma = number(v); }},
      {"noise.outlier_probability", [](MissionConfig& c, const std::string& v) { c.noise.outlier_probability = number(v); }},
      {"noise.outlier_min", [](MissionConfig& c, const std::string& v) { c.noise.outlier_min = number(v); }},
      {"noise.outlier_max", [](MissionConfig& c, const std::string& v) { c.noise.outlier_max = number(v); }},
      {"mic.radius", [](MissionConfig& c, const std::string& v) { c.mics.body_radius = number(v); }},
      {"mic.insets", [](MissionConfig& c, const std::string& v) {
         const auto d = numbers(v, 4);
         std::copy(d.begin(), d.end(), c.mics.insets.begin());
       }},
      {"filter.window", [](MissionConfig& c, const std::string& v) { c.filter.window = static_cast<int>(integer(v)); }},
      {"filter.smoothing", [](MissionConfig& c, const std::string& v) { c.filter.smoothing_width = static_cast<int>(integer(v)); }},
      {"nav.speed", [](MissionConfig& c, const std::string& v) { c.nav.v_max = number(v); }},
      {"nav.omega_max", [](MissionConfig& c, const std::string& v) { c.nav.omega_max = number(v); }},
      {"nav.tol", [](MissionConfig& c, const std::string& v) { c.nav.tol = number(v); }},
      {"nav.k_omega", [](MissionConfig& c, const std::string& v) { c.nav.k_omega = number(v); }},
      {"nav.fs", [](MissionConfig& c, const std::string& v) { c.nav.fs = number(v); }},
      {"nav.dt", [](MissionConfig& c, const std::string& v) { c.nav.dt = number(v); }},
      {"nav.stall_time", [](MissionConfig& c, const std::string& v) { c.nav.stall_time = number(v); }},
      {"gp.length_scale", [](MissionConfig& c, const std::string& v) { c.params.bayes.kernel.length_scale = number(v); }},
      {"gp.signal_variance", [](MissionConfig& c, const std::string& v) { c.params.bayes.kernel.signal_variance = number(v); }},
      {"gp.noise_variance", [](MissionConfig& c, const std::string& v) { c.params.bayes.kernel.noise_variance = number(v); }},
      {"gp.cap", [](MissionConfig& c, const std::string& v) { c.params.bayes.gp_cap = static_cast<std::size_t>(integer(v)); }},
      {"gp.optimize", [](MissionConfig& c, const std::string& v) { c.params.bayes.optimize_hyperparameters = boolean(v); }},
      {"bs.alpha", [](MissionConfig& c, const std::string& v) { c.params.bayes.alpha = number(v); }},
      {"bs.beta", [](MissionConfig& c, const std::string& v) { c.params.bayes.beta = number(v); }},
      {"bs.horizon", [](MissionConfig& c, const std::string& v) { c.params.bayes.horizon = number(v); }},
      {"bs.epsilon", [](MissionConfig& c, const std::string& v) { c.params.bayes.epsilon = number(v); }},
      {"bs.explore_alpha", [](MissionConfig& c, const std::string& v) { c.params.bayes.explore_alpha = number(v); }},
      {"bs.candidates", [](MissionConfig& c, const std::string& v) { c.params.bayes.candidates = static_cast<int>(integer(v)); }},
      {"pso.inertia", [](MissionConfig& c, const std::string& v) { c.params.pso.inertia = number(v); }},
      {"pso.local", [](MissionConfig& c, const std::string& v) { c.params.pso.local = number(v); }},
      {"pso.global", [](MissionConfig& c, const std::string& v) { c.params.pso.global = number(v); }},
  };
  return keys;
}

struct Entry {
  int line = 0;
  std::string key;
  std::string value;
};

}  // namespace config_detail

/// Parses the campaign config format:
///
///   # comment
///   repeats = 5            campaign keys: repeats, base_seed, output
///   nav.speed = 0.04       case keys at top level are defaults for every case
///   [case bs_center]       one section per case
///   algorithm = bs
///   source = 0.85, 0.85
///
/// Dotted keys address nested groups (nav., gp., bs., pso., noise., filter.,
/// mic., source.). A file without [case ...] sections is a single case named
/// "default". Unknown keys are errors.
inline CampaignSpec parse_config(std::istream& is, const std::string& name = "config",
                                 const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  CampaignSpec spec;
  std::vector<Entry> top;
  std::vector<std::pair<std::string, std::vector<Entry>>> sections;
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(name, lineno, "unterminated section header");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner.rfind("case ", 0) != 0) throw ConfigError(name, lineno, "unknown section '" + inner + "'");
      const std::string case_name = trim(inner.substr(5));
      if (case_name.empty() || case_name.find_first_of(" \t,/") != std::string::npos) {
        throw ConfigError(name, lineno, "bad case name '" + case_name + "'");
      }
      for (const auto& s : sections) {
        if (s.first == case_name) throw ConfigError(name, lineno, "duplicate case '" + case_name + "'");
      }
      sections.push_back({case_name, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(name, lineno, "expected key = value");
    Entry e{lineno, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (e.key.empty()) throw ConfigError(name, lineno, "empty key");
    const bool campaign_key = e.key == "repeats" || e.key == "base_seed" || e.key == "output";
    if (campaign_key && !sections.empty()) {
      throw ConfigError(name, lineno, "'" + e.key + "' must appear before the first [case] section");
    }
    if (!campaign_key && !case_keys().contains(e.key)) throw ConfigError(name, lineno, "unknown key '" + e.key + "'");
    (sections.empty() ? top : sections.back().second).push_back(std::move(e));
  }

  MissionConfig defaults;
  auto apply = [&](MissionConfig& m, const Entry& e) {
    try {
      case_keys().at(e.key)(m, e.value);
    } catch (const std::exception& ex) {
      throw ConfigError(name, e.line, e.key + ": " + ex.what());
    }
  };
  for (const auto& e : top) {
    try {
      if (e.key == "repeats") spec.repeats = static_cast<int>(integer(e.value));
      else if (e.key == "base_seed") spec.base_seed = static_cast<std::uint64_t>(integer(e.value));
      else if (e.key == "output") spec.output_dir = e.value;
      else apply(defaults, e);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(name, e.line, e.key + ": " + ex.what());
    }
  }
  if (sections.empty()) sections.push_back({"default", {}});
  for (const auto& [case_name, entries] : sections) {
    CaseSpec c{case_name, defaults};
    c.mission.name = case_name;
    for (const auto& e : entries) apply(c.mission, e);
    if (!c.mission.grid_path.empty() && !base_dir.empty() && std::filesystem::path(c.mission.grid_path).is_relative()) {
      c.mission.grid_path = (base_dir / c.mission.grid_path).string();
    }
    spec.cases.push_back(std::move(c));
  }
  if (spec.repeats < 1) throw ConfigError(name, 0, "repeats must be >= 1");
  return spec;
}

inline CampaignSpec parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(is, path, std::filesystem::path(path).parent_path());
}

}  // namespace srcseek
