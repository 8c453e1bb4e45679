#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srcseek/geometry.hpp"

namespace srcseek {

// `explore` and `fallback` extend the core event set: they precede a `decide`
// row whose waypoint came from the exploration override or the random
// fallback respectively.
enum class TraceEvent { kSample, kDecide, kWaypointReached, kSuccess, kTimeout, kStalled, kExplore, kFallback };

inline std::string_view to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::kSample: return "sample";
    case TraceEvent::kDecide: return "decide";
    case TraceEvent::kWaypointReached: return "waypoint_reached";
    case TraceEvent::kSuccess: return "success";
    case TraceEvent::kTimeout: return "timeout";
    case TraceEvent::kStalled: return "stalled";
    case TraceEvent::kExplore: return "explore";
    case TraceEvent::kFallback: return "fallback";
  }
  return "?";
}

inline TraceEvent parse_trace_event(std::string_view s) {
  for (auto e : {TraceEvent::kSample, TraceEvent::kDecide, TraceEvent::kWaypointReached, TraceEvent::kSuccess,
                 TraceEvent::kTimeout, TraceEvent::kStalled, TraceEvent::kExplore, TraceEvent::kFallback}) {
    if (to_string(e) == s) return e;
  }
  throw std::runtime_error("trace: unknown event '" + std::string(s) + "'");
}

struct TraceRow {
  long tick = 0;
  double t = 0.0;
  int robot = -1;  // -1 for mission-level rows (timeout)
  TraceEvent event = TraceEvent::kSample;
  std::optional<Position> position;
  std::optional<double> phi_raw;
  std::optional<double> phi_filtered;
  std::optional<Position> waypoint;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Run metadata, written as `# key=value` lines ahead of the CSV header.
using TraceMeta = std::map<std::string, std::string>;

inline constexpr std::string_view kTraceHeader = "t,robot_id,event,x,y,phi_raw,phi_filtered,waypoint_x,waypoint_y";

inline std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, const TraceMeta& meta, const std::vector<TraceRow>& rows) {
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
  os << kTraceHeader << '\n';
  auto opt = [&](const std::optional<double>& v) { return v ? fmt6(*v) : std::string(); };
  for (const auto& r : rows) {
    os << fmt6(r.t) << ',' << r.robot << ',' << to_string(r.event) << ','
       << opt(r.position ? std::optional(r.position->x) : std::nullopt) << ','
       << opt(r.position ? std::optional(r.position->y) : std::nullopt) << ',' << opt(r.phi_raw) << ','
       << opt(r.phi_filtered) << ',' << opt(r.waypoint ? std::optional(r.waypoint->x) : std::nullopt) << ','
       << opt(r.waypoint ? std::optional(r.waypoint->y) : std::nullopt) << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const TraceMeta& meta, const std::vector<TraceRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write trace file: " + path);
  write_trace_csv(os, meta, rows);
  if (!os) throw std::runtime_error("error writing trace file: " + path);
}

struct ParsedTrace {
  TraceMeta meta;
  std::vector<TraceRow> rows;  // tick is left at 0; t carries the time
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline ParsedTrace read_trace_csv(std::istream& is, const std::string& name = "trace") {
  ParsedTrace out;
  std::string line;
  int lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(name + ":" + std::to_string(lineno) + ": " + what);
  };
  auto num = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) fail("bad number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + s + "'");
    }
    return std::nullopt;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header && line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("metadata line without '='");
      out.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header) {
      if (line != kTraceHeader) fail("expected trace header");
      header = true;
      continue;
    }
    const auto c = split_csv_line(line);
    if (c.size() != 9) fail("expected 9 columns");
    TraceRow r;
    const auto t = num(c[0]);
    if (!t) fail("missing time");
    r.t = *t;
    try {
      r.robot = std::stoi(c[1]);
    } catch (const std::logic_error&) {
      fail("bad robot id");
    }
    try {
      r.event = parse_trace_event(c[2]);
    } catch (const std::runtime_error& e) {
      fail(e.what());
    }
    const auto x = num(c[3]), y = num(c[4]);
    if (x && y) r.position = Position{*x, *y};
    r.phi_raw = num(c[5]);
    r.phi_filtered = num(c[6]);
    const auto wx = num(c[7]), wy = num(c[8]);
    if (wx && wy) r.waypoint = Position{*wx, *wy};
    out.rows.push_back(r);
  }
  if (!header) fail("missing trace header");
  return out;
}

inline ParsedTrace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace_csv(is, path);
}

}  // namespace srcseek
