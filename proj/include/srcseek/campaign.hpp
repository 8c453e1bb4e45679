#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "srcseek/config.hpp"
#include "srcseek/executor.hpp"
#include "srcseek/trace.hpp"

namespace srcseek {

enum class RunOutcome { kSuccess, kTimeout, kError };

inline std::string_view to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::kSuccess: return "success";
    case RunOutcome::kTimeout: return "timeout";
    case RunOutcome::kError: return "error";
  }
  return "?";
}

inline RunOutcome parse_run_outcome(std::string_view s) {
  if (s == "success") return RunOutcome::kSuccess;
  if (s == "timeout") return RunOutcome::kTimeout;
  if (s == "error") return RunOutcome::kError;
  throw std::runtime_error("unknown run outcome '" + std::string(s) + "'");
}

struct RunRecord {
  std::uint64_t seed = 0;
  RunOutcome outcome = RunOutcome::kTimeout;
  double time = 0.0;  // failed runs count as the time limit
  std::string error;

  bool success() const { return outcome == RunOutcome::kSuccess; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct CaseSummary {
  std::string name;
  std::string algorithm;
  std::string start;   // "x y" or "random"
  std::string source;  // "x y"
  std::vector<RunRecord> runs;

  int successes() const {
    return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return r.success(); }));
  }
  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& r : runs) t.push_back(r.time);
    return t;
  }
  double min_time() const {
    const auto t = times();
    return t.empty() ? 0.0 : *std::min_element(t.begin(), t.end());
  }
  double max_time() const {
    const auto t = times();
    return t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
  }
  double median_time() const { return times().empty() ? 0.0 : median(times()); }

  friend bool operator==(const CaseSummary&, const CaseSummary&) = default;
};

struct CampaignSummary {
  std::vector<CaseSummary> cases;

  const CaseSummary* find(const std::string& name) const {
    for (const auto& c : cases) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
  friend bool operator==(const CampaignSummary&, const CampaignSummary&) = default;
};

inline std::string format_point(Position p) { return fmt6(p.x) + " " + fmt6(p.y); }

inline constexpr std::string_view kSummaryHeader =
    "case,algorithm,start,source,runs,successes,success_rate,min_s,max_s,median_s,seeds,outcomes,times_s";

inline void write_summary_csv(std::ostream& os, const CampaignSummary& s) {
  os << kSummaryHeader << '\n';
  for (const auto& c : s.cases) {
    std::string seeds, outcomes, times;
    for (std::size_t i = 0; i < c.runs.size(); ++i) {
      const char* sep = i ? ";" : "";
      seeds += sep + std::to_string(c.runs[i].seed);
      outcomes += sep + std::string(to_string(c.runs[i].outcome));
      times += sep + fmt6(c.runs[i].time);
    }
    const double rate = c.runs.empty() ? 0.0 : static_cast<double>(c.successes()) / static_cast<double>(c.runs.size());
    os << c.name << ',' << c.algorithm << ',' << c.start << ',' << c.source << ',' << c.runs.size() << ','
       << c.successes() << ',' << fmt6(rate) << ',' << fmt6(c.min_time()) << ',' << fmt6(c.max_time()) << ','
       << fmt6(c.median_time()) << ',' << seeds << ',' << outcomes << ',' << times << '\n';
  }
}

inline std::string summary_csv(const CampaignSummary& s) {
  std::ostringstream os;
  write_summary_csv(os, s);
  return os.str();
}

/// Reads a summary CSV back. Per-run error text is not stored in the CSV.
inline CampaignSummary read_summary_csv(std::istream& is, const std::string& name = "summary") {
  CampaignSummary out;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(name + ":" + std::to_string(lineno) + ": " + what);
  };
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(s);
    while (std::getline(ss, part, sep)) parts.push_back(part);
    return parts;
  };
  if (!std::getline(is, line) || line != kSummaryHeader) fail("expected summary header");
  ++lineno;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 13) fail("expected 13 columns");
    CaseSummary c{cells[0], cells[1], cells[2], cells[3], {}};
    const auto seeds = split(cells[10], ';');
    const auto outcomes = split(cells[11], ';');
    const auto times = split(cells[12], ';');
    if (seeds.size() != outcomes.size() || seeds.size() != times.size()) fail("run column lengths differ");
    try {
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        c.runs.push_back({std::stoull(seeds[i]), parse_run_outcome(outcomes[i]), std::stod(times[i]), {}});
      }
    } catch (const std::exception& e) {
      fail(e.what());
    }
    out.cases.push_back(std::move(c));
  }
  return out;
}

inline CampaignSummary read_summary_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open summary file: " + path);
  return read_summary_csv(is, path);
}

struct CampaignOptions {
  std::filesystem::path output_dir;  // empty: nothing written
  bool parallel_runs = false;
  bool snapshots = false;
  int snapshot_resolution = 41;
  unsigned max_threads = 0;  // 0: hardware concurrency
};

inline std::string trace_file_name(const std::string& case_name, std::uint64_t seed) {
  return case_name + "_seed" + std::to_string(seed) + ".csv";
}

inline TraceMeta trace_metadata(const MissionConfig& cfg, std::size_t case_index) {
  return {{"case", cfg.name},
          {"case_index", std::to_string(case_index)},
          {"algorithm", cfg.algorithm},
          {"start", cfg.start ? format_point(*cfg.start) : "random"},
          {"source", format_point(cfg.source.location)},
          {"seed", std::to_string(cfg.seed)},
          {"robots", std::to_string(cfg.robots)},
          {"time_limit", fmt6(cfg.time_limit)}};
}

/// Writes one GridField CSV per recorded decision plus an index file with the
/// argmax marker of each.
inline void write_snapshots(const std::filesystem::path& dir, const MissionResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "snapshots.csv");
  if (!index) throw std::runtime_error("cannot write snapshot index in " + dir.string());
  index << "t,robot_id,argmax_x,argmax_y,waypoint_x,waypoint_y,file\n";
  for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
    const auto& s = result.snapshots[i];
    const std::string file = "belief_" + std::to_string(i) + "_r" + std::to_string(s.robot) + ".csv";
    write_grid_csv((dir / file).string(), s.belief.mean);
    index << fmt6(s.t) << ',' << s.robot << ',' << fmt6(s.belief.argmax.x) << ',' << fmt6(s.belief.argmax.y) << ','
          << fmt6(s.waypoint.x) << ',' << fmt6(s.waypoint.y) << ',' << file << '\n';
  }
}

namespace campaign_detail {

struct Job {
  std::size_t case_index;
  MissionConfig cfg;
};

struct JobResult {
  RunRecord record;
  std::optional<MissionResult> mission;
};

inline JobResult run_job(const Job& job) {
  JobResult out;
  out.record.seed = job.cfg.seed;
  try {
    out.mission = run_mission(job.cfg);
    out.record.outcome = out.mission->success ? RunOutcome::kSuccess : RunOutcome::kTimeout;
    out.record.time = out.mission->success ? out.mission->mission_time : job.cfg.time_limit;
  } catch (const std::exception& e) {
    out.record.outcome = RunOutcome::kError;
    out.record.time = job.cfg.time_limit;
    out.record.error = e.what();
  }
  return out;
}

}  // namespace campaign_detail

/// Runs every case `repeats` times with seeds base_seed + i. Run errors become
/// failed rows. Output files, when requested:
///   <out>/summary.csv
///   <out>/traces/<case>_seed<seed>.csv
///   <out>/snapshots/<case>_seed<seed>/...
inline CampaignSummary run_campaign(const CampaignSpec& spec, const CampaignOptions& opt = {}) {
  spec.validate();
  std::vector<campaign_detail::Job> jobs;
  CampaignSummary summary;
  for (std::size_t ci = 0; ci < spec.cases.size(); ++ci) {
    const auto& cs = spec.cases[ci];
    const auto& m = cs.mission;
    summary.cases.push_back(
        {cs.name, m.algorithm, m.start ? format_point(*m.start) : "random", format_point(m.source.location), {}});
    for (int i = 0; i < spec.repeats; ++i) {
      MissionConfig cfg = m;
      cfg.name = cs.name;
      cfg.seed = spec.base_seed + static_cast<std::uint64_t>(i);
      if (opt.snapshots && cfg.snapshot_resolution == 0) cfg.snapshot_resolution = opt.snapshot_resolution;
      jobs.push_back({ci, std::move(cfg)});
    }
  }

  if (!opt.output_dir.empty()) {
    std::filesystem::create_directories(opt.output_dir / "traces");
  }
  auto emit = [&](const campaign_detail::Job& job, const campaign_detail::JobResult& r) {
    if (opt.output_dir.empty()) return;
    TraceMeta meta = trace_metadata(job.cfg, job.case_index);
    std::vector<TraceRow> rows;
    if (r.mission) rows = r.mission->trace;
    if (!r.record.error.empty()) {
      std::string msg = r.record.error;
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      meta["error"] = msg;
    }
    write_trace_csv((opt.output_dir / "traces" / trace_file_name(job.cfg.name, job.cfg.seed)).string(), meta, rows);
    if (opt.snapshots && r.mission) {
      const std::string dir = job.cfg.name + "_seed" + std::to_string(job.cfg.seed);
      write_snapshots(opt.output_dir / "snapshots" / dir, *r.mission);
    }
  };

  std::vector<RunRecord> records(jobs.size());
  if (opt.parallel_runs) {
    const unsigned hw = opt.max_threads ? opt.max_threads : std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0;
    while (next < jobs.size()) {
      const std::size_t end = std::min(jobs.size(), next + hw);
      std::vector<std::future<campaign_detail::JobResult>> wave;
      for (std::size_t j = next; j < end; ++j) {
        wave.push_back(std::async(std::launch::async, campaign_detail::run_job, std::cref(jobs[j])));
      }
      for (std::size_t j = next; j < end; ++j) {
        auto r = wave[j - next].get();
        emit(jobs[j], r);
        records[j] = std::move(r.record);
      }
      next = end;
    }
  } else {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      auto r = campaign_detail::run_job(jobs[j]);
      emit(jobs[j], r);
      records[j] = std::move(r.record);
    }
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) summary.cases[jobs[j].case_index].runs.push_back(records[j]);

  if (!opt.output_dir.empty()) {
    std::ofstream os(opt.output_dir / "summary.csv");
    if (!os) throw std::runtime_error("cannot write " + (opt.output_dir / "summary.csv").string());
    write_summary_csv(os, summary);
  }
  return summary;
}

/// Rebuilds a campaign summary from trace files alone. Cases are ordered by
/// their recorded index, runs by seed.
inline CampaignSummary summarize(const std::vector<std::string>& trace_files) {
  struct Entry {
    std::size_t case_index;
    CaseSummary head;
    RunRecord run;
  };
  std::vector<Entry> entries;
  for (const auto& path : trace_files) {
    const ParsedTrace t = read_trace_csv(path);
    auto need = [&](const std::string& key) -> const std::string& {
      const auto it = t.meta.find(key);
      if (it == t.meta.end()) throw std::runtime_error(path + ": trace metadata lacks '" + key + "'");
      return it->second;
    };
    Entry e;
    try {
      e.case_index = std::stoul(need("case_index"));
      e.run.seed = std::stoull(need("seed"));
    } catch (const std::logic_error&) {
      throw std::runtime_error(path + ": bad case_index or seed metadata");
    }
    e.head = {need("case"), need("algorithm"), need("start"), need("source"), {}};
    const double limit = std::stod(need("time_limit"));
    e.run.outcome = RunOutcome::kTimeout;
    e.run.time = limit;
    if (const auto it = t.meta.find("error"); it != t.meta.end()) {
      e.run.outcome = RunOutcome::kError;
      e.run.error = it->second;
    }
    for (const auto& row : t.rows) {
      if (row.event == TraceEvent::kSuccess) {
        e.run.outcome = RunOutcome::kSuccess;
        e.run.time = row.t;
      }
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.case_index != b.case_index ? a.case_index < b.case_index : a.run.seed < b.run.seed;
  });
  CampaignSummary out;
  std::optional<std::size_t> current;
  for (auto& e : entries) {
    if (!current || *current != e.case_index) {
      out.cases.push_back(e.head);
      current = e.case_index;
    } else if (out.cases.back().name != e.head.name) {
      throw std::runtime_error("traces disagree on the name of case " + std::to_string(e.case_index));
    }
    out.cases.back().runs.push_back(std::move(e.run));
  }
  return out;
}

/// Samples the configured field on a res x res grid and writes it as CSV.
/// In noisy mode every node gets one noisy reading from the seeded field
/// noise stream.
inline GridField run_scan(const MissionConfig& cfg, int resolution, const std::string& out_path) {
  cfg.validate();
  const auto field = make_field(cfg);
  GridField grid;
  if (cfg.field_mode == FieldMode::kNoisy) {
    Rng rng = make_stream(cfg.seed, StreamKind::kFieldNoise, kGlobalStream);
    grid = grid_scan_with([&](Position p) { return noisy_sample(*field, p, cfg.noise, rng); }, cfg.bounds,
                          resolution);
  } else {
    grid = grid_scan(*field, cfg.bounds, resolution);
  }
  if (!out_path.empty()) write_grid_csv(out_path, grid);
  return grid;
}

}  // namespace srcseek
