#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "srcseek/campaign.hpp"
#include "srcseek/config.hpp"

using namespace srcseek;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("srcseek_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> traces_in(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

CampaignSpec small_spec() {
  std::istringstream is(R"(repeats = 3
base_seed = 50
time_limit = 40
nav.speed = 0.04

[case bs_center]
algorithm = bs
start = 0, 0
source = 0.85, 0.85

[case rw_random]
algorithm = rw
start = random
source = 0.85, 0.85
field = noisy
)");
  return parse_config(is);
}

}  // namespace

TEST(ParseConfig, MinimalIsDefaulted) {
  std::istringstream is("algorithm = pso\nsource = 0.5, -0.25\n");
  const auto spec = parse_config(is);
  ASSERT_EQ(spec.cases.size(), 1u);
  const auto& m = spec.cases[0].mission;
  EXPECT_EQ(m.algorithm, "pso");
  EXPECT_EQ(m.source.location, (Position{0.5, -0.25}));
  const MissionConfig d;
  EXPECT_EQ(m.robots, d.robots);
  EXPECT_EQ(m.tolerance, d.tolerance);
  EXPECT_EQ(m.time_limit, d.time_limit);
  EXPECT_EQ(m.nav.v_max, d.nav.v_max);
  EXPECT_EQ(m.params.bayes.alpha, d.params.bayes.alpha);
  EXPECT_EQ(spec.repeats, 5);
}

TEST(ParseConfig, UnknownKeyIsNamed) {
  std::istringstream is("algorithm = bs\n\nsourec = 0.85, 0.85\n");
  try {
    parse_config(is, "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sourec"), std::string::npos);
    EXPECT_NE(msg.find("x.cfg:3"), std::string::npos);
  }
}

TEST(ParseConfig, BadValuesReportLine) {
  for (const char* text : {"robots = two\n", "source = 1\n", "field = loud\n", "algorithm = sgd\n",
                           "[case a]\n[case a]\n", "[table]\n", "just words\n", "nav.speed = 0.1 0.2\n"}) {
    std::istringstream is(text);
    EXPECT_THROW(parse_config(is), ConfigError) << text;
  }
}

TEST(ParseConfig, CaseOverridesDefaults) {
  std::istringstream is(R"(nav.speed = 0.04
robots = 3
[case a]
algorithm = bsp
robots = 6
bs.epsilon = 0.2
[case b]
algorithm = rw
start = random
)");
  const auto spec = parse_config(is);
  ASSERT_EQ(spec.cases.size(), 2u);
  EXPECT_EQ(spec.cases[0].mission.robots, 6);
  EXPECT_EQ(spec.cases[1].mission.robots, 3);
  EXPECT_EQ(spec.cases[0].mission.nav.v_max, 0.04);
  EXPECT_EQ(spec.cases[0].mission.params.bayes.epsilon, 0.2);
  EXPECT_EQ(spec.cases[1].mission.algorithm, "random_walk");
  EXPECT_FALSE(spec.cases[1].mission.start.has_value());
}

TEST(ParseConfig, MissingFile) { EXPECT_THROW(parse_config("/nonexistent/file.cfg"), std::runtime_error); }

TEST(ParseConfig, ShippedTable3HasFiveCases) {
  const auto spec = parse_config(std::string(SRCSEEK_SOURCE_DIR) + "/configs/table3.cfg");
  ASSERT_EQ(spec.cases.size(), 5u);
  struct Row {
    const char* alg;
    std::optional<Position> start;
    Position source;
  };
  const Row rows[] = {{"bs", Position{0, 0}, {0.85, 0.85}},
                      {"bs", Position{0.85, -0.85}, {0.85, 0.85}},
                      {"bs", Position{0.85, -0.85}, {-0.85, 0.85}},
                      {"random_walk", std::nullopt, {0.85, 0.85}},
                      {"pso", Position{0, 0}, {0.85, 0.85}}};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& m = spec.cases[i].mission;
    EXPECT_EQ(m.algorithm, rows[i].alg);
    EXPECT_EQ(m.start, rows[i].start);
    EXPECT_EQ(m.source.location, rows[i].source);
    EXPECT_EQ(m.field_mode, FieldMode::kAnalytic);
    EXPECT_EQ(m.tolerance, 0.2);
    EXPECT_EQ(m.time_limit, 300);
  }
  EXPECT_EQ(spec.repeats, 5);
}

TEST(ParseConfig, ShippedNoisyAndPenalizedConfigs) {
  const auto t4 = parse_config(std::string(SRCSEEK_SOURCE_DIR) + "/configs/table4.cfg");
  ASSERT_EQ(t4.cases.size(), 5u);
  for (const auto& c : t4.cases) EXPECT_EQ(c.mission.field_mode, FieldMode::kNoisy);
  const auto t5 = parse_config(std::string(SRCSEEK_SOURCE_DIR) + "/configs/table5.cfg");
  ASSERT_EQ(t5.cases.size(), 3u);
  for (const auto& c : t5.cases) EXPECT_EQ(c.mission.algorithm, "bsp");
  EXPECT_EQ(t5.base_seed, t4.base_seed);
}

TEST(Campaign, SummaryMatchesBruteForce) {
  const auto s = run_campaign(small_spec());
  ASSERT_EQ(s.cases.size(), 2u);
  for (const auto& c : s.cases) {
    ASSERT_EQ(c.runs.size(), 3u);
    double lo = 1e9, hi = -1e9;
    int ok = 0;
    for (const auto& r : c.runs) {
      lo = std::min(lo, r.time);
      hi = std::max(hi, r.time);
      ok += r.success();
      if (!r.success()) {
        EXPECT_EQ(r.time, 40.0);
      }
    }
    EXPECT_EQ(c.min_time(), lo);
    EXPECT_EQ(c.max_time(), hi);
    EXPECT_EQ(c.successes(), ok);
    EXPECT_EQ(c.runs[0].seed, 50u);
    EXPECT_EQ(c.runs[2].seed, 52u);
  }
}

TEST(Campaign, NoiselessBayesSwarmHasNoSpread) {
  std::istringstream is("repeats = 5\nalgorithm = bs\nstart = 0, 0\nsource = 0.85, 0.85\nnav.speed = 0.04\n");
  const auto s = run_campaign(parse_config(is));
  EXPECT_EQ(s.cases[0].successes(), 5);
  EXPECT_EQ(s.cases[0].min_time(), s.cases[0].max_time());
}

TEST(Campaign, RerunIsByteIdentical) {
  const auto a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
  run_campaign(small_spec(), {a});
  CampaignOptions par{b};
  par.parallel_runs = true;
  run_campaign(small_spec(), par);
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  const auto ta = traces_in(a / "traces"), tb = traces_in(b / "traces");
  ASSERT_EQ(ta.size(), 6u);
  ASSERT_EQ(tb.size(), 6u);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(fs::path(ta[i]).filename(), fs::path(tb[i]).filename());
    EXPECT_EQ(slurp(ta[i]), slurp(tb[i]));
  }
}

TEST(Campaign, SeedReplaysSingleRun) {
  const auto spec = small_spec();
  const auto s = run_campaign(spec);
  MissionConfig cfg = spec.cases[1].mission;
  cfg.seed = s.cases[1].runs[2].seed;
  const auto r = run_mission(cfg);
  EXPECT_EQ(r.success ? r.mission_time : cfg.time_limit, s.cases[1].runs[2].time);
}

TEST(Campaign, RunErrorsBecomeFailedRows) {
  std::istringstream is("repeats = 2\nfield = grid\ngrid_file = /nonexistent/grid.csv\ntime_limit = 10\n");
  const auto dir = scratch_dir("errors");
  const auto s = run_campaign(parse_config(is), {dir});
  ASSERT_EQ(s.cases[0].runs.size(), 2u);
  for (const auto& r : s.cases[0].runs) {
    EXPECT_EQ(r.outcome, RunOutcome::kError);
    EXPECT_FALSE(r.error.empty());
    EXPECT_EQ(r.time, 10.0);
  }
  const auto back = summarize(traces_in(dir / "traces"));
  EXPECT_EQ(back.cases[0].runs[0].outcome, RunOutcome::kError);
}

TEST(Summarize, EmptyInputEmptySummary) { EXPECT_TRUE(summarize({}).cases.empty()); }

TEST(Summarize, MatchesLiveSummary) {
  const auto dir = scratch_dir("summarize");
  const auto live = run_campaign(small_spec(), {dir});
  auto files = traces_in(dir / "traces");
  std::reverse(files.begin(), files.end());
  const auto rebuilt = summarize(files);
  EXPECT_EQ(summary_csv(rebuilt), summary_csv(live));
  EXPECT_EQ(summary_csv(rebuilt), slurp(dir / "summary.csv"));
}

TEST(Summarize, TimeoutCountsAsLimit) {
  const auto dir = scratch_dir("timeout");
  const fs::path f = dir / "t.csv";
  TraceMeta meta{{"case", "c"},        {"case_index", "0"},      {"algorithm", "pso"}, {"start", "0 0"},
                 {"source", "1 1"},    {"seed", "4"},            {"robots", "1"},      {"time_limit", "123.000000"}};
  TraceRow timeout;
  timeout.t = 123.0;
  timeout.event = TraceEvent::kTimeout;
  std::vector<TraceRow> rows{timeout};
  write_trace_csv(f.string(), meta, rows);
  const auto s = summarize({f.string()});
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_FALSE(s.cases[0].runs[0].success());
  EXPECT_EQ(s.cases[0].runs[0].time, 123.0);
}

TEST(Summarize, MalformedTraceIsError) {
  const auto dir = scratch_dir("malformed");
  std::ofstream(dir / "bad.csv") << "not a trace\n";
  EXPECT_THROW(summarize({(dir / "bad.csv").string()}), std::runtime_error);
}

TEST(SummaryCsv, RoundTrip) {
  const auto live = run_campaign(small_spec());
  std::stringstream ss(summary_csv(live));
  const auto back = read_summary_csv(ss);
  EXPECT_EQ(summary_csv(back), summary_csv(live));
}

TEST(Scan, AnalyticPeakAndSize) {
  const auto dir = scratch_dir("scan");
  MissionConfig cfg;
  cfg.source.location = {0.95, 0.95};
  const auto g = run_scan(cfg, 41, (dir / "scan.csv").string());
  EXPECT_EQ(g.values.size(), 1681u);
  const auto back = read_grid_csv((dir / "scan.csv").string());
  EXPECT_EQ(back.values.size(), 1681u);
  const auto it = std::max_element(back.values.begin(), back.values.end());
  const auto k = static_cast<std::size_t>(it - back.values.begin());
  EXPECT_DOUBLE_EQ(back.xs[k % 41], 0.95);
  EXPECT_DOUBLE_EQ(back.ys[k / 41], 0.95);
  EXPECT_EQ(run_scan(cfg, 2, "").values.size(), 4u);
}

TEST(Scan, NoisySeededIsReproducible) {
  const auto dir = scratch_dir("scan_noisy");
  MissionConfig cfg;
  cfg.field_mode = FieldMode::kNoisy;
  cfg.seed = 17;
  run_scan(cfg, 21, (dir / "a.csv").string());
  run_scan(cfg, 21, (dir / "b.csv").string());
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  cfg.seed = 18;
  run_scan(cfg, 21, (dir / "c.csv").string());
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
}

TEST(Scan, UnwritablePathIsError) {
  MissionConfig cfg;
  EXPECT_THROW(run_scan(cfg, 5, "/nonexistent/dir/scan.csv"), std::runtime_error);
}

TEST(Snapshots, WrittenWithArgmaxIndex) {
  const auto dir = scratch_dir("snapshots");
  std::istringstream is("repeats = 1\nalgorithm = bs\nstart = 0, 0\ntime_limit = 15\n");
  CampaignOptions opt{dir};
  opt.snapshots = true;
  opt.snapshot_resolution = 11;
  run_campaign(parse_config(is), opt);
  const fs::path sdir = dir / "snapshots" / "default_seed1";
  ASSERT_TRUE(fs::exists(sdir / "snapshots.csv"));
  std::ifstream index(sdir / "snapshots.csv");
  std::string line;
  std::getline(index, line);
  EXPECT_EQ(line, "t,robot_id,argmax_x,argmax_y,waypoint_x,waypoint_y,file");
  int rows = 0;
  while (std::getline(index, line)) {
    const auto cells = split_csv_line(line);
    ASSERT_EQ(cells.size(), 7u);
    const auto g = read_grid_csv((sdir / cells[6]).string());
    EXPECT_EQ(g.values.size(), 121u);
    ++rows;
  }
  EXPECT_GT(rows, 0);
}
