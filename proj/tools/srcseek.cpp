// Command-line front end: run, campaign, scan, summarize.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "srcseek/campaign.hpp"
#include "srcseek/config.hpp"

namespace fs = std::filesystem;
using namespace srcseek;

namespace {

const CaseSpec& pick_case(const CampaignSpec& spec, const std::string& name) {
  if (name.empty()) return spec.cases.front();
  for (const auto& c : spec.cases) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no case named '" + name + "'");
}

void print_summary(const CampaignSummary& s) {
  std::printf("%-28s %-4s %9s %9s %9s %9s\n", "case", "alg", "success", "min_s", "max_s", "median_s");
  for (const auto& c : s.cases) {
    std::printf("%-28s %-4s %5d/%-3zu %9.2f %9.2f %9.2f\n", c.name.c_str(), c.algorithm.c_str(), c.successes(),
                c.runs.size(), c.min_time(), c.max_time(), c.median_time());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot acoustic source-seeking simulator"};
  app.require_subcommand(1);

  std::string config, case_name;
  std::string run_out = "trace.csv", campaign_out, scan_out = "scan.csv", summary_out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool snapshots = false, parallel = false;
  int resolution = 41;
  std::vector<std::string> traces;

  auto* run = app.add_subcommand("run", "Run one mission and write its trace");
  run->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--case", case_name, "Case name (default: first case)");
  run->add_option("--seed", seed, "Master seed")->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", run_out, "Trace CSV path")->capture_default_str();
  run->add_flag("--snapshots", snapshots, "Write belief snapshots next to the trace");
  run->add_option("--resolution", resolution, "Snapshot grid resolution")->default_val(41);
  run->add_flag("--parallel", parallel, "Run robot decisions concurrently");

  auto* campaign = app.add_subcommand("campaign", "Run every case of a config for its repeat count");
  campaign->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  campaign->add_option("--seed", seed, "Base seed (overrides base_seed)")->each([&](const std::string&) {
    seed_given = true;
  });
  campaign->add_option("--out", campaign_out, "Output directory (overrides output)");
  campaign->add_flag("--snapshots", snapshots, "Write belief snapshots for every run");
  campaign->add_option("--resolution", resolution, "Snapshot grid resolution")->default_val(41);
  campaign->add_flag("--parallel", parallel, "Run missions concurrently");

  auto* scan = app.add_subcommand("scan", "Sample the configured field on a grid");
  scan->add_option("--config", config, "Config file")->required()->check(CLI::ExistingFile);
  scan->add_option("--case", case_name, "Case name (default: first case)");
  scan->add_option("--seed", seed, "Seed for noisy mode")->each([&](const std::string&) { seed_given = true; });
  scan->add_option("--resolution", resolution, "Nodes per axis")->default_val(41);
  scan->add_option("--out", scan_out, "Grid CSV path")->capture_default_str();

  auto* summ = app.add_subcommand("summarize", "Recompute a campaign summary from trace files");
  summ->add_option("traces", traces, "Trace CSV files or directories")->required();
  summ->add_option("--out", summary_out, "Summary CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const CampaignSpec spec = parse_config(config);
      const CaseSpec& cs = pick_case(spec, case_name);
      MissionConfig cfg = cs.mission;
      cfg.seed = seed_given ? seed : spec.base_seed;
      cfg.parallel_decisions = cfg.parallel_decisions || parallel;
      if (snapshots) cfg.snapshot_resolution = resolution;
      const MissionResult r = run_mission(cfg);
      const fs::path out_path(run_out);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      const std::size_t index = static_cast<std::size_t>(&cs - spec.cases.data());
      write_trace_csv(run_out, trace_metadata(cfg, index), r.trace);
      if (snapshots) {
        write_snapshots(out_path.parent_path() / (out_path.stem().string() + "_snapshots"), r);
      }
      std::printf("%s: %s at t=%.2f s (seed %llu)\n", cfg.name.c_str(), r.termination.c_str(), r.mission_time,
                  static_cast<unsigned long long>(cfg.seed));
    } else if (*campaign) {
      CampaignSpec spec = parse_config(config);
      if (seed_given) spec.base_seed = seed;
      CampaignOptions opt;
      opt.output_dir = campaign_out.empty() ? fs::path(spec.output_dir) : fs::path(campaign_out);
      opt.parallel_runs = parallel;
      opt.snapshots = snapshots;
      opt.snapshot_resolution = resolution;
      const CampaignSummary s = run_campaign(spec, opt);
      print_summary(s);
      for (const auto& c : s.cases) {
        for (const auto& r : c.runs) {
          if (r.outcome == RunOutcome::kError) {
            std::fprintf(stderr, "%s seed %llu: %s\n", c.name.c_str(), static_cast<unsigned long long>(r.seed),
                         r.error.c_str());
          }
        }
      }
    } else if (*scan) {
      const CampaignSpec spec = parse_config(config);
      MissionConfig cfg = pick_case(spec, case_name).mission;
      cfg.seed = seed_given ? seed : spec.base_seed;
      const fs::path out_path(scan_out);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      const GridField g = run_scan(cfg, resolution, scan_out);
      std::printf("wrote %zu nodes to %s\n", g.values.size(), scan_out.c_str());
    } else if (*summ) {
      std::vector<std::string> files;
      for (const auto& t : traces) {
        if (fs::is_directory(t)) {
          for (const auto& e : fs::directory_iterator(t)) {
            if (e.path().extension() == ".csv") files.push_back(e.path().string());
          }
        } else {
          files.push_back(t);
        }
      }
      const CampaignSummary s = summarize(files);
      if (summary_out.empty()) {
        write_summary_csv(std::cout, s);
      } else {
        std::ofstream os(summary_out);
        if (!os) throw std::runtime_error("cannot write " + summary_out);
        write_summary_csv(os, s);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
