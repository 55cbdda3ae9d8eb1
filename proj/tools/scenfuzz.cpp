#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "scenfuzz/engine/engine.hpp"
#include "scenfuzz/errors.hpp"

namespace fs = std::filesystem;
using namespace scenfuzz;

namespace {

constexpr int kExitViolation = 0;
constexpr int kExitClean = 1;
constexpr int kExitConfig = 2;

nlohmann::json rho_json(const std::optional<monitor::RhoVector>& rho) {
  if (!rho) return nullptr;
  nlohmann::json j = nlohmann::json::object();
  for (monitor::Metric m : monitor::kMetrics) j[std::string(monitor::to_string(m))] = (*rho)[m];
  return j;
}

int run_falsify(engine::CampaignConfig cfg, const std::string& sampler, std::optional<double> max_seconds,
                bool no_time_limit, std::optional<int> deadline_ms) {
  auto kind = sampling::sampler_kind_from_string(sampler);
  if (!kind) throw ConfigError(fmt::format("unknown sampler '{}'", sampler));
  cfg.sampler = *kind;
  if (max_seconds) cfg.max_seconds = max_seconds;
  if (no_time_limit) cfg.max_seconds.reset();
  if (deadline_ms) cfg.sut_deadline = std::chrono::milliseconds(*deadline_ms);
  if (const char* env = std::getenv("SCENFUZZ_WORKERS")) {
    try {
      cfg.workers = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("SCENFUZZ_WORKERS must be an integer, got '{}'", env));
    }
  }
  const engine::CampaignSummary summary = engine::falsify(cfg);
  fmt::print("{}: {} samples, {} violating\n", summary.dir.string(), summary.rows, summary.violating_rows);
  return summary.violating_rows > 0 ? kExitViolation : kExitClean;
}

int run_replay(const fs::path& dir, std::size_t row, const std::optional<fs::path>& trace_out) {
  const engine::ReplayResult r = engine::replay(dir, row);
  nlohmann::json out;
  out["row"] = row;
  out["feasible"] = r.outcome.feasible;
  if (!r.outcome.feasible) out["note"] = fmt::format("InfeasibleSample: {}", r.outcome.note);
  out["rho"] = rho_json(r.outcome.rho);
  out["stored_rho"] = rho_json(r.row.rho);
  out["matches"] = r.matches;
  if (r.outcome.trace && trace_out) {
    sim::write_trace(*trace_out, *r.outcome.trace);
    out["trace"] = trace_out->string();
  }
  std::cout << out.dump(2) << "\n";
  return r.matches ? 0 : 1;
}

int run_report(const std::vector<fs::path>& dirs, bool coverage, bool raw_units, const fs::path& out_dir) {
  std::vector<table::ReportStats> stats;
  std::vector<table::ErrorTable> tables;
  table::SummaryOptions opts;
  opts.coverage = coverage;
  opts.raw_units = raw_units;
  for (const auto& d : dirs) {
    tables.push_back(table::ErrorTable::open(d));
    stats.push_back(table::summarize(tables.back(), opts));
  }
  const std::string md = table::render_report(stats);
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "report.md", std::ios::binary | std::ios::trunc) << md;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string name = tables.size() == 1 ? "scatter.csv" : fmt::format("scatter_{}.csv", i);
    std::ofstream csv(out_dir / name, std::ios::binary | std::ios::trunc);
    table::export_scatter(tables[i], {}, csv);
  }
  std::cout << md;
  return 0;
}

int run_validate(const std::vector<fs::path>& files, const std::optional<fs::path>& map) {
  std::size_t problems = 0;
  for (const auto& f : files) {
    const auto diags = engine::validate_bundle(f, map);
    if (diags.empty()) fmt::print("ok   {}\n", f.string());
    for (const auto& d : diags) fmt::print("FAIL {}\n", d);
    problems += diags.size();
  }
  return problems == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-based falsification of driving software"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with default flag values");

  engine::CampaignConfig cfg;
  std::string sampler = "halton";
  std::optional<double> max_seconds;
  bool no_time_limit = false;
  std::optional<int> deadline_ms;
  std::optional<std::string> map;

  auto* falsify = app.add_subcommand("falsify", "Search a scenario's parameter space for violations");
  falsify->add_option("--scenario", cfg.scenario, "Scenario program")->required();
  falsify->add_option("--map", map, "Map file overriding the scenario's map line");
  falsify->add_option("--sampler", sampler, "random, halton or mab")->check(CLI::IsMember({"random", "halton", "mab"}));
  falsify->add_option("--seed", cfg.seed, "Campaign seed");
  falsify->add_option("--max-samples", cfg.max_samples, "Sample budget");
  falsify->add_option("--max-seconds", max_seconds, "Wall-clock budget (default 1800)");
  falsify->add_flag("--no-time-limit", no_time_limit, "Drop the wall-clock budget");
  falsify->add_option("--sut", cfg.sut, "builtin, null, tcp://host:port or stdio:<cmd>");
  falsify->add_option("--out", cfg.out, "Campaign directory")->required();
  falsify->add_option("--dt", cfg.dt, "Simulation timestep in seconds");
  falsify->add_option("--horizon", cfg.horizon, "Episode length in seconds");
  falsify->add_option("--workers", cfg.workers, "Parallel rollouts");
  falsify->add_option("--mab-bins", cfg.mab.bins, "Bins per continuous dimension");
  falsify->add_option("--mab-c", cfg.mab.exploration, "UCB exploration constant");
  falsify->add_option("--batch", cfg.mab.batch, "Draws allowed before feedback arrives");
  falsify->add_flag("--keep-all-traces", cfg.keep_all_traces, "Store traces of safe rows too");
  falsify->add_flag("--resume", cfg.resume, "Continue an interrupted campaign");
  falsify->add_option("--sut-deadline", deadline_ms, "Per-step SUT reply deadline in ms");
  falsify->add_option("--distance-threshold", cfg.thresholds.distance);
  falsify->add_option("--ttc-threshold", cfg.thresholds.ttc);
  falsify->add_option("--ttc-radius", cfg.thresholds.ttc_radius);
  falsify->add_option("--progress-threshold", cfg.thresholds.progress);
  falsify->add_option("--lane-threshold", cfg.thresholds.lane);
  falsify->add_flag("--include-pedestrians", cfg.thresholds.include_pedestrians, "Count pedestrians in TTC");
  falsify->add_option("--cruise-speed", cfg.autopilot.cruise_speed, "Builtin autopilot cruise speed");

  fs::path replay_dir;
  std::size_t replay_row = 0;
  std::optional<fs::path> trace_out;
  auto* replay = app.add_subcommand("replay", "Re-simulate one error-table row");
  replay->add_option("dir", replay_dir, "Campaign directory")->required();
  replay->add_option("row", replay_row, "Row index")->required();
  replay->add_option("--trace-out", trace_out, "Write the re-simulated trace here");

  std::vector<fs::path> report_dirs;
  bool coverage = false;
  bool raw_units = false;
  fs::path report_out = ".";
  auto* report = app.add_subcommand("report", "Summarize campaigns as a markdown table");
  report->add_option("dirs", report_dirs, "Campaign directories")->required();
  report->add_flag("--coverage", coverage, "Compute epsilon coverage");
  report->add_flag("--raw-units", raw_units, "Coverage in feature units instead of the unit cube");
  report->add_option("--out", report_out, "Directory for report.md and scatter files");

  std::vector<fs::path> validate_files;
  auto* validate = app.add_subcommand("validate", "Parse, instantiate and smoke-test scenario programs");
  validate->add_option("files", validate_files, "Scenario programs")->required();
  validate->add_option("--map", map, "Map file overriding the scenario's map line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (map) cfg.map = fs::path(*map);
    if (falsify->parsed()) return run_falsify(cfg, sampler, max_seconds, no_time_limit, deadline_ms);
    if (replay->parsed()) return run_replay(replay_dir, replay_row, trace_out);
    if (report->parsed()) return run_report(report_dirs, coverage, raw_units, report_out);
    if (validate->parsed()) return run_validate(validate_files, cfg.map);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const HashMismatch& e) {
    fmt::print(stderr, "hash mismatch: {}\n", e.what());
    return kExitConfig;
  } catch (const SutUnreachable& e) {
    fmt::print(stderr, "SUT unreachable: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
