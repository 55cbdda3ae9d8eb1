#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenfuzz/dsl/ast.hpp"
#include "scenfuzz/feature_space.hpp"
#include "scenfuzz/monitor/metrics.hpp"
#include "scenfuzz/sampling/sampler.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/rollout.hpp"
#include "scenfuzz/sim/sut.hpp"
#include "scenfuzz/table/error_table.hpp"

namespace scenfuzz::engine {

inline constexpr double kDefaultMaxSeconds = 1800.0;

struct CampaignConfig {
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> map;  // overrides the scenario's map line
  sampling::SamplerKind sampler = sampling::SamplerKind::Halton;
  sampling::MabConfig mab;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> max_samples;
  std::optional<double> max_seconds = kDefaultMaxSeconds;
  double dt = 0.1;
  std::optional<double> horizon;
  std::string sut = "builtin";
  std::filesystem::path out;
  int workers = 1;
  bool keep_all_traces = false;
  bool resume = false;
  monitor::Thresholds thresholds;
  sim::AutopilotConfig autopilot;
  std::chrono::milliseconds sut_deadline{1000};
};

struct LoadedScenario {
  dsl::ScenarioProgram program;
  sim::MapModel map;
  std::filesystem::path scenario_path;
  std::filesystem::path map_path;
  FeatureSpace space;
};

// Parses, validates and binds a scenario to its map. Throws ConfigError
// carrying every diagnostic.
LoadedScenario load_scenario(const std::filesystem::path& scenario,
                             const std::optional<std::filesystem::path>& map_override = std::nullopt);

struct Outcome {
  bool feasible = true;
  std::string note;
  std::optional<monitor::RhoVector> rho;
  std::optional<sim::Trace> trace;
};

// Instantiates and simulates one point, then evaluates the monitors.
Outcome evaluate_point(const LoadedScenario& scenario, const SamplePoint& point, sim::Sut& sut,
                       const sim::RolloutConfig& rollout, const monitor::Thresholds& thresholds, std::uint64_t seed);

std::uint64_t rollout_seed(std::uint64_t campaign_seed, std::size_t row);

struct CampaignSummary {
  std::filesystem::path dir;
  std::size_t rows = 0;
  std::size_t violating_rows = 0;
};

// Runs the falsification loop until a budget is exhausted. Throws
// ConfigError or SutUnreachable; nothing is written on a configuration error.
CampaignSummary falsify(const CampaignConfig& cfg);

struct ReplayResult {
  table::ErrorTableRow row;
  Outcome outcome;
  bool matches = false;  // recomputed rho equals the stored one
};

// Re-simulates one row. Throws HashMismatch when the scenario or map file
// changed since the campaign ran, RowNotFound for a missing row.
ReplayResult replay(const std::filesystem::path& dir, std::size_t row);

// Parse, midpoint instantiation and a 5 s smoke rollout with the builtin
// autopilot. Returns one message per problem.
std::vector<std::string> validate_bundle(const std::filesystem::path& scenario,
                                         const std::optional<std::filesystem::path>& map_override = std::nullopt);

// Writes report.md and scatter.csv into the campaign directory.
void write_campaign_report(const table::ErrorTable& table, bool coverage = true, bool raw_units = false);

}  // namespace scenfuzz::engine
