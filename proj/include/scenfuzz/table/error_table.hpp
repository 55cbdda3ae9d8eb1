#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenfuzz/feature_space.hpp"
#include "scenfuzz/monitor/metrics.hpp"
#include "scenfuzz/sampling/sampler.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::table {

struct CampaignRecord {
  std::string campaign_id;
  std::string scenario_path;
  std::string scenario_name;
  std::string scenario_hash;  // SHA-256 of the scenario file
  std::string map_path;
  std::string map_hash;
  sampling::SamplerKind sampler = sampling::SamplerKind::Halton;
  sampling::MabConfig mab;
  std::uint64_t seed = 0;
  double dt = 0.1;
  std::optional<double> horizon;  // nullopt: the scenario's own max time
  monitor::Thresholds thresholds;
  std::string sut = "builtin";
  bool keep_all_traces = false;
  std::optional<std::uint64_t> max_samples;
  std::optional<double> max_seconds;
  FeatureSpace space;
  std::string start_time;
  std::string end_time;
};

nlohmann::json record_to_json(const CampaignRecord& r);
CampaignRecord record_from_json(const nlohmann::json& j);

struct ErrorTableRow {
  std::size_t row = 0;
  SamplePoint point;
  std::vector<std::string> labels;  // discrete choices as text
  bool feasible = true;
  std::optional<monitor::RhoVector> rho;  // present iff feasible
  std::optional<sim::TerminationReason> termination;
  std::string note;                  // why an infeasible sample was rejected
  std::uint64_t seed = 0;            // rollout seed
  std::optional<std::string> trace;  // path relative to the campaign directory
  nlohmann::json sampler_state;      // sampler state right after this draw
  std::size_t observed = 0;          // rows already fed back when this row was drawn

  bool violated(monitor::Metric m) const { return rho && rho->violated(m); }
  bool any_violation() const { return rho && rho->any_violation(); }
};

nlohmann::json row_to_json(const ErrorTableRow& r);
ErrorTableRow row_from_json(const nlohmann::json& j);

// Campaign directory: campaign.json, rows.jsonl, traces/, report.md, scatter.csv.
class ErrorTable {
 public:
  // Creates a fresh campaign directory; refuses to overwrite existing rows.
  static ErrorTable create(const std::filesystem::path& dir, const CampaignRecord& record);
  // Opens an existing campaign, dropping a torn final line left by a crash.
  static ErrorTable open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const CampaignRecord& record() const { return record_; }
  CampaignRecord& record() { return record_; }
  const std::vector<ErrorTableRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const ErrorTableRow& row(std::size_t i) const;  // throws RowNotFound

  // Durably appends one row (flushed and fsynced). Throws IndexGap when
  // row.row != size() and StorageFull when the write fails.
  void append(const ErrorTableRow& row);
  void save_record() const;
  std::filesystem::path trace_path(std::size_t row) const;
  static std::string trace_ref(std::size_t row);

 private:
  std::filesystem::path dir_;
  CampaignRecord record_;
  std::vector<ErrorTableRow> rows_;
};

struct ReportStats {
  std::string scenario;
  sampling::SamplerKind sampler = sampling::SamplerKind::Halton;
  std::size_t total = 0;
  std::size_t infeasible = 0;
  std::array<std::size_t, monitor::kMetricCount> violations{};
  std::optional<double> epsilon;  // nullopt renders as "--"
  double tolerance = 0.05;        // tolerance actually used for epsilon

  std::string epsilon_label() const;
};

struct SummaryOptions {
  bool coverage = true;
  bool raw_units = false;
  double tolerance = 0.05;
};

ReportStats summarize(const ErrorTable& table, const SummaryOptions& opts = {});

// CSV with the selected dimensions (all continuous ones when `dims` is empty)
// plus one 0/1 column per metric, one line per feasible row.
void export_scatter(const ErrorTable& table, const std::vector<std::string>& dims, std::ostream& out);

std::string sampler_label(sampling::SamplerKind kind);

// Markdown table with columns Scenario | Sampler | Total Samples | Progress |
// Distance | TTC | Lane | ε, rows grouped by scenario.
std::string render_report(const std::vector<ReportStats>& stats);

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

}  // namespace scenfuzz::table
