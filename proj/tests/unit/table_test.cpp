#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "scenfuzz/errors.hpp"
#include "scenfuzz/table/error_table.hpp"
#include "support/check.hpp"

using namespace scenfuzz;
using namespace scenfuzz::table;
using monitor::Metric;
using monitor::RhoVector;

namespace {

CampaignRecord record(std::string scenario = "following", bool continuous = true) {
  CampaignRecord r;
  r.campaign_id = "c0";
  r.scenario_name = std::move(scenario);
  r.scenario_path = "x.scn";
  r.map_path = "x.map";
  r.seed = 1;
  if (continuous) r.space.continuous = {{"gap", 0, 10}, {"decel", 2, 8}};
  r.space.discrete = {{"sky", {std::string("clear"), std::string("rain")}}};
  return r;
}

ErrorTableRow make_row(const CampaignRecord& rec, std::size_t i, std::array<double, 4> rho, bool feasible = true) {
  ErrorTableRow row;
  row.row = i;
  std::vector<double> unit(rec.space.continuous.size(), 0.1 * static_cast<double>(i % 10));
  row.point = point_from_unit(rec.space, unit, {i % 2});
  row.labels = {i % 2 ? "rain" : "clear"};
  row.feasible = feasible;
  if (feasible) {
    row.rho = RhoVector{rho};
    row.termination = sim::TerminationReason::TimeLimit;
  } else {
    row.note = "requirement failed";
  }
  row.seed = 100 + i;
  row.sampler_state = nlohmann::json::object();
  return row;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t metric_index(Metric m) { return static_cast<std::size_t>(m); }

}  // namespace

TEST_SUITE("error table") {
  TEST_CASE("rows persist across reopen") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    {
      ErrorTable t = ErrorTable::create(tmp / "c", rec);
      for (std::size_t i = 0; i < 3; ++i) t.append(make_row(rec, i, {1, 2, 3, 4}));
    }
    const std::string bytes = slurp(tmp / "c" / "rows.jsonl");
    ErrorTable t = ErrorTable::open(tmp / "c");
    CHECK(t.size() == 3);
    CHECK(t.row(2).seed == 102);
    CHECK(t.row(1).labels == std::vector<std::string>{"rain"});
    CHECK(slurp(tmp / "c" / "rows.jsonl") == bytes);
  }

  TEST_CASE("appending out of order is an index gap") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 3; ++i) t.append(make_row(rec, i, {1, 1, 1, 1}));
    CHECK_THROWS_AS(t.append(make_row(rec, 5, {1, 1, 1, 1})), IndexGap);
    CHECK(t.size() == 3);
  }

  TEST_CASE("create refuses to overwrite an existing campaign") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    t.append(make_row(rec, 0, {1, 1, 1, 1}));
    CHECK_THROWS(ErrorTable::create(tmp / "c", rec));
  }

  TEST_CASE("a torn final line is dropped on reopen") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    {
      ErrorTable t = ErrorTable::create(tmp / "c", rec);
      for (std::size_t i = 0; i < 4; ++i) t.append(make_row(rec, i, {1, -1, 1, 1}));
    }
    const auto rows = tmp / "c" / "rows.jsonl";
    const std::string full = slurp(rows);
    const std::size_t last_start = full.rfind('\n', full.size() - 2) + 1;
    for (std::size_t cut = last_start + 1; cut < full.size(); cut += 13) {
      std::ofstream(rows, std::ios::binary | std::ios::trunc) << full.substr(0, cut);
      ErrorTable t = ErrorTable::open(tmp / "c");
      CHECK(t.size() == 3);
      CHECK(t.row(2).rho == make_row(rec, 2, {1, -1, 1, 1}).rho);
      CHECK(slurp(rows) == full.substr(0, last_start));
      t.append(make_row(rec, 3, {1, -1, 1, 1}));
      CHECK(ErrorTable::open(tmp / "c").size() == 4);
    }
  }

  TEST_CASE("missing row") {
    testing::TempDir tmp("table");
    ErrorTable t = ErrorTable::create(tmp / "c", record());
    CHECK_THROWS_AS(t.row(0), RowNotFound);
  }

  TEST_CASE("summary counts violations per metric") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 10; ++i) t.append(make_row(rec, i, {1, i < 3 ? -1.0 : 1.0, 1, 1}));
    ReportStats s = summarize(t);
    CHECK(s.total == 10);
    CHECK(s.violations[metric_index(Metric::Distance)] == 3);
    CHECK(s.violations[metric_index(Metric::Progress)] == 0);
  }

  TEST_CASE("summary agrees with a full recount") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t i = 0; i < 200; ++i) t.append(make_row(rec, i, {u(rng), u(rng), u(rng), u(rng)}, rng() % 5 != 0));
    ReportStats s = summarize(t, {false});
    const ErrorTable reread = ErrorTable::open(tmp / "c");
    std::array<std::size_t, 4> recount{};
    std::size_t infeasible = 0;
    for (const auto& row : reread.rows()) {
      if (!row.feasible) ++infeasible;
      for (Metric m : monitor::kMetrics) recount[metric_index(m)] += row.violated(m) ? 1 : 0;
    }
    CHECK(s.violations == recount);
    CHECK(s.infeasible == infeasible);
    CHECK(s.total == 200);
  }

  TEST_CASE("all-infeasible campaign renders zeros and no epsilon") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 5; ++i) t.append(make_row(rec, i, {}, false));
    ReportStats s = summarize(t);
    CHECK(s.violations == std::array<std::size_t, 4>{});
    CHECK_FALSE(s.epsilon.has_value());
    CHECK(s.epsilon_label() == "--");
  }

  TEST_CASE("a safe campaign renders an all-zero violation row") {
    testing::TempDir tmp("table");
    CampaignRecord rec = record("Scenario 7");
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 61; ++i) t.append(make_row(rec, i, {1, 1, 1, 1}));
    const std::string md = render_report({summarize(t)});
    CHECK(md.find("| Scenario 7 | Halton | 61 | 0 | 0 | 0 | 0 | ") != std::string::npos);
  }

  TEST_CASE("campaigns without continuous dimensions render epsilon as a dash") {
    testing::TempDir tmp("table");
    CampaignRecord rec = record("merge", false);
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 4; ++i) t.append(make_row(rec, i, {1, 1, 1, 1}));
    CHECK(summarize(t).epsilon_label() == "--");
  }

  TEST_CASE("two samplers on one scenario group under it") {
    testing::TempDir tmp("table");
    CampaignRecord halton = record("following");
    CampaignRecord mab = record("following");
    mab.sampler = sampling::SamplerKind::Mab;
    ErrorTable a = ErrorTable::create(tmp / "a", halton);
    ErrorTable b = ErrorTable::create(tmp / "b", mab);
    for (std::size_t i = 0; i < 4; ++i) {
      a.append(make_row(halton, i, {1, 1, 1, 1}));
      b.append(make_row(mab, i, {1, -1, 1, 1}));
    }
    const std::string md = render_report({summarize(a), summarize(b)});
    CHECK(md.find("| following | Halton | 4 |") != std::string::npos);
    CHECK(md.find("|  | MAB | 4 | 0 | 4 |") != std::string::npos);
  }

  TEST_CASE("scatter export") {
    testing::TempDir tmp("table");
    const CampaignRecord rec = record();
    ErrorTable t = ErrorTable::create(tmp / "c", rec);
    for (std::size_t i = 0; i < 3; ++i) t.append(make_row(rec, i, {1, -1, 1, 1}));
    t.append(make_row(rec, 3, {}, false));

    std::ostringstream all;
    export_scatter(t, {}, all);
    std::istringstream lines(all.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header.rfind("gap,decel,", 0) == 0);
    CHECK(header.find("sky") == std::string::npos);
    std::size_t n = 0;
    for (std::string line; std::getline(lines, line);) ++n;
    CHECK(n == 3);

    std::ostringstream labels;
    export_scatter(t, {"sky"}, labels);
    CHECK(labels.str().find("\nrain,") != std::string::npos);
    CHECK(labels.str().find("\nclear,") != std::string::npos);

    std::ostringstream bad;
    CHECK_THROWS_AS(export_scatter(t, {"nope"}, bad), UnknownDimension);
  }

  TEST_CASE("campaign record survives a JSON round trip") {
    CampaignRecord rec = record();
    rec.max_samples = 12;
    rec.horizon = 7.5;
    rec.thresholds.include_pedestrians = true;
    const CampaignRecord back = record_from_json(record_to_json(rec));
    CHECK(back.space == rec.space);
    CHECK(back.max_samples == rec.max_samples);
    CHECK(back.horizon == rec.horizon);
    CHECK(back.thresholds == rec.thresholds);
  }
}
