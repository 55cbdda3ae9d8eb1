// Lead-vehicle braking against the builtin autopilot: an independent
// longitudinal sweep locates the violating region, the full simulator agrees
// with it, a 100-sample Halton campaign finds a distance violation and the
// violating row replays to the same robustness vector.
#include <algorithm>
#include <chrono>
#include <cmath>

#include "scenfuzz/engine/engine.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

namespace {

// Closed-loop single-lane model of the bundled following scenario: both cars
// start at 20 m/s, the ego runs the baseline gap law, the lead brakes at
// `decel` from `brake_at` on. Returns the minimum centre distance.
double oracle_min_gap(double gap, double decel, double brake_at) {
  constexpr double dt = 0.1, cruise = 20.0, lane_end = 300.0, ego_start = 20.0;
  constexpr double standstill = 8.0, time_gap = 1.0, k_gap = 0.3, k_speed = 0.6;
  constexpr double keep_clear = 5.5, closing_time = 2.5, end_decel = 2.0, brake_limit = 5.0;
  double xe = ego_start, ve = 20.0, xl = ego_start + gap, vl = 20.0;
  double prev_vl = vl;
  bool have_prev = false;
  double min_gap = gap;
  for (int k = 0; k < 150; ++k) {
    const double t = k * dt;
    const double g = xl - xe;
    double a = k_speed * (cruise - ve);
    double law = k_gap * (g - (standstill + ve * time_gap)) + k_speed * (vl - ve);
    if (ve > vl) law = std::min(law, -(ve * ve - vl * vl) / (2.0 * std::max(g - standstill, 0.5)));
    const double lead_accel = have_prev ? std::min(0.0, (vl - prev_vl) / dt) : 0.0;
    law = std::min(law, lead_accel + 1.5 * (vl + std::max(g - keep_clear, 0.0) / closing_time - ve));
    a = std::min(a, law);
    a = std::min(a, 1.5 * (std::sqrt(2.0 * end_decel * std::max(lane_end - xe - 2.0, 0.0)) - ve));
    a = std::clamp(a, -brake_limit, 4.0);
    prev_vl = vl;
    have_prev = true;

    const double al = std::clamp(t + 1e-9 >= brake_at ? -decel : 1.0 * (20.0 - vl), -8.0, 4.0);
    const double ve2 = std::clamp(ve + a * dt, 0.0, 30.0);
    const double vl2 = std::clamp(vl + al * dt, 0.0, 30.0);
    xe += dt * 0.5 * (ve + ve2);
    xl += dt * 0.5 * (vl + vl2);
    ve = ve2;
    vl = vl2;
    min_gap = std::min(min_gap, xl - xe);
  }
  return min_gap;
}

}  // namespace

int main() {
  testing::Report report("following_falsification");
  const auto start = std::chrono::steady_clock::now();
  const auto scenario_file = testing::scenario_path("02_vehicle_following.scn");
  const engine::LoadedScenario scenario = engine::load_scenario(scenario_file);
  const auto& dims = scenario.space.continuous;
  const bool layout = dims.size() == 3 && dims[0].name == "gap" && dims[1].name == "decel" && dims[2].name == "brake_at";
  report.check(layout, "feature space is gap, decel, brake_at");
  if (!layout) return report.finish();

  // Sweep the init-gap x brake-decel grid at three braking times.
  sim::RolloutConfig rollout;
  rollout.map_ref = "oneway.map";
  int cells = 0, violating = 0, compared = 0, disagree = 0;
  std::string first_disagreement;
  for (double brake_at : {0.0, 1.5, 3.0}) {
    for (int gi = 0; gi <= 11; ++gi) {
      for (int di = 0; di <= 6; ++di) {
        const double gap = dims[0].lo + (dims[0].hi - dims[0].lo) * gi / 11.0;
        const double decel = dims[1].lo + (dims[1].hi - dims[1].lo) * di / 6.0;
        const double margin = oracle_min_gap(gap, decel, brake_at) - 5.0;
        ++cells;
        violating += margin < 0.0 ? 1 : 0;
        if (std::abs(margin) < 0.25) continue;
        const SamplePoint p = point_from_unit(
            scenario.space, {(gap - dims[0].lo) / (dims[0].hi - dims[0].lo), (decel - dims[1].lo) / (dims[1].hi - dims[1].lo),
                             (brake_at - dims[2].lo) / (dims[2].hi - dims[2].lo)},
            std::vector<std::size_t>(scenario.space.discrete.size(), 0));
        sim::Autopilot sut(scenario.map);
        const engine::Outcome o = engine::evaluate_point(scenario, p, sut, rollout, {}, 0);
        ++compared;
        const bool sim_violates = o.rho && o.rho->violated(monitor::Metric::Distance);
        if (sim_violates != (margin < 0.0)) {
          ++disagree;
          if (first_disagreement.empty()) {
            first_disagreement = fmt::format(" first: gap {:.1f} decel {:.1f} brake_at {:.1f} oracle {:.3f} sim {:.3f}", gap,
                                             decel, brake_at, margin, o.rho ? (*o.rho)[monitor::Metric::Distance] : 0.0);
          }
        }
      }
    }
  }
  report.check(violating > 0, "oracle sweep finds a violating region", fmt::format("{} of {} grid cells", violating, cells));
  report.check(disagree == 0, "simulator agrees with the oracle off the boundary band",
               fmt::format("{} cells compared, {} disagree{}", compared, disagree, first_disagreement));

  testing::TempDir tmp("following");
  engine::CampaignConfig cfg;
  cfg.scenario = scenario_file;
  cfg.max_samples = 100;
  cfg.out = tmp / "campaign";
  const engine::CampaignSummary summary = engine::falsify(cfg);
  const table::ErrorTable tbl = table::ErrorTable::open(cfg.out);
  std::optional<std::size_t> first_row;
  std::size_t distance_rows = 0;
  for (const auto& row : tbl.rows()) {
    if (row.rho && row.rho->violated(monitor::Metric::Distance)) {
      ++distance_rows;
      if (!first_row) first_row = row.row;
    }
  }
  report.check(summary.rows == 100 && distance_rows >= 1, "100 Halton samples find a distance violation",
               fmt::format("{} rows, {} with a distance violation", summary.rows, distance_rows));
  if (first_row) {
    const engine::ReplayResult r = engine::replay(cfg.out, *first_row);
    report.check(r.matches && r.outcome.rho == r.row.rho, "violating row replays to an identical rho vector",
                 fmt::format("row {}", *first_row));
  } else {
    report.check(false, "violating row replays to an identical rho vector", "no violating row");
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 300.0, "runtime under 5 min", fmt::format("{:.2f} s", secs));
  return report.finish();
}
