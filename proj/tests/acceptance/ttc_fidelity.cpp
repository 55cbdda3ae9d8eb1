// Root substitution and frozen-velocity forward integration against the TTC monitor.
#include <chrono>
#include <cmath>
#include <random>

#include "scenfuzz/monitor/metrics.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

namespace {

constexpr double kRadius = 5.0;
constexpr double kThreshold = 2.0;
constexpr double kStep = 0.001;
constexpr double kHorizon = 20.0;

double gap(Vec2 p, Vec2 v, double t) { return std::hypot(p.x + v.x * t, p.y + v.y * t); }

// First time the relative position is within the shell, by stepping forward
// and bisecting the step where the shell is crossed.
std::optional<double> first_contact(Vec2 p, Vec2 v) {
  if (gap(p, v, 0.0) <= kRadius) return 0.0;
  const int steps = static_cast<int>(std::lround(kHorizon / kStep));
  double prev = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double t = k * kStep;
    if (gap(p, v, t) <= kRadius) {
      double lo = prev;
      double hi = t;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(p, v, mid) <= kRadius ? hi : lo) = mid;
      }
      return hi;
    }
    prev = t;
  }
  return std::nullopt;
}

sim::Trace single_step(Vec2 p, Vec2 v) {
  sim::WorldState w;
  w.ego_lane = "L0";
  sim::AgentState ego;
  ego.name = "ego";
  sim::AgentState other;
  other.name = "other";
  other.pose = {p.x, p.y, std::atan2(v.y, v.x)};
  other.speed = std::hypot(v.x, v.y);
  w.agents = {ego, other};
  sim::Trace t;
  t.steps.push_back(w);
  return t;
}

}  // namespace

int main() {
  testing::Report report("ttc_fidelity");
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> pos(-40.0, 40.0);
  std::uniform_real_distribution<double> vel(-20.0, 20.0);

  int roots_cases = 0;
  double worst_residual = 0.0;
  int compared = 0;
  int boundary = 0;
  int disagreements = 0;
  int violations = 0;
  std::string first_disagreement;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{pos(rng), pos(rng)};
    const Vec2 v{vel(rng), vel(rng)};
    const monitor::TtcRoots r = monitor::ttc_roots(p, v, kRadius);
    if (r.kind == monitor::TtcRoots::Case::Roots) {
      ++roots_cases;
      worst_residual = std::max({worst_residual, std::abs(gap(p, v, r.t1) - kRadius), std::abs(gap(p, v, r.t2) - kRadius)});
    }
    // The monitor sees the velocity through speed and heading, as in a trace.
    const sim::Trace trace = single_step(p, v);
    const Vec2 v_seen = trace.steps[0].agents[1].velocity();
    const double rho = monitor::metric_ttc(trace);
    if (std::abs(rho) < 1e-6) {
      ++boundary;
      continue;
    }
    const auto contact = first_contact(p, v_seen);
    const bool oracle_violation = contact && *contact < kThreshold;
    ++compared;
    violations += oracle_violation ? 1 : 0;
    if (oracle_violation != (rho < 0.0)) {
      ++disagreements;
      if (first_disagreement.empty()) {
        first_disagreement = fmt::format("p=({},{}) v=({},{}) rho={}", p.x, p.y, v.x, v.y, rho);
      }
    }
  }
  report.check(roots_cases > 100 && worst_residual <= 1e-6, "roots satisfy |p + v t| = 5",
               fmt::format("{} root pairs, worst residual {:.3g}", roots_cases, worst_residual));
  report.check(disagreements == 0 && violations > 0 && violations < compared, "verdict matches forward integration",
               fmt::format("{} compared, {} violating, {} on the boundary band, {} disagree {}", compared, violations,
                           boundary, disagreements, first_disagreement));

  // Relative rest is decided by the current distance alone.
  report.check(monitor::metric_ttc(single_step({3.0, 0.0}, {0.0, 0.0})) < 0.0, "relative rest inside the shell violates");
  report.check(monitor::metric_ttc(single_step({8.0, 0.0}, {0.0, 0.0})) > 0.0, "relative rest outside the shell is safe");

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 10.0, "runtime under 10 s", fmt::format("{:.2f} s", secs));
  return report.finish();
}
