// Distance, progress and lane verdicts against a direct per-step scan.
#include <chrono>
#include <cmath>
#include <random>

#include "scenfuzz/monitor/metrics.hpp"
#include "support/check.hpp"

using namespace scenfuzz;

namespace {

double point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
  double t = len2 > 0.0 ? ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * (b.x - a.x)), p.y - (a.y + t * (b.y - a.y)));
}

double point_polyline(Vec2 p, const std::vector<Vec2>& pts) {
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, point_segment(p, pts[i], pts[i + 1]));
  return best;
}

struct Lanes {
  std::vector<Vec2> straight{{0.0, 0.0}, {200.0, 0.0}};
  std::vector<Vec2> bent{{0.0, 10.0}, {60.0, 10.0}, {100.0, 40.0}, {160.0, 40.0}};
};

sim::MapModel make_map(const Lanes& l) {
  sim::MapModel m;
  m.name = "synthetic";
  m.lanes.push_back({"A", Polyline(l.straight), 3.5, 3.0, {}, std::nullopt, std::nullopt});
  m.lanes.push_back({"B", Polyline(l.bent), 3.5, 3.0, {}, std::nullopt, std::nullopt});
  return m;
}

}  // namespace

int main() {
  testing::Report report("monitor_oracle");
  const auto start = std::chrono::steady_clock::now();
  const Lanes lanes;
  const sim::MapModel map = make_map(lanes);
  const monitor::Thresholds th;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  struct Tally {
    int compared = 0;
    int violating = 0;
    int boundary = 0;
    int disagree = 0;
  };
  Tally dist, prog, lane;
  auto tally = [](Tally& t, double rho, bool oracle) {
    if (std::abs(rho) < 1e-6) {
      ++t.boundary;
      return;
    }
    ++t.compared;
    t.violating += oracle ? 1 : 0;
    t.disagree += (oracle != (rho < 0.0)) ? 1 : 0;
  };

  for (int n = 0; n < 1000; ++n) {
    const int steps = 2 + static_cast<int>(u(rng) * 60);
    const int others = static_cast<int>(u(rng) * 4);
    const bool on_bent = u(rng) < 0.5;
    const double spread = u(rng) * 3.0;  // lateral scatter of the ego
    const double pace = u(rng) * 1.5;    // metres per step
    sim::Trace trace;
    Vec2 ego{u(rng) * 50.0, on_bent ? 10.0 : 0.0};
    std::vector<Vec2> pos(others);
    std::vector<Vec2> vel(others);
    std::vector<AgentKind> kinds(others);
    for (int j = 0; j < others; ++j) {
      pos[j] = {ego.x + (u(rng) - 0.5) * 40.0, ego.y + (u(rng) - 0.5) * 20.0};
      vel[j] = {(u(rng) - 0.5) * 3.0, (u(rng) - 0.5) * 3.0};
      kinds[j] = u(rng) < 0.25 ? AgentKind::Pedestrian : (u(rng) < 0.5 ? AgentKind::Bus : AgentKind::Car);
    }
    for (int i = 0; i < steps; ++i) {
      sim::WorldState w;
      w.time = i * 0.1;
      w.ego_lane = on_bent ? "B" : "A";
      sim::AgentState e;
      e.name = "ego";
      e.pose = {ego.x, ego.y + (u(rng) - 0.5) * 2.0 * spread, 0.0};
      w.agents.push_back(e);
      for (int j = 0; j < others; ++j) {
        sim::AgentState o;
        o.name = fmt::format("a{}", j);
        o.kind = kinds[j];
        o.pose = {pos[j].x, pos[j].y, 0.0};
        o.alive = u(rng) < 0.9;
        w.agents.push_back(o);
        pos[j] = pos[j] + vel[j];
      }
      trace.steps.push_back(w);
      ego.x += pace;
    }

    // Direct scans of the defining inequalities.
    bool near = false;
    double sum = 0.0;
    for (const auto& w : trace.steps) {
      const Vec2 e = w.agents[0].position();
      for (std::size_t j = 1; j < w.agents.size(); ++j) {
        const auto& o = w.agents[j];
        if (!o.alive || o.kind == AgentKind::Pedestrian) continue;
        if (std::hypot(o.pose.x - e.x, o.pose.y - e.y) < th.distance) near = true;
      }
      sum += point_polyline(e, w.ego_lane == "A" ? lanes.straight : lanes.bent);
    }
    const Vec2 first = trace.steps.front().agents[0].position();
    const Vec2 last = trace.steps.back().agents[0].position();
    tally(dist, monitor::metric_distance(trace, th), near);
    tally(prog, monitor::metric_progress(trace, th), std::hypot(last.x - first.x, last.y - first.y) < th.progress);
    tally(lane, monitor::metric_lane(trace, map, th), sum / static_cast<double>(trace.steps.size()) > th.lane);
  }

  auto summary = [](const Tally& t) {
    return fmt::format("{} compared, {} violating, {} on the boundary band, {} disagree", t.compared, t.violating,
                       t.boundary, t.disagree);
  };
  auto ok = [](const Tally& t) { return t.disagree == 0 && t.violating > 0 && t.violating < t.compared; };
  report.check(ok(dist), "distance verdicts", summary(dist));
  report.check(ok(prog), "progress verdicts", summary(prog));
  report.check(ok(lane), "lane verdicts", summary(lane));

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.check(secs < 10.0, "runtime under 10 s", fmt::format("{:.2f} s", secs));
  return report.finish();
}
