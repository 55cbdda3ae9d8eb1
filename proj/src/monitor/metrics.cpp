#include "scenfuzz/monitor/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "scenfuzz/errors.hpp"

namespace scenfuzz::monitor {

namespace {

constexpr double kRestEpsilon = 1e-12;

double clamp_cap(double v, const Thresholds& th) { return std::clamp(v, -th.cap, th.cap); }

bool counts_as_other(const sim::AgentState& a, const Thresholds& th) {
  return a.alive && (is_vehicle(a.kind) || th.include_pedestrians);
}

template <typename F>
void for_each_other(const sim::Trace& trace, const Thresholds& th, F&& f) {
  for (const auto& step : trace.steps) {
    const sim::AgentState& ego = step.ego();
    for (std::size_t i = 1; i < step.agents.size(); ++i) {
      if (counts_as_other(step.agents[i], th)) f(ego, step.agents[i]);
    }
  }
}

}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Progress: return "progress";
    case Metric::Distance: return "distance";
    case Metric::Ttc: return "ttc";
    case Metric::Lane: return "lane";
  }
  return "progress";
}

std::optional<Metric> metric_from_string(std::string_view s) {
  for (Metric m : kMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::size_t RhoVector::violation_count() const {
  return static_cast<std::size_t>(std::count_if(rho.begin(), rho.end(), [](double r) { return r < 0.0; }));
}

TtcRoots ttc_roots(Vec2 p, Vec2 v, double r) {
  const double a = dot(v, v);
  const double b = dot(p, v);
  const double c = dot(p, p) - r * r;
  if (a < kRestEpsilon) {
    return {norm(p) <= r ? TtcRoots::Case::RelativeRestViolating : TtcRoots::Case::RelativeRestSafe, 0.0, 0.0};
  }
  const double disc = b * b - a * c;
  if (disc < 0.0) return {TtcRoots::Case::NoRealRoots, 0.0, 0.0};
  // Cancellation-free form of the two roots of a t^2 + 2 b t + c.
  const double q = -(b + std::copysign(std::sqrt(disc), b));
  double t1 = q / a;
  double t2 = q != 0.0 ? c / q : t1;
  if (t1 > t2) std::swap(t1, t2);
  return {TtcRoots::Case::Roots, t1, t2};
}

double ttc_margin(Vec2 p, Vec2 v, const Thresholds& th) {
  const TtcRoots roots = ttc_roots(p, v, th.ttc_radius);
  switch (roots.kind) {
    case TtcRoots::Case::NoRealRoots:
    case TtcRoots::Case::RelativeRestSafe:
      return th.cap;
    case TtcRoots::Case::RelativeRestViolating:
      return clamp_cap(-th.ttc, th);
    case TtcRoots::Case::Roots:
      if (roots.t2 <= 0.0) return th.cap;
      return clamp_cap(roots.t1 - th.ttc, th);
  }
  return th.cap;
}

double metric_distance(const sim::Trace& trace, const Thresholds& th) {
  double rho = th.cap;
  for_each_other(trace, th, [&](const sim::AgentState& ego, const sim::AgentState& other) {
    rho = std::min(rho, distance(ego.position(), other.position()) - th.distance);
  });
  return clamp_cap(rho, th);
}

double metric_ttc(const sim::Trace& trace, const Thresholds& th) {
  double rho = th.cap;
  for_each_other(trace, th, [&](const sim::AgentState& ego, const sim::AgentState& other) {
    rho = std::min(rho, ttc_margin(other.position() - ego.position(), other.velocity() - ego.velocity(), th));
  });
  return rho;
}

double metric_progress(const sim::Trace& trace, const Thresholds& th) {
  if (trace.steps.empty()) return -th.progress;
  const Vec2 first = trace.steps.front().ego().position();
  const Vec2 last = trace.steps.back().ego().position();
  return clamp_cap(distance(first, last) - th.progress, th);
}

double metric_lane(const sim::Trace& trace, const sim::MapModel& map, const Thresholds& th) {
  if (trace.steps.empty()) return th.lane;
  double sum = 0.0;
  for (const auto& step : trace.steps) {
    const sim::Lane& lane = map.lane(step.ego_lane);
    sum += lane.centerline.project(step.ego().position()).distance;
  }
  return clamp_cap(th.lane - sum / static_cast<double>(trace.steps.size()), th);
}

RhoVector evaluate(const sim::Trace& trace, const sim::MapModel& map, const Thresholds& th) {
  RhoVector v;
  v.rho = {metric_progress(trace, th), metric_distance(trace, th), metric_ttc(trace, th), metric_lane(trace, map, th)};
  return v;
}

}  // namespace scenfuzz::monitor
