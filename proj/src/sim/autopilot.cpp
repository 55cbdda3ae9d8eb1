#include <algorithm>
#include <cmath>

#include "scenfuzz/dsl/instantiate.hpp"
#include "scenfuzz/sim/sut.hpp"

namespace scenfuzz::sim {

namespace {

constexpr double kStoppedSpeed = 0.2;  // m/s, counts as stopped at a stop line

// Times within [0, dt] during which |lateral + v_lateral t| <= half_width.
std::pair<double, double> corridor_window(double lateral, double v_lateral, double half_width, double dt) {
  if (std::abs(v_lateral) < 1e-9) return std::abs(lateral) <= half_width ? std::pair{0.0, dt} : std::pair{dt, dt};
  double a = (-half_width - lateral) / v_lateral;
  double b = (half_width - lateral) / v_lateral;
  if (a > b) std::swap(a, b);
  return {std::clamp(a, 0.0, dt), std::clamp(b, 0.0, dt)};
}

}  // namespace

Autopilot::Autopilot(const MapModel& map, AutopilotConfig cfg) : map_(map), cfg_(cfg) {}

std::vector<std::string> Autopilot::ego_lanes(const MapModel& map, const Handshake& hello) {
  std::vector<std::string> lanes = hello.route;
  if (hello.mission.kind == BehaviorKind::LaneChange) {
    for (const auto& id : dsl::default_route(map, hello.mission.text("target"))) {
      if (std::find(lanes.begin(), lanes.end(), id) == lanes.end()) lanes.push_back(id);
    }
  }
  return lanes;
}

void Autopilot::begin(const Handshake& hello) {
  hello_ = hello;
  path_ = RoutePath(map_, hello.route);
  cruise_ = hello.mission.number("speed", cfg_.cruise_speed);
  lane_change_done_ = false;
  stops_.clear();
  last_speed_.clear();
  for (const auto& inter : map_.intersections) {
    for (const auto& line : inter.stop_lines) {
      if (auto s = path_.route_s(line.lane, line.s)) stops_.push_back({*s, false, std::nullopt});
    }
  }
}

std::optional<Action> Autopilot::act(const WorldState& world) {
  const AgentState& ego = world.ego();
  const double v = ego.speed;
  Action brake;
  brake.accel = -cfg_.brake_limit;

  const BehaviorSpec& mission = hello_.mission;
  if (mission.kind == BehaviorKind::Park) return brake;
  if (mission.kind == BehaviorKind::LaneChange && !lane_change_done_ && world.time + 1e-9 >= mission.number("at")) {
    path_ = RoutePath(map_, dsl::default_route(map_, mission.text("target")));
    stops_.clear();
    lane_change_done_ = true;
  }
  if (path_.empty()) return brake;

  const Projection here = path_.project(ego.position());
  const Lane* nearest = map_.find_lane(world.ego_lane);
  const double corridor = nearest != nullptr ? nearest->width / 2.0 + nearest->shoulder : 4.75;
  if (here.distance > corridor) return brake;  // off route

  Action a;
  const double ld = std::max(cfg_.min_lookahead, 0.8 * v);
  a.pursuit = path_.path().point_at(here.s + ld);

  double accel = cfg_.k_speed * (cruise_ - v);

  // Nearest leader inside the corridor ahead.
  for (std::size_t i = 1; i < world.agents.size(); ++i) {
    const AgentState& other = world.agents[i];
    if (!other.alive) continue;
    if (!is_vehicle(other.kind) && !cfg_.yield_to_pedestrians) continue;
    const Projection p = path_.project(other.position());
    if (p.s <= here.s) continue;
    const double gap = p.s - here.s;
    const double v_along = other.speed * std::cos(other.pose.heading - p.heading);
    const double v_lateral = other.speed * std::sin(other.pose.heading - p.heading);
    // Part of the coming step the agent spends ahead of the ego inside the corridor.
    const double dt = hello_.dt;
    const double closing = v - v_along;
    const double pass = closing > 0.0 ? gap / closing : dt;
    const auto [in_from, in_to] = corridor_window(p.lateral, v_lateral, cfg_.corridor, dt);
    const double share = std::max(0.0, std::min({in_to, pass, dt}) - in_from) / dt;
    if (share <= 0.0) continue;
    const double v_lead = std::max(0.0, v_along);
    double law = cfg_.k_gap * (gap - (cfg_.standstill_gap + v * cfg_.time_gap)) + cfg_.k_speed * (v_lead - v);
    if (v > v_lead) {
      const double room = std::max(gap - cfg_.standstill_gap, 0.5);
      law = std::min(law, -(v * v - v_lead * v_lead) / (2.0 * room));
    }
    double lead_accel = 0.0;
    if (auto it = last_speed_.find(other.name); it != last_speed_.end() && world.time > last_time_) {
      lead_accel = std::min(0.0, (other.speed - it->second) / (world.time - last_time_));
    }
    const double closing_limit = std::max(gap - cfg_.keep_clear, 0.0) / cfg_.closing_time;
    law = std::min(law, lead_accel + 1.5 * (v_lead + closing_limit - v));
    accel = share * std::min(accel, std::max(law, -cfg_.brake_limit)) + (1.0 - share) * accel;
  }

  for (auto& stop : stops_) {
    if (stop.cleared) continue;
    const double d = stop.route_s - here.s;
    if (d < -1.0) {
      stop.cleared = true;
      continue;
    }
    if (stop.stopped_since || (v < kStoppedSpeed && d < 3.0)) {
      if (!stop.stopped_since) {
        // Interpolate the moment the speed fell below the threshold.
        double since = world.time;
        auto prev = last_speed_.find(ego.name);
        if (prev != last_speed_.end() && prev->second > kStoppedSpeed && world.time > last_time_) {
          since -= (world.time - last_time_) * (kStoppedSpeed - v) / (prev->second - v);
        }
        stop.stopped_since = since;
      }
      const double release = *stop.stopped_since + cfg_.stop_wait;
      if (world.time + 1e-9 >= release) {
        stop.cleared = true;
        continue;
      }
      // Release part way through this step.
      const double share = std::clamp((world.time + hello_.dt - release) / hello_.dt, 0.0, 1.0);
      const double hold = std::min(accel, v > 0.0 ? -cfg_.brake_limit : 0.0);
      accel = share * accel + (1.0 - share) * hold;
      continue;
    }
    // Track a constant-deceleration speed profile that reaches zero just before the line.
    const double v_ref = std::sqrt(2.0 * cfg_.stop_decel * std::max(d - 1.5, 0.0));
    accel = std::min(accel, 1.5 * (v_ref - v) - cfg_.stop_decel);
  }

  // Come to rest before the end of the route.
  const double to_end = path_.path().length() - here.s;
  accel = std::min(accel, 1.5 * (std::sqrt(2.0 * cfg_.stop_decel * std::max(to_end - 2.0, 0.0)) - v));

  last_speed_.clear();
  for (const auto& other : world.agents) last_speed_[other.name] = other.speed;
  last_time_ = world.time;

  a.accel = std::clamp(accel, -cfg_.brake_limit, 4.0);
  return a;
}

}  // namespace scenfuzz::sim
