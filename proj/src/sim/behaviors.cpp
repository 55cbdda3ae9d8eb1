#include "scenfuzz/sim/behaviors.hpp"

#include <algorithm>
#include <cmath>

#include "scenfuzz/sim/lanes.hpp"

namespace scenfuzz::sim {

namespace {

constexpr double kTimeEps = 1e-9;

double lookahead(double speed) { return std::max(4.0, speed); }

}  // namespace

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

Behavior::Behavior(BehaviorSpec spec, std::vector<std::string> route) : spec_(std::move(spec)), route_(std::move(route)) {}

bool Behavior::triggered(const AgentState& self, const BehaviorContext& ctx, double trigger, double at) const {
  if (ctx.elapsed + kTimeEps < at) return false;
  return trigger <= 0.0 || distance(self.position(), ctx.world.ego().position()) <= trigger;
}

double Behavior::trigger_time(const AgentState& self, const BehaviorContext& ctx, double trigger, double at) const {
  double t = std::max(at, ctx.elapsed - ctx.dt);
  if (trigger > 0.0 && last_gap_ && *last_gap_ > trigger) {
    const double gap = distance(self.position(), ctx.world.ego().position());
    t = std::max(t, ctx.elapsed - ctx.dt * (trigger - gap) / (*last_gap_ - gap));
  }
  return t;
}

Action Behavior::follow(const AgentState& self, const BehaviorContext& ctx, double speed, double lateral) const {
  Action a;
  a.accel = kSpeedGain * (speed - self.speed);
  if (self.kind == AgentKind::Pedestrian) {
    a.walk_velocity = speed * unit_heading(self.pose.heading);
    return a;
  }
  if (!self.lane.empty()) {
    a.pursuit = point_ahead(ctx.map, route_, self.lane, self.s, lookahead(self.speed), lateral);
  }
  return a;
}

Action Behavior::shift(const AgentState& self, const BehaviorContext& ctx, double speed, double duration) {
  const Lane& frame = ctx.map.lane(frame_lane_);
  const Projection proj = frame.centerline.project(self.position());
  const double ld = lookahead(self.speed);
  // Lateral target at the pursuit point, previewed by the time needed to reach it.
  const double preview = ld / std::max(self.speed, 1.0);
  const double u = duration > 0.0 ? (ctx.elapsed - start_time_ + preview) / duration : 1.0;
  const double lateral = lateral_from_ + (lateral_to_ - lateral_from_) * smoothstep(u);
  if (ctx.elapsed - start_time_ + kTimeEps >= duration) shift_done_ = true;
  Action a;
  a.accel = kSpeedGain * (speed - self.speed);
  a.pursuit = point_ahead(ctx.map, route_, frame_lane_, proj.s, ld, lateral);
  return a;
}

Action Behavior::cross_road(const AgentState& self, const BehaviorContext& ctx) {
  if (!origin_set_) {
    origin_ = self.position();
    origin_set_ = true;
  }
  const Vec2 dest{spec_.number("to_x"), spec_.number("to_y")};
  const Vec2 mid = 0.5 * (origin_ + dest);
  const double speed = spec_.number("speed", 1.4);
  const double wait_before = spec_.number("wait_before");
  const double wait_inside = spec_.number("wait_inside");
  const Vec2 here = self.position();

  if (phase_ == 0 && ctx.elapsed + kTimeEps >= wait_before) phase_ = 1;
  if (phase_ == 1 && distance(here, mid) < 1e-6) {
    phase_ = 2;
    phase_time_ = ctx.elapsed;
  }
  if (phase_ == 2 && ctx.elapsed + kTimeEps >= phase_time_ + wait_inside) phase_ = 3;
  if (phase_ == 3 && distance(here, dest) < 1e-6) phase_ = 4;

  Action a;
  a.walk_velocity = Vec2{};
  if (phase_ == 1 || phase_ == 3) {
    const Vec2 target = phase_ == 1 ? mid : dest;
    const Vec2 to = target - here;
    const double d = norm(to);
    if (d <= speed * ctx.dt) a.walk_velocity = (1.0 / ctx.dt) * to;
    else a.walk_velocity = (speed / d) * to;
  }
  return a;
}

Action Behavior::act(const AgentState& self, const BehaviorContext& ctx) {
  Action a = decide(self, ctx);
  last_gap_ = distance(self.position(), ctx.world.ego().position());
  return a;
}

Action Behavior::decide(const AgentState& self, const BehaviorContext& ctx) {
  switch (spec_.kind) {
    case BehaviorKind::FollowLane: {
      double speed = spec_.number("speed");
      const double jitter = spec_.number("jitter");
      if (jitter > 0.0) speed = std::max(0.0, speed + jitter * (2.0 * uniform01(ctx.rng) - 1.0));
      return follow(self, ctx, speed);
    }
    case BehaviorKind::FollowVehicle: {
      const double speed = spec_.number("speed");
      Action a = follow(self, ctx, speed);
      const AgentState* lead = ctx.world.find(spec_.text("lead"));
      if (lead != nullptr && lead->alive) {
        const double gap = distance(self.position(), lead->position());
        const double law = spec_.number("k_v", 0.5) * (lead->speed - self.speed) +
                           spec_.number("k_s", 0.2) * (gap - self.speed * spec_.number("time_gap", 1.5));
        a.accel = std::min(a.accel, law);
      }
      return a;
    }
    case BehaviorKind::LaneChange: {
      const double speed = spec_.number("speed");
      if (!started_ && self.kind != AgentKind::Pedestrian && !self.lane.empty() &&
          triggered(self, ctx, spec_.number("trigger"), spec_.number("at"))) {
        const Lane& origin = ctx.map.lane(self.lane);
        const Lane& target = ctx.map.lane(spec_.text("target"));
        started_ = true;
        start_time_ = trigger_time(self, ctx, spec_.number("trigger"), spec_.number("at"));
        frame_lane_ = origin.id;
        lateral_from_ = origin.centerline.project(self.position()).lateral;
        const Projection onto = target.centerline.project(self.position());
        lateral_to_ = origin.centerline.project(onto.foot).lateral;
        opposing_ = std::cos(onto.heading - origin.centerline.project(self.position()).heading) < 0.0;
      }
      // An agent moving into an oncoming lane keeps its own direction of travel.
      if (started_ && (!shift_done_ || opposing_)) return shift(self, ctx, speed, spec_.number("duration", 3.0));
      return follow(self, ctx, speed);
    }
    case BehaviorKind::Brake: {
      const double trigger = spec_.number("trigger");
      const double at = spec_.number("at");
      Action a = follow(self, ctx, spec_.number("speed"));
      // A start time inside the coming step is honoured by braking for part of it.
      double share = 1.0;
      if (!started_ && ctx.elapsed + ctx.dt > at + kTimeEps &&
          (trigger <= 0.0 || distance(self.position(), ctx.world.ego().position()) <= trigger)) {
        started_ = true;
        start_time_ = trigger_time(self, ctx, trigger, at);
        share = (ctx.elapsed + ctx.dt - start_time_) / ctx.dt;
      }
      if (started_) {
        a.accel = -spec_.number("decel") * share + std::max(0.0, 1.0 - share) * a.accel;
        if (a.walk_velocity) a.walk_velocity = Vec2{};
      }
      return a;
    }
    case BehaviorKind::PullIn: {
      const double trigger = spec_.number("trigger");
      if (!started_ && distance(self.position(), ctx.world.ego().position()) <= trigger &&
          self.kind != AgentKind::Pedestrian) {
        const Lane& target = ctx.map.lane(spec_.text("target"));
        started_ = true;
        start_time_ = trigger_time(self, ctx, trigger, 0.0);
        frame_lane_ = target.id;
        lateral_from_ = target.centerline.project(self.position()).lateral;
        lateral_to_ = 0.0;
      }
      const double speed = spec_.number("speed", 3.0);
      if (!started_) return Action::full_brake();
      if (!shift_done_) return shift(self, ctx, speed, spec_.number("duration", 2.5));
      return follow(self, ctx, speed);
    }
    case BehaviorKind::CrossRoad:
      return cross_road(self, ctx);
    case BehaviorKind::Park:
      return Action::full_brake();
    case BehaviorKind::Wait:
      if (ctx.elapsed + kTimeEps < spec_.number("time")) return Action::full_brake();
      return follow(self, ctx, spec_.number("speed"));
  }
  return Action::full_brake();
}

Action behavior_action(const BehaviorSpec& spec, const AgentState& agent, const WorldState& world,
                       const MapModel& map, Rng& rng, double dt) {
  std::vector<std::string> route;
  if (!agent.lane.empty()) route.push_back(agent.lane);
  Behavior b(spec, route);
  return b.act(agent, BehaviorContext{map, world, dt, world.time, rng});
}

}  // namespace scenfuzz::sim
