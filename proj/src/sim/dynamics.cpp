#include "scenfuzz/sim/dynamics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace scenfuzz::sim {

double VehicleLimits::max_curvature() const { return std::tan(max_steer) / wheelbase; }

AgentState step_agent(const AgentState& agent, const Action& action, double dt, const VehicleLimits& limits) {
  AgentState next = agent;
  if (!agent.alive) return next;

  if (agent.kind == AgentKind::Pedestrian) {
    Vec2 w = action.walk_velocity.value_or(Vec2{});
    const double speed = norm(w);
    if (speed > limits.pedestrian_max_speed) w = (limits.pedestrian_max_speed / speed) * w;
    next.pose.x += w.x * dt;
    next.pose.y += w.y * dt;
    next.speed = norm(w);
    if (next.speed > 0.0) next.pose.heading = std::atan2(w.y, w.x);
    assert(std::isfinite(next.pose.x) && std::isfinite(next.pose.y));
    return next;
  }

  const double accel = std::clamp(std::isfinite(action.accel) ? action.accel : 0.0, limits.accel_min, limits.accel_max);
  const double v0 = agent.speed;
  const double v1 = std::clamp(v0 + accel * dt, 0.0, limits.v_max);
  const double v_mean = 0.5 * (v0 + v1);

  double curvature = 0.0;
  const double kappa_max = limits.max_curvature();
  if (action.steer) {
    const double steer = std::clamp(*action.steer, -limits.max_steer, limits.max_steer);
    curvature = std::tan(steer) / limits.wheelbase;
  } else if (action.pursuit) {
    const Vec2 to = *action.pursuit - agent.position();
    const double ld = norm(to);
    if (ld > 1e-9) {
      const double alpha = wrap_angle(std::atan2(to.y, to.x) - agent.pose.heading);
      curvature = 2.0 * std::sin(alpha) / ld;
    }
  }
  curvature = std::clamp(curvature, -kappa_max, kappa_max);

  const double dtheta = v_mean * curvature * dt;
  const double mid = agent.pose.heading + 0.5 * dtheta;
  next.pose.x += v_mean * dt * std::cos(mid);
  next.pose.y += v_mean * dt * std::sin(mid);
  next.pose.heading = wrap_angle(agent.pose.heading + dtheta);
  next.speed = v1;
  assert(std::isfinite(next.pose.x) && std::isfinite(next.pose.y) && std::isfinite(next.speed));
  return next;
}

WorldState step_world(const WorldState& world, const std::vector<Action>& actions, double dt,
                      const VehicleLimits& limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (actions.size() != world.agents.size()) throw std::invalid_argument("one action per agent is required");
  WorldState next = world;
  next.time = world.time + dt;
  for (std::size_t i = 0; i < world.agents.size(); ++i) next.agents[i] = step_agent(world.agents[i], actions[i], dt, limits);
  return next;
}

}  // namespace scenfuzz::sim
