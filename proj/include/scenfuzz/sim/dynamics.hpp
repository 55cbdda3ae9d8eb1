#pragma once

#include <optional>
#include <vector>

#include "scenfuzz/geometry.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

struct VehicleLimits {
  double v_max = 30.0;        // m/s
  double accel_min = -8.0;    // m/s^2
  double accel_max = 4.0;     // m/s^2
  double max_steer = 0.6;     // rad
  double wheelbase = 2.8;     // m
  double pedestrian_max_speed = 3.0;  // m/s
  friend bool operator==(const VehicleLimits&, const VehicleLimits&) = default;

  double max_curvature() const;
};

// Control input for one agent over one step. Vehicles steer either toward a
// pursuit point (pure pursuit) or with an explicit steering angle; with
// neither they keep their heading. Pedestrians use walk_velocity.
struct Action {
  double accel = 0.0;
  std::optional<Vec2> pursuit;
  std::optional<double> steer;
  std::optional<Vec2> walk_velocity;
  friend bool operator==(const Action&, const Action&) = default;

  static Action hold() { return {}; }
  static Action full_brake() { return {-1e9, std::nullopt, std::nullopt, Vec2{}}; }
};

// Kinematic update of one agent. Accelerations are clamped to the limits and
// speed to [0, v_max]; position integrates with the step's mean speed.
AgentState step_agent(const AgentState& agent, const Action& action, double dt, const VehicleLimits& limits = {});

// Applies actions[i] to agents[i]; dead agents are copied unchanged.
WorldState step_world(const WorldState& world, const std::vector<Action>& actions, double dt,
                      const VehicleLimits& limits = {});

}  // namespace scenfuzz::sim
