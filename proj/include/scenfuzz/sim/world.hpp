#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenfuzz/common.hpp"
#include "scenfuzz/dsl/ast.hpp"
#include "scenfuzz/geometry.hpp"
#include "scenfuzz/sim/map.hpp"

namespace scenfuzz::sim {

struct BehaviorSpec {
  BehaviorKind kind = BehaviorKind::Park;
  std::map<std::string, Scalar> args;

  double number(const std::string& name, double fallback = 0.0) const;
  std::string text(const std::string& name) const;
  friend bool operator==(const BehaviorSpec&, const BehaviorSpec&) = default;
};

struct AgentState {
  std::string name;
  AgentKind kind = AgentKind::Car;
  Pose pose;
  double speed = 0.0;
  std::string lane;  // empty when the agent is not tracking a lane
  double s = 0.0;
  double lateral = 0.0;
  bool alive = true;

  Vec2 position() const { return pose.position(); }
  Vec2 velocity() const { return speed * unit_heading(pose.heading); }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// Snapshot of every agent at one timestep. The ego is always agents[0];
// agents that are not yet spawned (or already despawned) have alive = false.
struct WorldState {
  double time = 0.0;
  std::vector<AgentState> agents;
  std::string ego_lane;

  const AgentState& ego() const { return agents.front(); }
  const AgentState* find(const std::string& name) const;
  friend bool operator==(const WorldState&, const WorldState&) = default;
};

enum class TerminationReason { TimeLimit, Predicate, SutDisconnect };

std::string_view to_string(TerminationReason r);
std::optional<TerminationReason> termination_from_string(std::string_view s);

struct Trace {
  double dt = 0.1;
  std::vector<WorldState> steps;
  TerminationReason termination = TerminationReason::TimeLimit;
  std::vector<std::string> warnings;
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct SceneAgent {
  AgentState initial;
  BehaviorSpec behavior;
  std::vector<std::string> route;
  bool ego = false;
  int group = -1;  // -1 for top-level agents, else index into ConcreteScene::groups
  friend bool operator==(const SceneAgent&, const SceneAgent&) = default;
};

enum class Activation { Always, Never, Sequential, Opportunistic };

struct SceneTrigger {
  std::string agent;
  Region region;
  friend bool operator==(const SceneTrigger&, const SceneTrigger&) = default;
};

struct SceneGroup {
  std::string name;
  Activation activation = Activation::Never;
  double start = 0.0;                     // sequential start time
  std::optional<double> duration;         // sequential active window
  std::optional<SceneTrigger> trigger;    // opportunistic spawn region
  friend bool operator==(const SceneGroup&, const SceneGroup&) = default;
};

// Fully instantiated scenario: concrete initial poses and behaviour arguments.
struct ConcreteScene {
  std::string name;
  std::string weather;  // inert metadata
  std::vector<SceneAgent> agents;
  std::vector<SceneGroup> groups;
  double max_time = dsl::kDefaultMaxTime;
  std::optional<dsl::Expr> terminate_when;
  std::map<std::string, Scalar> bindings;  // top-level parameter values

  const SceneAgent& ego() const { return agents.front(); }
  friend bool operator==(const ConcreteScene&, const ConcreteScene&) = default;
};

}  // namespace scenfuzz::sim
