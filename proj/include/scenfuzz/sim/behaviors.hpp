#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenfuzz/rng.hpp"
#include "scenfuzz/sim/dynamics.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

inline constexpr double kSpeedGain = 1.0;  // 1/s, proportional speed tracking

struct BehaviorContext {
  const MapModel& map;
  const WorldState& world;
  double dt = 0.1;
  double elapsed = 0.0;  // seconds since the agent spawned
  Rng& rng;
};

// Stateful driver of one scripted agent. Deterministic given the sequence of
// worlds and the rng stream.
class Behavior {
 public:
  Behavior(BehaviorSpec spec, std::vector<std::string> route);

  Action act(const AgentState& self, const BehaviorContext& ctx);
  const BehaviorSpec& spec() const { return spec_; }

 private:
  Action decide(const AgentState& self, const BehaviorContext& ctx);
  Action follow(const AgentState& self, const BehaviorContext& ctx, double speed, double lateral = 0.0) const;
  Action cross_road(const AgentState& self, const BehaviorContext& ctx);
  Action shift(const AgentState& self, const BehaviorContext& ctx, double speed, double duration);
  bool triggered(const AgentState& self, const BehaviorContext& ctx, double trigger, double at) const;
  // When the trigger condition first held, interpolated within the last step.
  double trigger_time(const AgentState& self, const BehaviorContext& ctx, double trigger, double at) const;

  BehaviorSpec spec_;
  std::vector<std::string> route_;

  bool started_ = false;
  double start_time_ = 0.0;
  std::string frame_lane_;  // lane whose frame a lateral shift is expressed in
  double lateral_from_ = 0.0;
  double lateral_to_ = 0.0;
  bool shift_done_ = false;
  bool opposing_ = false;  // target lane runs against the origin lane
  std::optional<double> last_gap_;  // distance to the ego at the previous step

  int phase_ = 0;
  bool origin_set_ = false;
  Vec2 origin_;
  double phase_time_ = 0.0;
};

// One action from a fresh behaviour, with the world time as elapsed time.
Action behavior_action(const BehaviorSpec& spec, const AgentState& agent, const WorldState& world,
                       const MapModel& map, Rng& rng, double dt = 0.1);

double smoothstep(double u);

}  // namespace scenfuzz::sim
