#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scenfuzz/sim/dynamics.hpp"
#include "scenfuzz/sim/lanes.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

// Information handed to the system-under-test before the first step.
struct Handshake {
  double dt = 0.1;
  double horizon = 30.0;
  std::vector<std::string> route;
  std::string map_ref;
  AgentState ego;
  BehaviorSpec mission;  // the ego's declared behaviour
};

// The controller driving the ego. One instance serves one rollout at a time.
class Sut {
 public:
  virtual ~Sut() = default;
  virtual void begin(const Handshake& hello) = 0;
  // nullopt when no action arrived before the deadline.
  virtual std::optional<Action> act(const WorldState& world) = 0;
  virtual void end(TerminationReason reason) { (void)reason; }
};

// Never answers.
class NullSut : public Sut {
 public:
  void begin(const Handshake&) override {}
  std::optional<Action> act(const WorldState&) override { return std::nullopt; }
};

struct AutopilotConfig {
  double cruise_speed = 10.0;   // m/s when the mission gives none
  double time_gap = 1.0;        // s
  double standstill_gap = 8.0;  // m, center to center
  double k_gap = 0.3;           // 1/s^2
  double k_speed = 0.6;         // 1/s
  double closing_time = 2.5;    // s, closing speed is kept below (gap - keep_clear) / closing_time
  double keep_clear = 5.5;      // m
  double brake_limit = 5.0;     // m/s^2, below the vehicle's physical limit
  double min_lookahead = 5.0;   // m
  double stop_wait = 1.0;       // s at a stop line
  double stop_decel = 2.0;      // m/s^2, approach profile toward a stop line
  double corridor = 2.5;        // m, lateral half-width scanned for leaders
  bool yield_to_pedestrians = false;
};

// Baseline ego controller: pure pursuit along the route, cruise control, a
// gap law toward the nearest leader and full stops at stop lines on the route.
class Autopilot : public Sut {
 public:
  Autopilot(const MapModel& map, AutopilotConfig cfg = {});

  void begin(const Handshake& hello) override;
  std::optional<Action> act(const WorldState& world) override;

  // Lanes the ego may legitimately occupy: the route plus any lane-change target's route.
  static std::vector<std::string> ego_lanes(const MapModel& map, const Handshake& hello);

 private:
  struct StopState {
    double route_s = 0.0;
    bool cleared = false;
    std::optional<double> stopped_since;
  };

  const MapModel& map_;
  AutopilotConfig cfg_;
  Handshake hello_;
  RoutePath path_;
  double cruise_ = 10.0;
  bool lane_change_done_ = false;
  std::vector<StopState> stops_;
  std::map<std::string, double> last_speed_;  // per agent, from the previous step
  double last_time_ = 0.0;
};

using SutFactory = std::function<std::unique_ptr<Sut>()>;

struct SutOptions {
  AutopilotConfig autopilot;
  std::chrono::milliseconds deadline{1000};
  VehicleLimits limits;
};

// "builtin", "null", "tcp://host:port" or "stdio:<command>". Throws ConfigError
// on an unknown form.
SutFactory make_sut_factory(const std::string& spec, const MapModel& map, const SutOptions& opts = {});

}  // namespace scenfuzz::sim
