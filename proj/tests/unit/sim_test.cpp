#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "scenfuzz/dsl/feature_space.hpp"
#include "scenfuzz/dsl/instantiate.hpp"
#include "scenfuzz/dsl/parser.hpp"
#include "scenfuzz/engine/engine.hpp"
#include "scenfuzz/errors.hpp"
#include "scenfuzz/rng.hpp"
#include "scenfuzz/sim/behaviors.hpp"
#include "scenfuzz/sim/rollout.hpp"
#include "scenfuzz/sim/sut.hpp"
#include "support/check.hpp"

using namespace scenfuzz;
using namespace scenfuzz::sim;

namespace {

const MapModel& oneway() {
  static const MapModel map = load_map(testing::map_path("oneway.map"));
  return map;
}

ConcreteScene scene_of(const std::string& src, const MapModel& map = oneway(), std::vector<double> unit = {}) {
  dsl::ParseResult r = dsl::parse(src);
  std::string diags;
  for (const auto& d : r.diagnostics) diags += d.format() + "\n";
  INFO(diags);
  REQUIRE(r.ok());
  const FeatureSpace fs = dsl::extract_feature_space(*r.program);
  if (unit.empty()) unit.assign(fs.continuous.size(), 0.5);
  return dsl::instantiate(*r.program, point_from_unit(fs, unit, std::vector<std::size_t>(fs.discrete.size(), 0)),
                          map);
}

Trace drive(const ConcreteScene& scene, const MapModel& map = oneway(), double dt = 0.1,
            std::optional<double> horizon = std::nullopt, std::uint64_t seed = 1) {
  Autopilot ap(map);
  RolloutConfig cfg;
  cfg.dt = dt;
  cfg.horizon = horizon;
  return run_rollout(scene, ap, map, cfg, seed);
}

AgentState at(double x, double y, double heading, double speed) {
  AgentState a;
  a.name = "a";
  a.pose = {x, y, heading};
  a.speed = speed;
  return a;
}

const char* kBundles[] = {"01_lane_change_merge.scn",    "02_vehicle_following.scn",   "03_parallel_parking.scn",
                          "04_school_bus.scn",           "05_encroaching_oncoming.scn", "06_pedestrian_crossing.scn",
                          "07_oncoming_left_turn.scn",   "08_left_turn_cross_traffic.scn",
                          "09_right_turn_cross_traffic.scn", "10_left_turn_pedestrian.scn", "badly_parked_car.scn",
                          "composed_intersection.scn"};

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("straight-line integration") {
    WorldState w;
    w.agents = {at(0, 0, 0, 10)};
    WorldState next = step_world(w, {Action::hold()}, 0.1);
    CHECK(next.agents[0].pose.x == doctest::Approx(1.0));
    CHECK(next.agents[0].pose.y == doctest::Approx(0.0));
    CHECK(next.agents[0].pose.heading == doctest::Approx(0.0));
  }

  TEST_CASE("braking at rest stays at rest") {
    AgentState a = step_agent(at(0, 0, 0, 0), Action{-5.0}, 0.1);
    CHECK(a.speed == 0.0);
  }

  TEST_CASE("acceleration is clamped to the vehicle limit") {
    AgentState a = step_agent(at(0, 0, 0, 10), Action{10.0}, 0.1);
    CHECK(a.speed == doctest::Approx(10.4));
  }

  TEST_CASE("follow vehicle at equilibrium does not accelerate") {
    const MapModel& map = oneway();
    WorldState w;
    AgentState self = at(20, -1.75, 0, 10);
    self.name = "self";
    self.lane = "L0";
    self.s = 20;
    AgentState lead = at(35, -1.75, 0, 10);
    lead.name = "lead";
    lead.lane = "L0";
    lead.s = 35;
    w.agents = {lead, self};
    BehaviorSpec spec{BehaviorKind::FollowVehicle, {{"lead", std::string("lead")}, {"speed", 10.0}, {"time_gap", 1.5}}};
    Rng rng(1);
    CHECK(behavior_action(spec, self, w, map, rng).accel == doctest::Approx(0.0));
  }

  TEST_CASE("pull-in waits until the trigger distance") {
    WorldState w;
    AgentState ego = at(0, -1.75, 0, 10);
    ego.name = "ego";
    ego.lane = "L0";
    AgentState self = at(100, -5.5, 0, 0);
    self.name = "self";
    w.agents = {ego, self};
    BehaviorSpec spec{BehaviorKind::PullIn, {{"target", std::string("L0")}, {"trigger", 20.0}, {"speed", 3.0}}};
    Rng rng(1);
    Action a = behavior_action(spec, self, w, oneway(), rng);
    CHECK(a.accel <= 0.0);
    AgentState after = step_agent(self, a, 0.1);
    CHECK(after.position().x == self.position().x);
    CHECK(after.position().y == self.position().y);
  }

  TEST_CASE("cross road holds still for the wait time") {
    ConcreteScene scene = scene_of(
        "ego = car on lane \"L0\" at 10, speed 0, behavior Wait(time=30)\n"
        "agent walker = pedestrian at (150, -6) heading pi / 2, behavior CrossRoad(to_x=150, to_y=6, wait_before=2)\n"
        "terminate after 4");
    Trace tr = drive(scene);
    const Vec2 start = tr.steps[0].agents[1].position();
    for (int k = 1; k <= 20; ++k) {
      CHECK(tr.steps[k].agents[1].position().x == start.x);
      CHECK(tr.steps[k].agents[1].position().y == start.y);
    }
    CHECK(tr.steps[25].agents[1].position().y > start.y);
  }

  TEST_CASE("null SUT ends the rollout on disconnect") {
    ConcreteScene scene = scene_of("ego = car on lane \"L0\" at 10, behavior FollowLane(speed=10)\nterminate after 5");
    NullSut null;
    RolloutConfig cfg;
    Trace tr = run_rollout(scene, null, oneway(), cfg, 0);
    CHECK(tr.termination == TerminationReason::SutDisconnect);
    CHECK(tr.steps.size() == 2);
  }

  TEST_CASE("a SUT that holds still runs to the time limit") {
    struct Still : Sut {
      void begin(const Handshake&) override {}
      std::optional<Action> act(const WorldState&) override { return Action::hold(); }
    } still;
    ConcreteScene scene = scene_of("ego = car on lane \"L0\" at 10, speed 0, behavior Wait(time=5)\nterminate after 5");
    Trace tr = run_rollout(scene, still, oneway(), {}, 0);
    CHECK(tr.steps.size() == 51);
    CHECK(tr.termination == TerminationReason::TimeLimit);
    for (std::size_t i = 0; i < tr.steps.size(); ++i) CHECK(tr.steps[i].time == static_cast<double>(i) * 0.1);
  }

  TEST_CASE("termination predicate stops the rollout") {
    ConcreteScene scene = scene_of(
        "ego = car on lane \"L0\" at 10, speed 5, behavior FollowLane(speed=10)\n"
        "terminate after 20\nterminate when speed(ego) > 8");
    Trace tr = drive(scene);
    CHECK(tr.termination == TerminationReason::Predicate);
    CHECK(tr.steps.back().ego().speed > 8);
    CHECK(tr.steps.size() < 201);
  }

  TEST_CASE("opportunistic agents never appear when the ego misses the region") {
    const MapModel map = load_map(testing::map_path("fourway.map"));
    ConcreteScene scene = scene_of(
        "ego = car on lane \"S_in\" at 10, speed 0, behavior Wait(time=30)\n"
        "terminate after 10\n"
        "scenario sub:\n  agent other = car on lane \"E_in\" at 40, behavior FollowLane(speed=5)\nend\n"
        "compose opportunistic:\n  sub when ego enters intersection \"I0\"\nend",
        map);
    Trace tr = drive(scene, map);
    for (const auto& step : tr.steps) CHECK_FALSE(step.agents.at(1).alive);
  }

  TEST_CASE("spawning on top of a live agent is skipped with a warning") {
    ConcreteScene scene = scene_of(
        "ego = car on lane \"L0\" at 10, speed 0, behavior Wait(time=5)\n"
        "terminate after 2\n"
        "scenario sub:\n  agent other = car on lane \"L0\" at 10.5, behavior FollowLane(speed=5)\nend\n"
        "compose sequential:\n  sub\nend");
    Trace tr = drive(scene);
    REQUIRE(tr.warnings.size() == 1);
    CHECK(tr.warnings[0].find("other") != std::string::npos);
    CHECK_FALSE(tr.steps.back().agents.at(1).alive);
  }

  TEST_CASE("autopilot settles at the cruise speed on an empty road") {
    ConcreteScene scene = scene_of("ego = car on lane \"L0\" at 10, speed 0, behavior FollowLane(speed=10)\nterminate after 15");
    Trace tr = drive(scene);
    for (std::size_t k = 100; k < tr.steps.size(); ++k) CHECK(std::abs(tr.steps[k].ego().speed - 10.0) < 0.1);
  }

  TEST_CASE("autopilot stops behind a stopped leader") {
    ConcreteScene scene = scene_of(
        "ego = car on lane \"L0\" at 10, speed 10, behavior FollowLane(speed=10)\n"
        "agent lead = car on lane \"L0\" at 40, speed 0, behavior Wait(time=60)\n"
        "terminate after 20");
    Trace tr = drive(scene);
    const auto& last = tr.steps.back();
    CHECK(last.ego().speed < 0.05);
    CHECK(distance(last.agents[0].position(), last.agents[1].position()) >= 5.0);
  }

  TEST_CASE("autopilot does not brake for a pedestrian on the crosswalk") {
    const std::string ego = "ego = car on lane \"L0\" at 120, speed 10, behavior FollowLane(speed=10)\nterminate after 4\n";
    Trace alone = drive(scene_of(ego));
    Trace walker = drive(scene_of(ego + "agent walker = pedestrian at (150, -1.75) heading pi / 2, behavior Wait(time=30)"));
    for (std::size_t k = 0; k < alone.steps.size(); ++k) CHECK(walker.steps[k].ego().speed == alone.steps[k].ego().speed);
  }

  TEST_CASE("rollouts are deterministic and trace files round-trip") {
    for (const char* file : kBundles) {
      CAPTURE(std::string(file));
      engine::LoadedScenario ls = engine::load_scenario(testing::scenario_path(file));
      ConcreteScene scene = dsl::instantiate(ls.program, dsl::midpoint(ls.space), ls.map);
      Trace a = drive(scene, ls.map, 0.1, std::nullopt, 9);
      Trace b = drive(scene, ls.map, 0.1, std::nullopt, 9);
      CHECK(a == b);
      CHECK(trace_from_jsonl(trace_to_jsonl(a)) == a);
    }
  }

  TEST_CASE("no agent moves farther in a step than the limits allow") {
    const VehicleLimits lim;
    for (const char* file : kBundles) {
      CAPTURE(std::string(file));
      engine::LoadedScenario ls = engine::load_scenario(testing::scenario_path(file));
      for (double u : {0.1, 0.5, 0.9}) {
        SamplePoint pt = point_from_unit(ls.space, std::vector<double>(ls.space.continuous.size(), u),
                                         std::vector<std::size_t>(ls.space.discrete.size(), 0));
        ConcreteScene scene;
        try {
          scene = dsl::instantiate(ls.program, pt, ls.map);
        } catch (const InfeasibleSample&) {
          continue;
        }
        Trace tr = drive(scene, ls.map);
        bool ok = true;
        for (std::size_t k = 1; k < tr.steps.size(); ++k) {
          for (std::size_t i = 0; i < tr.steps[k].agents.size(); ++i) {
            const AgentState& prev = tr.steps[k - 1].agents[i];
            const AgentState& cur = tr.steps[k].agents[i];
            if (!prev.alive || !cur.alive) continue;
            const double vmax = cur.kind == AgentKind::Pedestrian ? lim.pedestrian_max_speed : lim.v_max;
            const double bound = vmax * tr.dt + 0.5 * lim.accel_max * tr.dt * tr.dt + 1e-9;
            ok &= distance(prev.position(), cur.position()) <= bound;
          }
        }
        CHECK(ok);
      }
    }
  }

  TEST_CASE("halving the step barely moves the final ego position") {
    for (const char* file : kBundles) {
      CAPTURE(std::string(file));
      engine::LoadedScenario ls = engine::load_scenario(testing::scenario_path(file));
      ConcreteScene scene = dsl::instantiate(ls.program, dsl::midpoint(ls.space), ls.map);
      Trace coarse = drive(scene, ls.map, 0.1);
      Trace fine = drive(scene, ls.map, 0.05);
      const double moved = distance(coarse.steps.back().ego().position(), fine.steps.back().ego().position());
      CAPTURE(moved);
      CHECK(moved < 0.5);
    }
  }
}
