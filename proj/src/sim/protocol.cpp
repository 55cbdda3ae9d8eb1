#include "scenfuzz/sim/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "scenfuzz/errors.hpp"
#include "scenfuzz/sim/behaviors.hpp"
#include "scenfuzz/sim/lanes.hpp"

namespace scenfuzz::sim {

using nlohmann::json;

json agent_to_json(const AgentState& a) {
  return json{{"name", a.name},   {"kind", to_string(a.kind)}, {"x", a.pose.x},         {"y", a.pose.y},
              {"heading", a.pose.heading}, {"speed", a.speed}, {"lane", a.lane}, {"s", a.s},
              {"lateral", a.lateral}, {"alive", a.alive}};
}

AgentState agent_from_json(const json& j) {
  AgentState a;
  a.name = j.at("name").get<std::string>();
  auto kind = agent_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw ProtocolError(fmt::format("unknown agent kind in '{}'", a.name));
  a.kind = *kind;
  a.pose = Pose{j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>()};
  a.speed = j.at("speed").get<double>();
  a.lane = j.value("lane", std::string());
  a.s = j.value("s", 0.0);
  a.lateral = j.value("lateral", 0.0);
  a.alive = j.value("alive", true);
  return a;
}

json world_to_json(const WorldState& w) {
  json agents = json::array();
  for (const auto& a : w.agents) agents.push_back(agent_to_json(a));
  return json{{"t", w.time}, {"ego_lane", w.ego_lane}, {"agents", std::move(agents)}};
}

WorldState world_from_json(const json& j) {
  WorldState w;
  w.time = j.at("t").get<double>();
  w.ego_lane = j.value("ego_lane", std::string());
  for (const auto& a : j.at("agents")) w.agents.push_back(agent_from_json(a));
  if (w.agents.empty()) throw ProtocolError("world state without an ego");
  return w;
}

json hello_message(const Handshake& hello) {
  return json{{"type", "hello"}, {"dt", hello.dt},           {"horizon", hello.horizon},
              {"route", hello.route}, {"map_ref", hello.map_ref}, {"ego", agent_to_json(hello.ego)}};
}

json step_message(const WorldState& world, const std::string& map_ref) {
  json agents = json::array();
  for (std::size_t i = 1; i < world.agents.size(); ++i) {
    if (world.agents[i].alive) agents.push_back(agent_to_json(world.agents[i]));
  }
  json ego = agent_to_json(world.ego());
  ego["lane"] = world.ego_lane;
  return json{{"type", "step"}, {"t", world.time}, {"ego", std::move(ego)}, {"agents", std::move(agents)},
              {"map_ref", map_ref}};
}

json end_message(TerminationReason reason) { return json{{"type", "end"}, {"reason", to_string(reason)}}; }

Action action_from_reply(const json& reply, const WorldState& world, const MapModel& map,
                         const std::vector<std::string>& route, const VehicleLimits& limits) {
  if (!reply.is_object()) throw ProtocolError("controller reply is not a JSON object");
  auto number = [&](const char* key) {
    const auto& v = reply.at(key);
    if (!v.is_number()) throw ProtocolError(fmt::format("'{}' must be a number", key));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(fmt::format("'{}' must be finite", key));
    return d;
  };
  const AgentState& ego = world.ego();
  Action a;
  if (reply.contains("throttle")) {
    const double throttle = std::clamp(number("throttle"), -1.0, 1.0);
    const double steer = reply.contains("steer") ? std::clamp(number("steer"), -1.0, 1.0) : 0.0;
    a.accel = throttle >= 0.0 ? throttle * limits.accel_max : -throttle * limits.accel_min;
    a.steer = steer * limits.max_steer;
    return a;
  }
  if (reply.contains("target_speed")) {
    const double target = std::max(0.0, number("target_speed"));
    a.accel = kSpeedGain * (target - ego.speed);
    std::string lane = world.ego_lane;
    if (reply.contains("target_lane")) {
      if (!reply.at("target_lane").is_string()) throw ProtocolError("'target_lane' must be a string");
      lane = reply.at("target_lane").get<std::string>();
    }
    const Lane* l = map.find_lane(lane);
    if (l == nullptr) throw ProtocolError(fmt::format("unknown target lane '{}'", lane));
    const double s = l->centerline.project(ego.position()).s;
    a.pursuit = point_ahead(map, route, lane, s, std::max(5.0, 0.8 * ego.speed));
    return a;
  }
  throw ProtocolError("reply carries neither throttle nor target_speed");
}

}  // namespace scenfuzz::sim
