#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenfuzz/sim/dynamics.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/sut.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

nlohmann::json agent_to_json(const AgentState& a);
AgentState agent_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const WorldState& w);
WorldState world_from_json(const nlohmann::json& j);

// Newline-delimited JSON messages exchanged with an external controller.
nlohmann::json hello_message(const Handshake& hello);
nlohmann::json step_message(const WorldState& world, const std::string& map_ref);
nlohmann::json end_message(TerminationReason reason);

// Converts a controller reply, either {"throttle", "steer"} in [-1, 1] or
// {"target_speed", "target_lane"}, into an ego action. Throws ProtocolError.
Action action_from_reply(const nlohmann::json& reply, const WorldState& world, const MapModel& map,
                         const std::vector<std::string>& route, const VehicleLimits& limits = {});

}  // namespace scenfuzz::sim
