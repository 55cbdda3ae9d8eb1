#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace scenfuzz {

enum class AgentKind { Car, Bus, Pedestrian };

std::string_view to_string(AgentKind kind);
std::optional<AgentKind> agent_kind_from_string(std::string_view s);

inline bool is_vehicle(AgentKind kind) { return kind != AgentKind::Pedestrian; }

// Built-in behaviours available to scripted agents. The ego's behaviour is
// handed to the system-under-test as its mission.
enum class BehaviorKind { FollowLane, FollowVehicle, LaneChange, Brake, PullIn, CrossRoad, Park, Wait };

std::string_view to_string(BehaviorKind kind);
std::optional<BehaviorKind> behavior_kind_from_string(std::string_view s);

// Scalar value of a scenario parameter or behaviour argument.
using Scalar = std::variant<double, std::string>;

std::string scalar_label(const Scalar& v);

}  // namespace scenfuzz
