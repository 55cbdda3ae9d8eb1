#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "scenfuzz/sim/dynamics.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/sut.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

struct RolloutConfig {
  double dt = 0.1;
  std::optional<double> horizon;  // defaults to the scene's max time
  VehicleLimits limits;
  double spawn_clearance = 1.0;   // m, spawns closer than this to a live agent are skipped
  std::string map_ref;
};

// Runs one scene against the SUT until the horizon, the scene's termination
// predicate, or a missed SUT deadline. State i of the trace is at time i * dt.
Trace run_rollout(const ConcreteScene& scene, Sut& sut, const MapModel& map, const RolloutConfig& cfg,
                  std::uint64_t seed);

// Trace files: a header line {"dt", "termination", "steps", "warnings"}, then
// one world state per line.
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(const std::string& text);
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(const std::filesystem::path& path);

}  // namespace scenfuzz::sim
