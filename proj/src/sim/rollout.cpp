#include "scenfuzz/sim/rollout.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/core.h>

#include "scenfuzz/dsl/eval.hpp"
#include "scenfuzz/errors.hpp"
#include "scenfuzz/rng.hpp"
#include "scenfuzz/sim/behaviors.hpp"
#include "scenfuzz/sim/lanes.hpp"
#include "scenfuzz/sim/protocol.hpp"

namespace scenfuzz::sim {

namespace {

class WorldContext : public dsl::EvalContext {
 public:
  WorldContext(const ConcreteScene& scene, const WorldState& world, const MapModel& map)
      : scene_(scene), world_(world), map_(map) {}

  std::optional<Scalar> param(std::string_view name) const override {
    auto it = scene_.bindings.find(std::string(name));
    if (it == scene_.bindings.end()) return std::nullopt;
    return it->second;
  }
  std::optional<dsl::AgentView> agent(std::string_view name) const override {
    const AgentState* a = world_.find(std::string(name));
    if (a == nullptr || !a->alive) return std::nullopt;
    return dsl::AgentView{a->pose, a->speed};
  }
  std::optional<double> lane_length(std::string_view lane) const override {
    const Lane* l = map_.find_lane(std::string(lane));
    if (l == nullptr) return std::nullopt;
    return l->centerline.length();
  }
  double time() const override { return world_.time; }

 private:
  const ConcreteScene& scene_;
  const WorldState& world_;
  const MapModel& map_;
};

enum class GroupPhase { Pending, Active, Done };

struct Runtime {
  std::vector<std::unique_ptr<Behavior>> behaviors;
  std::vector<std::size_t> spawn_step;
  std::vector<Rng> rngs;
  std::vector<GroupPhase> groups;
};

void record_ego_lane(WorldState& w, const MapModel& map, const std::vector<std::string>& ego_lanes) {
  AgentState& ego = w.agents.front();
  Projection proj;
  const std::string lane = nearest_lane(map, ego_lanes, ego.position(), &proj);
  if (lane.empty()) return;
  w.ego_lane = lane;
  ego.lane = lane;
  ego.s = proj.s;
  ego.lateral = proj.lateral;
}

void spawn(const ConcreteScene& scene, std::size_t i, WorldState& w, std::size_t step, Runtime& rt,
           const RolloutConfig& cfg, std::vector<std::string>& warnings) {
  const AgentState& init = scene.agents[i].initial;
  for (std::size_t j = 0; j < w.agents.size(); ++j) {
    if (j == i || !w.agents[j].alive) continue;
    const double d = distance(w.agents[j].position(), init.position());
    if (d < cfg.spawn_clearance) {
      warnings.push_back(fmt::format("t={}: spawn of '{}' skipped, {} m from '{}'", w.time, init.name, d,
                                     w.agents[j].name));
      return;
    }
  }
  w.agents[i] = init;
  w.agents[i].alive = true;
  rt.behaviors[i] = std::make_unique<Behavior>(scene.agents[i].behavior, scene.agents[i].route);
  rt.spawn_step[i] = step;
}

void despawn_group(const ConcreteScene& scene, int g, WorldState& w) {
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    if (scene.agents[i].group == g) w.agents[i].alive = false;
  }
}

void spawn_group(const ConcreteScene& scene, int g, WorldState& w, std::size_t step, Runtime& rt,
                 const RolloutConfig& cfg, std::vector<std::string>& warnings) {
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    if (scene.agents[i].group == g) spawn(scene, i, w, step, rt, cfg, warnings);
  }
}

// Applies spawn and despawn rules of sequential and opportunistic groups to
// the state at `step`.
void update_groups(const ConcreteScene& scene, WorldState& w, std::size_t step, Runtime& rt, const MapModel& map,
                   const RolloutConfig& cfg, std::vector<std::string>& warnings) {
  for (std::size_t gi = 0; gi < scene.groups.size(); ++gi) {
    const SceneGroup& group = scene.groups[gi];
    const int g = static_cast<int>(gi);
    GroupPhase& phase = rt.groups[gi];
    if (group.activation == Activation::Sequential) {
      const double end = group.duration ? group.start + *group.duration : std::numeric_limits<double>::infinity();
      const bool inside = w.time + 1e-9 >= group.start && w.time + 1e-9 < end;
      if (phase == GroupPhase::Pending && inside) {
        spawn_group(scene, g, w, step, rt, cfg, warnings);
        phase = GroupPhase::Active;
      } else if (phase == GroupPhase::Active && !inside) {
        despawn_group(scene, g, w);
        phase = GroupPhase::Done;
      }
    } else if (group.activation == Activation::Opportunistic && group.trigger) {
      const std::string& who = group.trigger->agent;
      const AgentState* agent = who == "ego" ? &w.agents.front() : w.find(who);
      const bool inside = agent != nullptr && agent->alive && map.contains(group.trigger->region, agent->position());
      if (phase == GroupPhase::Pending && inside) {
        spawn_group(scene, g, w, step, rt, cfg, warnings);
        phase = GroupPhase::Active;
      } else if (phase == GroupPhase::Active && !inside) {
        despawn_group(scene, g, w);
        phase = GroupPhase::Done;
      }
    }
  }
}

bool predicate_holds(const ConcreteScene& scene, const WorldState& w, const MapModel& map) {
  if (!scene.terminate_when) return false;
  try {
    return dsl::evaluate_bool(*scene.terminate_when, WorldContext(scene, w, map));
  } catch (const dsl::EvalError&) {
    return false;  // refers to an agent that is not alive
  }
}

}  // namespace

Trace run_rollout(const ConcreteScene& scene, Sut& sut, const MapModel& map, const RolloutConfig& cfg,
                  std::uint64_t seed) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  const double horizon = cfg.horizon.value_or(scene.max_time);
  if (!(horizon >= cfg.dt)) throw ConfigError("horizon must be at least one timestep");
  if (scene.agents.empty() || !scene.agents.front().ego) throw ConfigError("scene has no ego agent");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));

  Trace trace;
  trace.dt = cfg.dt;
  Runtime rt;
  WorldState w;
  w.time = 0.0;
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    w.agents.push_back(scene.agents[i].initial);
    rt.behaviors.push_back(
        w.agents.back().alive ? std::make_unique<Behavior>(scene.agents[i].behavior, scene.agents[i].route) : nullptr);
    rt.spawn_step.push_back(0);
    rt.rngs.emplace_back(mix_seed(seed, i));
  }
  rt.groups.assign(scene.groups.size(), GroupPhase::Pending);

  Handshake hello;
  hello.dt = cfg.dt;
  hello.horizon = horizon;
  hello.route = scene.ego().route;
  hello.map_ref = cfg.map_ref;
  hello.ego = scene.ego().initial;
  hello.mission = scene.ego().behavior;
  const std::vector<std::string> ego_lanes = Autopilot::ego_lanes(map, hello);

  record_ego_lane(w, map, ego_lanes);
  update_groups(scene, w, 0, rt, map, cfg, trace.warnings);
  sut.begin(hello);
  trace.steps.push_back(w);

  for (std::size_t k = 0; k < steps; ++k) {
    const WorldState& cur = trace.steps.back();
    std::vector<Action> actions(cur.agents.size());
    std::optional<Action> ego_action = sut.act(cur);
    const bool disconnected = !ego_action;
    actions[0] = disconnected ? Action::full_brake() : *ego_action;
    for (std::size_t i = 1; i < cur.agents.size(); ++i) {
      if (!cur.agents[i].alive || !rt.behaviors[i]) continue;
      const double elapsed = static_cast<double>(k - rt.spawn_step[i]) * cfg.dt;
      actions[i] = rt.behaviors[i]->act(cur.agents[i], BehaviorContext{map, cur, cfg.dt, elapsed, rt.rngs[i]});
    }
    WorldState next = step_world(cur, actions, cfg.dt, cfg.limits);
    next.time = static_cast<double>(k + 1) * cfg.dt;
    for (std::size_t i = 1; i < next.agents.size(); ++i) {
      if (next.agents[i].alive) track_lane(next.agents[i], map);
    }
    record_ego_lane(next, map, ego_lanes);
    update_groups(scene, next, k + 1, rt, map, cfg, trace.warnings);
    trace.steps.push_back(std::move(next));
    if (disconnected) {
      trace.termination = TerminationReason::SutDisconnect;
      break;
    }
    if (predicate_holds(scene, trace.steps.back(), map)) {
      trace.termination = TerminationReason::Predicate;
      break;
    }
  }
  sut.end(trace.termination);
  return trace;
}

std::string trace_to_jsonl(const Trace& trace) {
  std::string out = nlohmann::json{{"dt", trace.dt},
                                   {"termination", to_string(trace.termination)},
                                   {"steps", trace.steps.size()},
                                   {"warnings", trace.warnings}}
                        .dump();
  out += '\n';
  for (const auto& w : trace.steps) {
    out += world_to_json(w).dump();
    out += '\n';
  }
  return out;
}

Trace trace_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ProtocolError("empty trace file");
  Trace trace;
  try {
    const auto header = nlohmann::json::parse(line);
    trace.dt = header.at("dt").get<double>();
    auto reason = termination_from_string(header.at("termination").get<std::string>());
    if (!reason) throw ProtocolError("unknown termination reason in trace");
    trace.termination = *reason;
    trace.warnings = header.value("warnings", std::vector<std::string>{});
    const auto expected = header.at("steps").get<std::size_t>();
    while (std::getline(in, line)) {
      if (!line.empty()) trace.steps.push_back(world_from_json(nlohmann::json::parse(line)));
    }
    if (trace.steps.size() != expected) {
      throw ProtocolError(fmt::format("trace declares {} steps but holds {}", expected, trace.steps.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(fmt::format("malformed trace: {}", e.what()));
  }
  return trace;
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << trace_to_jsonl(trace);
  if (!out) throw StorageFull(fmt::format("cannot write trace {}", path.string()));
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProtocolError(fmt::format("cannot open trace {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_jsonl(ss.str());
}

}  // namespace scenfuzz::sim
