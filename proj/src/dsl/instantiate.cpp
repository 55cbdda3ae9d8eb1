#include "scenfuzz/dsl/instantiate.hpp"

#include <cmath>
#include <set>

#include <fmt/core.h>

#include "scenfuzz/dsl/catalog.hpp"
#include "scenfuzz/dsl/eval.hpp"
#include "scenfuzz/dsl/feature_space.hpp"
#include "scenfuzz/errors.hpp"

namespace scenfuzz::dsl {

namespace {

using Bindings = std::map<std::string, Scalar, std::less<>>;

class SceneContext : public EvalContext {
 public:
  SceneContext(const Bindings& bindings, const std::map<std::string, AgentView, std::less<>>& agents,
               const sim::MapModel& map, std::string scope)
      : bindings_(bindings), agents_(agents), map_(map), scope_(std::move(scope)) {}

  std::optional<Scalar> param(std::string_view name) const override {
    if (!scope_.empty()) {
      if (auto it = bindings_.find(qualified_name(scope_, std::string(name))); it != bindings_.end()) return it->second;
    }
    if (auto it = bindings_.find(name); it != bindings_.end()) return it->second;
    return std::nullopt;
  }

  std::optional<AgentView> agent(std::string_view name) const override {
    const std::string resolved = resolve_agent(name);
    if (auto it = agents_.find(resolved); it != agents_.end()) return it->second;
    return std::nullopt;
  }

  std::optional<double> lane_length(std::string_view lane) const override {
    const sim::Lane* l = map_.find_lane(std::string(lane));
    if (l == nullptr) return std::nullopt;
    return l->centerline.length();
  }

  std::string resolve_agent(std::string_view name) const {
    if (!scope_.empty()) {
      std::string q = qualified_name(scope_, std::string(name));
      if (agents_.count(q) || declared_.count(q)) return q;
    }
    return std::string(name);
  }

  void declare(const std::string& qualified) { declared_.insert(qualified); }

 private:
  const Bindings& bindings_;
  const std::map<std::string, AgentView, std::less<>>& agents_;
  const sim::MapModel& map_;
  std::string scope_;
  std::set<std::string, std::less<>> declared_;
};

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw InfeasibleSample(fmt::format("{} evaluates to a non-finite value", what));
}

sim::AgentState place(const AgentDecl& decl, const std::string& name, const SceneContext& ctx, const sim::MapModel& map) {
  sim::AgentState st;
  st.name = name;
  st.kind = decl.kind;
  if (const auto* lp = std::get_if<LanePlacement>(&decl.placement)) {
    const std::string lane_id = evaluate_string(lp->lane, ctx);
    const sim::Lane* lane = map.find_lane(lane_id);
    if (lane == nullptr) throw InfeasibleSample(fmt::format("agent '{}' placed on unknown lane '{}'", name, lane_id));
    const double s = evaluate_number(lp->offset, ctx);
    require_finite(s, fmt::format("offset of agent '{}'", name));
    if (s < 0.0 || s > lane->centerline.length()) {
      throw InfeasibleSample(fmt::format("agent '{}' offset {} m is outside lane '{}' (length {} m)", name, s, lane_id,
                                         lane->centerline.length()));
    }
    double lateral = 0.0;
    if (lp->lateral) {
      lateral = evaluate_number(*lp->lateral, ctx);
      require_finite(lateral, fmt::format("lateral offset of agent '{}'", name));
      if (lp->side == Side::Right) lateral = -lateral;
    }
    if (std::abs(lateral) > lane->width / 2.0 + lane->shoulder) {
      throw InfeasibleSample(fmt::format("agent '{}' lateral offset {} m leaves the road", name, lateral));
    }
    const double heading = lane->centerline.heading_at(s);
    const Vec2 normal{-std::sin(heading), std::cos(heading)};
    const Vec2 p = lane->centerline.point_at(s) + lateral * normal;
    st.pose = Pose{p.x, p.y, heading};
    st.lane = lane_id;
    st.s = s;
    st.lateral = lateral;
  } else {
    const auto& pp = std::get<PosePlacement>(decl.placement);
    st.pose.x = evaluate_number(pp.x, ctx);
    st.pose.y = evaluate_number(pp.y, ctx);
    st.pose.heading = wrap_angle(evaluate_number(pp.heading, ctx));
    require_finite(st.pose.x + st.pose.y + st.pose.heading, fmt::format("pose of agent '{}'", name));
    // Vehicles must sit on some lane (or its shoulder); pedestrians may be anywhere.
    const sim::Lane* best = nullptr;
    Projection best_proj;
    for (const auto& lane : map.lanes) {
      const Projection proj = lane.centerline.project(st.position());
      if (best == nullptr || proj.distance < best_proj.distance) {
        best = &lane;
        best_proj = proj;
      }
    }
    if (is_vehicle(decl.kind)) {
      if (best == nullptr || best_proj.distance > best->width / 2.0 + best->shoulder) {
        throw InfeasibleSample(fmt::format("agent '{}' at ({}, {}) is off the map", name, st.pose.x, st.pose.y));
      }
      st.lane = best->id;
      st.s = best_proj.s;
      st.lateral = best_proj.lateral;
    }
  }
  st.speed = 0.0;
  if (decl.speed) {
    st.speed = evaluate_number(*decl.speed, ctx);
    require_finite(st.speed, fmt::format("speed of agent '{}'", name));
    if (st.speed < 0.0) throw InfeasibleSample(fmt::format("agent '{}' has negative initial speed", name));
  }
  return st;
}

sim::BehaviorSpec resolve_behavior(const AgentDecl& decl, const std::string& name, const SceneContext& ctx) {
  sim::BehaviorSpec spec;
  if (!decl.behavior) {
    spec.kind = decl.ego ? BehaviorKind::FollowLane : BehaviorKind::Park;
    if (decl.ego) spec.args["speed"] = 10.0;
    return spec;
  }
  spec.kind = *behavior_kind_from_string(decl.behavior->name);
  for (const auto& sig : behavior_signature(spec.kind)) {
    const BehaviorArg* given = nullptr;
    for (const auto& a : decl.behavior->args) {
      if (a.name == sig.name) given = &a;
    }
    const std::string arg_name(sig.name);
    if (given == nullptr) {
      if (sig.default_number) spec.args[arg_name] = *sig.default_number;
      continue;
    }
    switch (sig.type) {
      case ValueType::Number: {
        const double v = evaluate_number(given->value, ctx);
        require_finite(v, fmt::format("argument '{}' of agent '{}'", arg_name, name));
        if (sig.non_negative && v < 0.0) {
          throw InfeasibleSample(fmt::format("argument '{}' of agent '{}' is negative ({})", arg_name, name, v));
        }
        spec.args[arg_name] = v;
        break;
      }
      case ValueType::String:
        spec.args[arg_name] = evaluate_string(given->value, ctx);
        break;
      case ValueType::Agent:
        spec.args[arg_name] = ctx.resolve_agent(given->value.text);
        break;
      case ValueType::Bool:
        break;
    }
  }
  return spec;
}

std::vector<std::string> resolve_route(const AgentDecl& decl, const sim::AgentState& st, const SceneContext& ctx,
                                       const sim::MapModel& map, const std::string& name) {
  if (decl.route.empty()) {
    if (st.lane.empty()) return {};
    return default_route(map, st.lane);
  }
  std::vector<std::string> route;
  for (const auto& e : decl.route) {
    std::string id = evaluate_string(e, ctx);
    const sim::Lane* lane = map.find_lane(id);
    if (lane == nullptr) throw InfeasibleSample(fmt::format("route of agent '{}' names unknown lane '{}'", name, id));
    if (!route.empty()) {
      const sim::Lane& prev = map.lane(route.back());
      bool connected = false;
      for (const auto& s : prev.successors) connected = connected || s == id;
      if (!connected) {
        throw InfeasibleSample(fmt::format("route of agent '{}' jumps from '{}' to '{}'", name, route.back(), id));
      }
    }
    route.push_back(std::move(id));
  }
  if (!st.lane.empty() && std::find(route.begin(), route.end(), st.lane) == route.end()) {
    throw InfeasibleSample(fmt::format("agent '{}' starts on lane '{}' which is not on its route", name, st.lane));
  }
  return route;
}

sim::Region resolve_region(const RegionRef& r, const SceneContext& ctx, const sim::MapModel& map) {
  switch (r.kind) {
    case RegionRef::Kind::Intersection:
      if (map.find_intersection(r.id) == nullptr) {
        throw InfeasibleSample(fmt::format("unknown intersection '{}'", r.id));
      }
      return map.intersection_region(r.id);
    case RegionRef::Kind::Named: {
      auto it = map.regions.find(r.id);
      if (it == map.regions.end()) throw InfeasibleSample(fmt::format("unknown region '{}'", r.id));
      return it->second;
    }
    case RegionRef::Kind::LaneSegment:
      if (map.find_lane(r.id) == nullptr) throw InfeasibleSample(fmt::format("unknown lane '{}'", r.id));
      return sim::LaneSegmentRegion{r.id, evaluate_number(r.args[0], ctx), evaluate_number(r.args[1], ctx)};
    case RegionRef::Kind::Circle: {
      const double radius = evaluate_number(r.args[2], ctx);
      if (!(radius > 0.0)) throw InfeasibleSample("trigger circle radius must be positive");
      return sim::CircleRegion{{evaluate_number(r.args[0], ctx), evaluate_number(r.args[1], ctx)}, radius};
    }
  }
  throw InfeasibleSample("malformed region");
}

void check_constant_lane(const Expr& e, const sim::MapModel& map, std::vector<Diagnostic>& out, const char* what) {
  if (e.kind == Expr::Kind::String && map.find_lane(e.text) == nullptr) {
    out.push_back({Diagnostic::Kind::Value, e.loc, fmt::format("{} '{}' does not exist on map '{}'", what, e.text, map.name)});
  }
}

void check_body_against_map(const ScenarioProgram& prog, const sim::MapModel& map, std::vector<Diagnostic>& out) {
  for (const auto& a : prog.agents) {
    if (const auto* lp = std::get_if<LanePlacement>(&a.placement)) check_constant_lane(lp->lane, map, out, "lane");
    for (const auto& r : a.route) check_constant_lane(r, map, out, "route lane");
    if (a.behavior) {
      for (const auto& arg : a.behavior->args) {
        if (arg.name == "target") check_constant_lane(arg.value, map, out, "target lane");
      }
    }
  }
}

}  // namespace

std::vector<std::string> default_route(const sim::MapModel& map, const std::string& start) {
  std::vector<std::string> route{start};
  std::set<std::string> seen{start};
  const sim::Lane* lane = map.find_lane(start);
  while (lane != nullptr && !lane->successors.empty()) {
    const std::string& next = lane->successors.front();
    if (!seen.insert(next).second) break;
    route.push_back(next);
    lane = map.find_lane(next);
  }
  return route;
}

std::vector<Diagnostic> check_against_map(const ScenarioProgram& prog, const sim::MapModel& map) {
  std::vector<Diagnostic> out;
  if (prog.ego() == nullptr) out.push_back({Diagnostic::Kind::Name, SourceLoc{1, 1}, "program declares no ego agent"});
  check_body_against_map(prog, map, out);
  for (const auto& sub : prog.subscenarios) check_body_against_map(sub, map, out);
  if (prog.composition) {
    for (const auto& e : prog.composition->entries) {
      if (!e.trigger) continue;
      const RegionRef& r = e.trigger->region;
      const bool missing = (r.kind == RegionRef::Kind::Intersection && map.find_intersection(r.id) == nullptr) ||
                           (r.kind == RegionRef::Kind::Named && !map.regions.count(r.id)) ||
                           (r.kind == RegionRef::Kind::LaneSegment && map.find_lane(r.id) == nullptr);
      if (missing) {
        out.push_back({Diagnostic::Kind::Value, r.loc, fmt::format("trigger region '{}' does not exist on map '{}'", r.id, map.name)});
      }
    }
  }
  return out;
}

SamplePoint midpoint(const FeatureSpace& space) {
  return point_from_unit(space, std::vector<double>(space.continuous.size(), 0.5),
                         std::vector<std::size_t>(space.discrete.size(), 0));
}

sim::ConcreteScene instantiate(const ScenarioProgram& prog, const SamplePoint& point, const sim::MapModel& map) {
  const FeatureSpace space = extract_feature_space(prog);
  if (point.continuous.size() != space.continuous.size() || point.discrete.size() != space.discrete.size()) {
    throw std::invalid_argument("sample point dimensions do not match the program's feature space");
  }

  Bindings bindings;
  for (std::size_t i = 0; i < space.continuous.size(); ++i) bindings[space.continuous[i].name] = point.continuous[i];
  for (std::size_t i = 0; i < space.discrete.size(); ++i) {
    const auto& dim = space.discrete[i];
    if (point.discrete[i] >= dim.choices.size()) throw std::invalid_argument("discrete choice index out of range");
    bindings[dim.name] = dim.choices[point.discrete[i]];
  }
  auto bind_constants = [&](const ScenarioProgram& p, const std::string& scope) {
    for (const auto& param : p.params) {
      if (const auto* c = std::get_if<Constant>(&param.dist)) bindings[qualified_name(scope, param.name)] = c->value;
    }
  };
  bind_constants(prog, "");
  for (const auto& sub : prog.subscenarios) bind_constants(sub, sub.name);

  sim::ConcreteScene scene;
  scene.name = prog.name;
  scene.max_time = prog.max_time();
  scene.terminate_when = prog.termination.predicate;
  for (const auto& param : prog.params) scene.bindings[param.name] = bindings.at(param.name);

  std::map<std::string, AgentView, std::less<>> views;

  try {
    auto add_agents = [&](const ScenarioProgram& p, const std::string& scope, int group) {
      SceneContext ctx(bindings, views, map, scope);
      for (const auto& a : p.agents) ctx.declare(qualified_name(scope, a.name));
      // Ego first so that it is always agents[0].
      std::vector<const AgentDecl*> order;
      for (const auto& a : p.agents) {
        if (a.ego) order.insert(order.begin(), &a);
        else order.push_back(&a);
      }
      for (const AgentDecl* a : order) {
        const std::string name = qualified_name(scope, a->name);
        sim::SceneAgent agent;
        agent.initial = place(*a, name, ctx, map);
        agent.ego = a->ego;
        agent.group = group;
        agent.behavior = resolve_behavior(*a, name, ctx);
        agent.route = resolve_route(*a, agent.initial, ctx, map, name);
        views[name] = AgentView{agent.initial.pose, agent.initial.speed};
        scene.agents.push_back(std::move(agent));
      }
      for (const auto& r : p.requirements) {
        if (!evaluate_bool(r, ctx)) {
          throw InfeasibleSample(fmt::format("requirement at line {} does not hold", r.loc.line));
        }
      }
    };

    add_agents(prog, "", -1);
    if (scene.agents.empty() || !scene.agents.front().ego) {
      throw InfeasibleSample("program declares no ego agent");
    }
    for (std::size_t g = 0; g < prog.subscenarios.size(); ++g) {
      const auto& sub = prog.subscenarios[g];
      sim::SceneGroup group;
      group.name = sub.name;
      group.duration = sub.termination.max_time;
      scene.groups.push_back(std::move(group));
      add_agents(sub, sub.name, static_cast<int>(g));
    }
    for (auto& a : scene.agents) {
      if (a.group >= 0) a.initial.alive = false;
    }

    if (prog.composition) {
      SceneContext ctx(bindings, views, map, "");
      double next_start = 0.0;
      for (const auto& e : prog.composition->entries) {
        std::size_t g = 0;
        while (g < prog.subscenarios.size() && prog.subscenarios[g].name != e.scenario) ++g;
        sim::SceneGroup& group = scene.groups.at(g);
        switch (prog.composition->mode) {
          case CompositionMode::Parallel:
            group.activation = sim::Activation::Always;
            break;
          case CompositionMode::Sequential:
            group.activation = sim::Activation::Sequential;
            group.start = next_start;
            next_start = group.duration ? next_start + *group.duration : std::numeric_limits<double>::infinity();
            break;
          case CompositionMode::Opportunistic:
            group.activation = sim::Activation::Opportunistic;
            group.trigger = sim::SceneTrigger{e.trigger->agent, resolve_region(e.trigger->region, ctx, map)};
            break;
        }
      }
    }
    for (auto& a : scene.agents) {
      if (a.group >= 0 && scene.groups[a.group].activation == sim::Activation::Always) a.initial.alive = true;
    }

    if (prog.weather) {
      SceneContext ctx(bindings, views, map, "");
      scene.weather = evaluate_string(*prog.weather, ctx);
    }
  } catch (const EvalError& e) {
    throw InfeasibleSample(e.what());
  } catch (const UnknownLane& e) {
    throw InfeasibleSample(e.what());
  }
  return scene;
}

}  // namespace scenfuzz::dsl
