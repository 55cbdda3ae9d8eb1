#include "scenfuzz/sim/map.hpp"

#include <fstream>
#include <set>

#include <fmt/core.h>

#include "scenfuzz/errors.hpp"

namespace scenfuzz::sim {

namespace {

Vec2 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw MapError("expected [x, y] point");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

nlohmann::json vec_to_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

const Lane* MapModel::find_lane(const std::string& id) const {
  for (const auto& l : lanes) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

const Lane& MapModel::lane(const std::string& id) const {
  const Lane* l = find_lane(id);
  if (l == nullptr) throw UnknownLane(fmt::format("unknown lane '{}'", id));
  return *l;
}

const Intersection* MapModel::find_intersection(const std::string& id) const {
  for (const auto& i : intersections) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

Region MapModel::intersection_region(const std::string& id) const {
  const Intersection* i = find_intersection(id);
  if (i == nullptr) throw MapError(fmt::format("unknown intersection '{}'", id));
  return CircleRegion{i->center, i->radius};
}

bool MapModel::contains(const Region& region, Vec2 p) const {
  if (const auto* c = std::get_if<CircleRegion>(&region)) {
    return distance(p, c->center) <= c->radius;
  }
  const auto& seg = std::get<LaneSegmentRegion>(region);
  const Lane& l = lane(seg.lane);
  const Projection proj = l.centerline.project(p);
  return proj.s >= seg.from && proj.s <= seg.to && std::abs(proj.lateral) <= l.width / 2.0;
}

void MapModel::validate() const {
  std::set<std::string> ids;
  for (const auto& l : lanes) {
    if (!ids.insert(l.id).second) throw MapError(fmt::format("duplicate lane id '{}'", l.id));
    if (!(l.width > 0.0)) throw MapError(fmt::format("lane '{}' has non-positive width", l.id));
  }
  for (const auto& l : lanes) {
    for (const auto& succ : l.successors) {
      if (!ids.count(succ)) throw MapError(fmt::format("lane '{}' successor '{}' does not exist", l.id, succ));
    }
    for (const auto& side : {l.left, l.right}) {
      if (!side) continue;
      const Lane* other = find_lane(*side);
      if (other == nullptr) throw MapError(fmt::format("lane '{}' neighbour '{}' does not exist", l.id, *side));
      if (other->left != l.id && other->right != l.id) {
        throw MapError(fmt::format("adjacency between '{}' and '{}' is not symmetric", l.id, *side));
      }
    }
  }
  for (const auto& i : intersections) {
    for (const auto& m : i.lanes) {
      if (!ids.count(m)) throw MapError(fmt::format("intersection '{}' member '{}' does not exist", i.id, m));
    }
    for (const auto& sl : i.stop_lines) {
      if (!ids.count(sl.lane)) throw MapError(fmt::format("intersection '{}' stop line lane '{}' missing", i.id, sl.lane));
    }
    if (!(i.radius > 0.0)) throw MapError(fmt::format("intersection '{}' needs a positive radius", i.id));
  }
  for (const auto& [id, region] : regions) {
    if (const auto* seg = std::get_if<LaneSegmentRegion>(&region)) {
      if (!ids.count(seg->lane)) throw MapError(fmt::format("region '{}' references missing lane '{}'", id, seg->lane));
    }
  }
}

MapModel map_from_json(const nlohmann::json& doc) {
  MapModel m;
  try {
    m.name = doc.value("name", "");
    for (const auto& jl : doc.at("lanes")) {
      Lane l;
      l.id = jl.at("id").get<std::string>();
      std::vector<Vec2> pts;
      for (const auto& p : jl.at("centerline")) pts.push_back(vec_from_json(p));
      try {
        l.centerline = Polyline(std::move(pts));
      } catch (const std::invalid_argument& e) {
        throw MapError(fmt::format("lane '{}': {}", l.id, e.what()));
      }
      l.width = jl.value("width", 3.5);
      l.shoulder = jl.value("shoulder", 3.0);
      l.successors = jl.value("successors", std::vector<std::string>{});
      l.left = optional_string(jl, "left");
      l.right = optional_string(jl, "right");
      m.lanes.push_back(std::move(l));
    }
    for (const auto& ji : doc.value("intersections", nlohmann::json::array())) {
      Intersection i;
      i.id = ji.at("id").get<std::string>();
      i.lanes = ji.value("lanes", std::vector<std::string>{});
      for (const auto& js : ji.value("stop_lines", nlohmann::json::array())) {
        i.stop_lines.push_back({js.at("lane").get<std::string>(), js.at("s").get<double>()});
      }
      i.center = vec_from_json(ji.at("center"));
      i.radius = ji.at("radius").get<double>();
      m.intersections.push_back(std::move(i));
    }
    for (const auto& jr : doc.value("regions", nlohmann::json::array())) {
      const auto id = jr.at("id").get<std::string>();
      if (jr.contains("circle")) {
        const auto& c = jr.at("circle");
        m.regions[id] = CircleRegion{vec_from_json(c.at("center")), c.at("radius").get<double>()};
      } else if (jr.contains("lane_segment")) {
        const auto& s = jr.at("lane_segment");
        m.regions[id] = LaneSegmentRegion{s.at("lane").get<std::string>(), s.at("from").get<double>(),
                                          s.at("to").get<double>()};
      } else {
        throw MapError(fmt::format("region '{}' is neither circle nor lane_segment", id));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw MapError(fmt::format("malformed map document: {}", e.what()));
  }
  m.validate();
  return m;
}

nlohmann::json map_to_json(const MapModel& map) {
  nlohmann::json doc;
  doc["name"] = map.name;
  auto& lanes = doc["lanes"] = nlohmann::json::array();
  for (const auto& l : map.lanes) {
    nlohmann::json jl;
    jl["id"] = l.id;
    auto& pts = jl["centerline"] = nlohmann::json::array();
    for (const auto& p : l.centerline.points()) pts.push_back(vec_to_json(p));
    jl["width"] = l.width;
    jl["shoulder"] = l.shoulder;
    jl["successors"] = l.successors;
    jl["left"] = l.left ? nlohmann::json(*l.left) : nlohmann::json(nullptr);
    jl["right"] = l.right ? nlohmann::json(*l.right) : nlohmann::json(nullptr);
    lanes.push_back(std::move(jl));
  }
  auto& inter = doc["intersections"] = nlohmann::json::array();
  for (const auto& i : map.intersections) {
    nlohmann::json ji;
    ji["id"] = i.id;
    ji["lanes"] = i.lanes;
    ji["stop_lines"] = nlohmann::json::array();
    for (const auto& sl : i.stop_lines) ji["stop_lines"].push_back({{"lane", sl.lane}, {"s", sl.s}});
    ji["center"] = vec_to_json(i.center);
    ji["radius"] = i.radius;
    inter.push_back(std::move(ji));
  }
  auto& regions = doc["regions"] = nlohmann::json::array();
  for (const auto& [id, r] : map.regions) {
    if (const auto* c = std::get_if<CircleRegion>(&r)) {
      regions.push_back({{"id", id}, {"circle", {{"center", vec_to_json(c->center)}, {"radius", c->radius}}}});
    } else {
      const auto& s = std::get<LaneSegmentRegion>(r);
      regions.push_back({{"id", id}, {"lane_segment", {{"lane", s.lane}, {"from", s.from}, {"to", s.to}}}});
    }
  }
  return doc;
}

MapModel load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MapError(fmt::format("cannot open map file '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MapError(fmt::format("map file '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return map_from_json(doc);
}

}  // namespace scenfuzz::sim
