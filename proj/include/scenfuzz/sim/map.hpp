#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenfuzz/geometry.hpp"

namespace scenfuzz::sim {

struct Lane {
  std::string id;
  Polyline centerline;
  double width = 3.5;
  // Drivable margin beyond the lane edge used for off-lane placement checks.
  double shoulder = 3.0;
  std::vector<std::string> successors;
  std::optional<std::string> left;
  std::optional<std::string> right;
};

struct StopLine {
  std::string lane;
  double s = 0.0;
};

struct Intersection {
  std::string id;
  std::vector<std::string> lanes;
  std::vector<StopLine> stop_lines;
  Vec2 center;
  double radius = 0.0;
};

struct CircleRegion {
  Vec2 center;
  double radius = 0.0;
  friend bool operator==(const CircleRegion&, const CircleRegion&) = default;
};

struct LaneSegmentRegion {
  std::string lane;
  double from = 0.0;
  double to = 0.0;
  friend bool operator==(const LaneSegmentRegion&, const LaneSegmentRegion&) = default;
};

using Region = std::variant<CircleRegion, LaneSegmentRegion>;

class MapModel {
 public:
  std::string name;
  std::vector<Lane> lanes;
  std::vector<Intersection> intersections;
  std::map<std::string, Region> regions;

  // Checks structural invariants; throws MapError.
  void validate() const;

  const Lane* find_lane(const std::string& id) const;
  const Lane& lane(const std::string& id) const;  // throws UnknownLane
  const Intersection* find_intersection(const std::string& id) const;

  bool contains(const Region& region, Vec2 p) const;
  // Region for an intersection is its bounding circle.
  Region intersection_region(const std::string& id) const;
};

MapModel map_from_json(const nlohmann::json& doc);
nlohmann::json map_to_json(const MapModel& map);
MapModel load_map(const std::filesystem::path& path);

}  // namespace scenfuzz::sim
