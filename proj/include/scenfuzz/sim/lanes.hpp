#pragma once

#include <string>
#include <vector>

#include "scenfuzz/geometry.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::sim {

// Lane that follows `lane` when travelling along `route`: the next route
// entry if `lane` is on it, else the lane's first successor. Empty at a dead end.
std::string next_lane(const MapModel& map, const std::vector<std::string>& route, const std::string& lane);

// Point `ahead` metres past arc length s on `lane`, continuing onto following
// lanes, shifted `lateral` metres to the left of travel.
Vec2 point_ahead(const MapModel& map, const std::vector<std::string>& route, const std::string& lane, double s,
                 double ahead, double lateral = 0.0);

// Lane among `candidates` whose centerline is nearest to p (first on ties).
// Returns an empty id when there are no candidates.
std::string nearest_lane(const MapModel& map, const std::vector<std::string>& candidates, Vec2 p,
                         Projection* projection = nullptr);

// Re-associates a vehicle with its current lane, a successor or a neighbour,
// keeping the current lane unless another one is strictly nearer.
void track_lane(AgentState& agent, const MapModel& map);

// Route lanes concatenated into one arc-length parameterised path.
class RoutePath {
 public:
  RoutePath() = default;
  RoutePath(const MapModel& map, const std::vector<std::string>& route);

  bool empty() const { return lanes_.empty(); }
  const Polyline& path() const { return path_; }
  // Route arc length of arc length s on a route lane, or nullopt if not on the route.
  std::optional<double> route_s(const std::string& lane, double s) const;
  Projection project(Vec2 p) const { return path_.project(p); }

 private:
  std::vector<std::string> lanes_;
  std::vector<double> offsets_;
  Polyline path_;
};

}  // namespace scenfuzz::sim
