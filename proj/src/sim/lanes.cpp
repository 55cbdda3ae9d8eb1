#include "scenfuzz/sim/lanes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenfuzz::sim {

std::string next_lane(const MapModel& map, const std::vector<std::string>& route, const std::string& lane) {
  auto it = std::find(route.begin(), route.end(), lane);
  if (it != route.end() && std::next(it) != route.end()) return *std::next(it);
  const Lane* l = map.find_lane(lane);
  if (l == nullptr || l->successors.empty()) return {};
  return l->successors.front();
}

Vec2 point_ahead(const MapModel& map, const std::vector<std::string>& route, const std::string& lane, double s,
                 double ahead, double lateral) {
  const Lane* cur = &map.lane(lane);
  double remaining = s + ahead;
  for (int hops = 0; hops < 64 && remaining > cur->centerline.length(); ++hops) {
    const std::string next = next_lane(map, route, cur->id);
    const Lane* n = next.empty() ? nullptr : map.find_lane(next);
    if (n == nullptr) break;
    remaining -= cur->centerline.length();
    cur = n;
  }
  const double heading = cur->centerline.heading_at(remaining);
  const Vec2 normal{-std::sin(heading), std::cos(heading)};
  return cur->centerline.point_at(remaining) + lateral * normal;
}

std::string nearest_lane(const MapModel& map, const std::vector<std::string>& candidates, Vec2 p,
                         Projection* projection) {
  std::string best;
  Projection best_proj;
  best_proj.distance = std::numeric_limits<double>::infinity();
  for (const auto& id : candidates) {
    const Lane* lane = map.find_lane(id);
    if (lane == nullptr) continue;
    const Projection proj = lane->centerline.project(p);
    if (proj.distance < best_proj.distance) {
      best = id;
      best_proj = proj;
    }
  }
  if (projection != nullptr) *projection = best_proj;
  return best;
}

void track_lane(AgentState& agent, const MapModel& map) {
  if (agent.lane.empty() || !is_vehicle(agent.kind)) return;
  const Lane* cur = map.find_lane(agent.lane);
  if (cur == nullptr) return;
  std::vector<std::string> candidates{cur->id};
  for (const auto& s : cur->successors) candidates.push_back(s);
  if (cur->left) candidates.push_back(*cur->left);
  if (cur->right) candidates.push_back(*cur->right);
  Projection proj;
  agent.lane = nearest_lane(map, candidates, agent.position(), &proj);
  agent.s = proj.s;
  agent.lateral = proj.lateral;
}

RoutePath::RoutePath(const MapModel& map, const std::vector<std::string>& route) {
  std::vector<Vec2> points;
  double offset = 0.0;
  for (const auto& id : route) {
    const Lane& lane = map.lane(id);
    lanes_.push_back(id);
    offsets_.push_back(offset);
    offset += lane.centerline.length();
    for (const Vec2& p : lane.centerline.points()) {
      if (points.empty() || distance(points.back(), p) > 1e-9) points.push_back(p);
    }
  }
  if (points.size() >= 2) path_ = Polyline(std::move(points));
}

std::optional<double> RoutePath::route_s(const std::string& lane, double s) const {
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i] == lane) return offsets_[i] + s;
  }
  return std::nullopt;
}

}  // namespace scenfuzz::sim
