#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "scenfuzz/geometry.hpp"
#include "scenfuzz/sim/map.hpp"
#include "scenfuzz/sim/world.hpp"

namespace scenfuzz::monitor {

enum class Metric { Progress, Distance, Ttc, Lane };

inline constexpr std::size_t kMetricCount = 4;
inline constexpr std::array<Metric, kMetricCount> kMetrics{Metric::Progress, Metric::Distance, Metric::Ttc,
                                                           Metric::Lane};

std::string_view to_string(Metric m);
std::optional<Metric> metric_from_string(std::string_view s);

struct Thresholds {
  double distance = 5.0;     // m, minimum center distance to other vehicles
  double ttc = 2.0;          // s, minimum time to collision
  double ttc_radius = 5.0;   // m, collision shell used by the TTC equation
  double progress = 11.0;    // m, minimum displacement of the ego
  double lane = 0.5;         // m, maximum mean offset from the lane centerline
  double cap = 100.0;        // bound on |rho|
  bool include_pedestrians = false;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Robustness per metric in the fixed order progress, distance, ttc, lane.
// A negative entry is a violation.
struct RhoVector {
  std::array<double, kMetricCount> rho{};

  double operator[](Metric m) const { return rho[static_cast<std::size_t>(m)]; }
  bool violated(Metric m) const { return (*this)[m] < 0.0; }
  std::size_t violation_count() const;
  bool any_violation() const { return violation_count() > 0; }
  friend bool operator==(const RhoVector&, const RhoVector&) = default;
};

struct TtcRoots {
  enum class Case { NoRealRoots, RelativeRestSafe, RelativeRestViolating, Roots };
  Case kind = Case::NoRealRoots;
  double t1 = 0.0;  // t1 <= t2, set only for Case::Roots
  double t2 = 0.0;
};

// Solves |p + v t| = r, i.e. (v.v) t^2 + 2 (p.v) t + (p.p - r^2) = 0.
TtcRoots ttc_roots(Vec2 p, Vec2 v, double r);

// Margin of one relative state against the TTC threshold; +cap when safe.
double ttc_margin(Vec2 p, Vec2 v, const Thresholds& th = {});

double metric_distance(const sim::Trace& trace, const Thresholds& th = {});
double metric_ttc(const sim::Trace& trace, const Thresholds& th = {});
double metric_progress(const sim::Trace& trace, const Thresholds& th = {});
double metric_lane(const sim::Trace& trace, const sim::MapModel& map, const Thresholds& th = {});

RhoVector evaluate(const sim::Trace& trace, const sim::MapModel& map, const Thresholds& th = {});

}  // namespace scenfuzz::monitor
