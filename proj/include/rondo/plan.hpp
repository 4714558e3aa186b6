#pragma once

#include <array>
#include <cmath>

#include "rondo/geom.hpp"

namespace rondo {

inline constexpr int kWaypointCount = 15;
inline constexpr double kWaypointDt = 0.2;
inline constexpr double kPlanHorizon = kWaypointCount * kWaypointDt;

/// Waypoints in the SDV frame (x forward, y left) at t = 0.2 s, 0.4 s, ..., 3.0 s.
struct WaypointPlan {
  std::array<Vec2, kWaypointCount> points{};

  bool finite() const {
    for (const Vec2 p : points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
  }
  bool operator==(const WaypointPlan&) const = default;
};

}  // namespace rondo
