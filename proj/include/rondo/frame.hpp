#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rondo/dynamics.hpp"
#include "rondo/plan.hpp"

namespace rondo {

/// History slots: 0 = t, 1 = t - 0.2 s, 2 = t - 0.4 s.
inline constexpr int kHistorySlots = 3;
inline constexpr double kHistoryStep = 0.2;
/// Prediction-head label horizon.
inline constexpr double kPredictionHorizon = 3.0;

struct TrackedObject {
  int id = 0;
  VehicleDims dims;
  std::array<VehicleState, kHistorySlots> history{};
  std::array<bool, kHistorySlots> present{};

  bool operator==(const TrackedObject&) const = default;
};

struct FutureObject {
  int id = 0;
  VehicleDims dims;
  VehicleState state;

  bool operator==(const FutureObject&) const = default;
};

/// One training sample in vector form, in map coordinates.
struct SceneFrame {
  std::uint64_t sequence_id = 0;
  std::int32_t tick = 0;
  double time = 0.0;
  TrackedObject sdv;
  std::vector<TrackedObject> traffic;
  std::array<VehicleState, kWaypointCount> sdv_future{};  // at t + 0.2 k, k = 1..15
  std::vector<FutureObject> traffic_future;               // at t + kPredictionHorizon
  std::string map_id;
  Route route;

  Pose2 sdv_pose() const { return sdv.history[0].pose(); }
  bool operator==(const SceneFrame&) const = default;
};

/// Waypoint label: future SDV positions in the frame-t SDV coordinates.
WaypointPlan waypoint_label(const SceneFrame& frame);

}  // namespace rondo
