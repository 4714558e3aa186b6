#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rondo/dynamics.hpp"
#include "rondo/frame.hpp"
#include "rondo/plan.hpp"

namespace rondo {

struct AgentSnapshot {
  int id = 0;
  AgentRole role = AgentRole::traffic;
  VehicleState state;
  VehicleDims dims;

  bool operator==(const AgentSnapshot&) const = default;
};

/// World state at one tick; inactive agents are left out.
struct TickRecord {
  double time = 0.0;
  std::vector<AgentSnapshot> agents;

  bool operator==(const TickRecord&) const = default;
};

TickRecord snapshot(double time, std::span<const Agent> world);

/// What a policy sees each tick. `history` ends with the current tick.
struct Observation {
  double time = 0.0;
  const RoadMap* map = nullptr;
  std::span<const Agent> world;  // index 0 is the SDV
  std::span<const TickRecord> history;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual WaypointPlan act(const Observation& obs) = 0;
  virtual void reset() {}
  virtual std::string name() const = 0;
};

struct ExpertPolicyConfig {
  ExpertConfig expert;
  double rollout_dt = 0.1;
};

/// Rolls the SDV forward for 3 s under IDM, gate and pure pursuit while traffic
/// keeps its current speed along its route.
WaypointPlan expert_plan(std::span<const Agent> world, const RoadMap& map, double time,
                         const ExpertPolicyConfig& cfg = {});

class ExpertPolicy : public Policy {
 public:
  explicit ExpertPolicy(ExpertPolicyConfig cfg = {}) : cfg_(cfg) {}
  WaypointPlan act(const Observation& obs) override { return expert_plan(obs.world, *obs.map, obs.time, cfg_); }
  std::string name() const override { return "expert"; }

 private:
  ExpertPolicyConfig cfg_;
};

/// Always plans to stand still.
class StopPolicy : public Policy {
 public:
  WaypointPlan act(const Observation&) override { return {}; }
  std::string name() const override { return "stop"; }
};

/// Straight line ahead at a fixed speed.
class StraightPolicy : public Policy {
 public:
  explicit StraightPolicy(double speed) : speed_(speed) {}
  WaypointPlan act(const Observation&) override;
  std::string name() const override { return "straight"; }

 private:
  double speed_;
};

/// Timestamped observations with jitter compensation.
class HistoryQueue {
 public:
  explicit HistoryQueue(double keep = 1.0) : keep_(keep) {}
  void push(TickRecord msg);
  void clear() { q_.clear(); }
  std::size_t size() const { return q_.size(); }

  /// Observations interpolated to now, now - 0.2 and now - 0.4; nullopt while
  /// the queue does not span the window.
  std::optional<std::array<TickRecord, kHistorySlots>> resample(double now) const;

 private:
  std::deque<TickRecord> q_;
  double keep_;
};

/// Builds the input part of a SceneFrame (no future labels) from aligned history.
SceneFrame frame_from_history(const std::array<TickRecord, kHistorySlots>& hist, const Route& route,
                              const std::string& map_id);

enum class RefPoint { centre_of_gravity, centre_of_rear_axle };
struct RefPointSpec {
  RefPoint point = RefPoint::centre_of_gravity;
  double offset = 0.0;  // m ahead of the rear axle along the vehicle axis

  static RefPointSpec cog(double offset = 1.4) { return {RefPoint::centre_of_gravity, offset}; }
  static RefPointSpec rear_axle() { return {RefPoint::centre_of_rear_axle, 0.0}; }
};

/// Moves every waypoint along the interpolated plan curve by the difference of
/// the two reference offsets.
WaypointPlan transform_reference_point(const WaypointPlan& plan, const RefPointSpec& from, const RefPointSpec& to);

}  // namespace rondo
