#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rondo/dynamics.hpp"
#include "rondo/map.hpp"

namespace rondo {

enum class ScenarioKind {
  SlowDownBehind,
  IncreaseGap,
  StopBehind,
  DriveoffStop,
  Yield,
  YieldWithLead,
  RandomTraffic,
  HighSpeedRural,
  RandomWithParkedCars,
  ChallengingStopping,
};

inline constexpr ScenarioKind kAllScenarioKinds[] = {
    ScenarioKind::SlowDownBehind, ScenarioKind::IncreaseGap,         ScenarioKind::StopBehind,
    ScenarioKind::DriveoffStop,   ScenarioKind::Yield,               ScenarioKind::YieldWithLead,
    ScenarioKind::RandomTraffic,  ScenarioKind::HighSpeedRural,      ScenarioKind::RandomWithParkedCars,
    ScenarioKind::ChallengingStopping,
};
/// The seven data-generation scenarios.
inline constexpr ScenarioKind kTrainingScenarioKinds[] = {
    ScenarioKind::SlowDownBehind, ScenarioKind::IncreaseGap,   ScenarioKind::StopBehind,
    ScenarioKind::DriveoffStop,   ScenarioKind::Yield,         ScenarioKind::YieldWithLead,
    ScenarioKind::RandomTraffic,
};

/// kebab-case name, e.g. "slow-down-behind".
std::string_view scenario_name(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario(std::string_view name);
bool needs_roundabout(ScenarioKind kind);

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SuccessCriterion {
  enum class Kind { go_to_goal, stop_in_lane, increase_gap_restored };
  Kind kind = Kind::go_to_goal;
  double goal_s = 0.0;       // SDV route path arc length (go_to_goal)
  double not_before = 0.0;   // s; earlier ticks never count
  double min_progress_gain = 0.0;  // m driven after not_before before a stop counts
  double hold_time = 2.0;    // s (increase_gap_restored)
  double s0 = 2.0;           // safe gap = s0 + v T
  double T = 1.5;

  bool operator==(const SuccessCriterion&) const = default;
};

std::string_view criterion_name(SuccessCriterion::Kind kind);

/// Per-tick SDV summary used by success monitoring and metrics.
struct SdvTick {
  double time = 0.0;
  double progress = 0.0;   // route path arc length
  double lateral = 0.0;    // signed offset from the route centreline
  double half_lane = 2.0;  // half width of the lane at `progress`
  double speed = 0.0;
  std::optional<double> gap;  // bumper gap to the vehicle ahead
};

/// Incremental evaluation of a criterion over the SDV ticks. Infractions
/// (collisions, off-road events) are judged separately by `check_success`.
class SuccessMonitor {
 public:
  explicit SuccessMonitor(const SuccessCriterion& c) : c_(c) {}
  /// Returns true once the criterion is fulfilled (and stays true).
  bool observe(const SdvTick& tick);
  bool satisfied() const { return done_; }

 private:
  SuccessCriterion c_;
  bool done_ = false;
  std::optional<double> ref_progress_;
  std::optional<double> streak_start_;
};

bool check_success(const SuccessCriterion& criterion, std::span<const SdvTick> ticks, int collision_count,
                   int offroad_event_count);

/// Ranges that shape sampled scenarios; all defaults are our own choices.
struct ScenarioParams {
  double sdv_length = 4.6;
  double sdv_width = 1.9;
  double sdv_headway = 1.8;        // expert IDM T for the SDV
  double sdv_speed_lo = 5.0, sdv_speed_hi = 9.0;
  double goal_lo = 20.0, goal_hi = 40.0;  // m along the exit lane
  double traffic_speed_lo = 0.7, traffic_speed_hi = 1.0;  // fraction of the lane limit
  int random_traffic_max = 8;
  int parked_lo = 3, parked_hi = 8;
  double max_duration = 60.0;
  bool sample_dims = true;
  double dims_length_lo = 4.0, dims_length_hi = 6.0;
  double dims_width_lo = 1.0, dims_width_hi = 3.0;
  double offroad_distance_lo = 3.0, offroad_distance_hi = 15.0;
  double criterion_s0 = 2.0, criterion_T = 1.5, criterion_hold = 2.0;
};

struct EpisodeConfig {
  ScenarioKind kind = ScenarioKind::RandomTraffic;
  std::shared_ptr<const RoadMap> map;
  std::vector<Agent> agents;  // index 0 is the SDV
  SuccessCriterion criterion;
  double max_duration = 60.0;
  std::uint64_t seed = 0;
};

EpisodeConfig sample_scenario(ScenarioKind kind, std::shared_ptr<const RoadMap> map, std::uint64_t seed,
                              const ScenarioParams& params = {});

/// Canonical text form; equal configs give equal strings.
std::string describe(const EpisodeConfig& config);

/// Places an agent on its route at path arc length `s` and sets its progress.
void place_on_route(Agent& agent, double s, double lateral = 0.0);

/// True when no two footprints (optionally inflated) overlap.
bool spawn_is_clear(std::span<const Agent> agents, const Agent& candidate, double margin = 0.5);

}  // namespace rondo
