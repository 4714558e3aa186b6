#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rondo/geom.hpp"
#include "rondo/map.hpp"

namespace rondo {

/// Simulation tick, matching a 10 Hz object-list rate.
inline constexpr double kTickSeconds = 0.1;
inline constexpr double kMaxSteer = kPi / 4.0;
inline constexpr double kMaxAccel = 3.0;
inline constexpr double kMaxDecel = 6.0;

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0

  Vec2 position() const { return {x, y}; }
  Pose2 pose() const { return {{x, y}, heading}; }
  bool operator==(const VehicleState&) const = default;
};

struct VehicleDims {
  double length = 4.5;
  double width = 1.9;

  double wheelbase() const { return 0.6 * length; }
  bool operator==(const VehicleDims&) const = default;
};

OrientedBox footprint(const VehicleState& s, const VehicleDims& d);

struct IdmParams {
  double v0 = 13.9;      // desired speed, m/s
  double T = 1.5;        // time headway, s
  double a_max = 2.0;    // m/s^2
  double b_comf = 3.0;   // m/s^2
  double s0 = 2.0;       // minimum gap, m
  double delta = 4.0;
  double b_emergency = 6.0;

  double desired_gap(double v) const { return s0 + v * T; }
  bool operator==(const IdmParams&) const = default;
};

/// Kinematic bicycle step referenced at the vehicle's state point, integrated
/// exactly for constant acceleration and steering over `dt`.
VehicleState step_bicycle(const VehicleState& state, double accel, double steer, const VehicleDims& dims, double dt);

/// Intelligent Driver Model acceleration. A non-positive gap returns -b_emergency.
double idm_accel(double v, std::optional<double> leader_gap, double leader_speed, const IdmParams& p);

enum class AgentRole { sdv, traffic };
enum class Behaviour { idm, parked, driveoff_stop };

/// Route plus derived data shared by every copy of an agent.
struct RouteData {
  Route route;
  RoutePath path;
  std::vector<double> speed_limit;  // sampled every metre of path arc length
  int entry_arm = -1;               // roundabout arm the route enters from
  int exit_arm = -1;                // roundabout arm the route leaves through
  std::optional<double> yield_line_s;  // path arc length of the entry stop line
  std::optional<double> ring_exit_s;   // ring arc length where the route leaves the ring

  double limit_at(double path_s) const;
};

/// Lateral acceleration bound used to derive curve speeds for the expert.
inline constexpr double kExpertLateralAccel = 2.0;

std::shared_ptr<const RouteData> make_route_data(const RoadMap& map, const Route& route);

struct DriveoffSchedule {
  double hold_until = 0.0;  // s of episode time
  double stop_s = 0.0;      // path arc length where the vehicle stops again
};

struct Agent {
  int id = 0;
  AgentRole role = AgentRole::traffic;
  Behaviour behaviour = Behaviour::idm;
  VehicleState state;
  VehicleDims dims;
  IdmParams idm;
  std::shared_ptr<const RouteData> route;
  DriveoffSchedule driveoff;

  // episode state
  double progress = 0.0;  // route path arc length of the reference point
  bool committed = false; // passed (or is passing) its yield line
  bool active = true;     // false once the route is finished

  OrientedBox box() const { return footprint(state, dims); }
};

/// Re-projects the agent onto its route, searching near the previous progress.
double route_progress(const Agent& agent);

enum class GateDecision { proceed, yield };

struct GateConfig {
  double time_threshold = 3.0;  // s until a priority vehicle reaches the conflict point
  double horizon = 20.0;        // m before the stop line where the gate is evaluated
};

/// Roundabout entry conflict check against priority (ring) traffic.
/// `self` indexes into `world`.
GateDecision conflict_gate(std::size_t self, std::span<const Agent> world, const RoadMap& map,
                           const GateConfig& cfg = {});

/// Time until a ring vehicle reaches the conflict point of `arm`; nullopt when it
/// leaves the ring earlier or is not on the ring.
std::optional<double> time_to_conflict(const Agent& other, const ArmInfo& arm, const RoadMap& map);

struct PursuitConfig {
  double gain = 1.0;  // s, lookahead per unit speed
  double min_lookahead = 4.0;
  double max_lookahead = 15.0;
};

/// Pure-pursuit steering toward the route centreline.
double expert_steering(const Agent& agent, const RoadMap& map, const PursuitConfig& cfg = {});

struct Leader {
  double gap = 0.0;  // bumper to bumper, m
  double speed = 0.0;
};

/// Nearest agent ahead along the route whose footprint intrudes into the lane.
std::optional<Leader> find_leader(std::size_t self, std::span<const Agent> world, double lookahead = 80.0);

struct ControlCommand {
  double accel = 0.0;
  double steer = 0.0;
};

struct ExpertConfig {
  GateConfig gate;
  PursuitConfig pursuit;
};

/// Longitudinal IDM with leader, gate and scripted behaviours, plus pure pursuit.
ControlCommand expert_control(std::size_t self, std::span<const Agent> world, const RoadMap& map, double time,
                              const ExpertConfig& cfg = {});

/// Effective desired speed at the agent's position: set speed capped by the
/// upcoming limits, each relaxed by a comfortable deceleration distance.
double effective_desired_speed(const Agent& agent);

/// Updates progress/commit/active flags after a state change.
void update_agent_bookkeeping(std::size_t self, std::span<Agent> world, const RoadMap& map, const GateConfig& cfg);

}  // namespace rondo
