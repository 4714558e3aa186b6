#pragma once

#include <vector>

#include "rondo/dynamics.hpp"
#include "rondo/plan.hpp"

namespace rondo {

/// Natural cubic spline through (t_i, y_i) with strictly increasing t.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> knots, std::vector<double> values);

  double value(double t) const;
  double first_derivative(double t) const;
  double second_derivative(double t) const;
  const std::vector<double>& knots() const { return t_; }

 private:
  std::size_t interval(double t) const;

  std::vector<double> t_, y_, m_;  // m_ holds second derivatives at the knots
};

/// x(t), y(t) through the SDV origin at t = 0 and all waypoints at t = 0.2 k.
class SplineTrajectory {
 public:
  SplineTrajectory() = default;
  SplineTrajectory(CubicSpline x, CubicSpline y) : x_(std::move(x)), y_(std::move(y)) {}

  Vec2 position(double t) const { return {x_.value(t), y_.value(t)}; }
  Vec2 velocity(double t) const { return {x_.first_derivative(t), y_.first_derivative(t)}; }
  double speed(double t) const { return norm(velocity(t)); }
  /// Tangent direction; held from the last moving instant while (nearly) stopped.
  double heading(double t) const;
  double curvature(double t) const;

 private:
  CubicSpline x_, y_;
};

SplineTrajectory fit_spline(const WaypointPlan& plan);

struct ControllerConfig {
  double control_time = 0.4;  // s ahead on the trajectory
  double speed_gain = 2.5;    // 1/s
  double heading_gain = 0.0;  // rad/rad
  double min_target_distance = 1.0;  // m; lateral law looks further out when slower
  double standstill_decel = 3.0;
  double standstill_gap = 0.1;  // m between consecutive waypoints
  double wheelbase = 2.7;       // m, of the controlled vehicle
};
/// True when every consecutive waypoint gap, starting from the origin, is below `gap`.
bool is_standstill_plan(const WaypointPlan& plan, double gap = 0.1);

/// `state` is expressed in the plan frame.
ControlCommand track(const SplineTrajectory& traj, const VehicleState& state, const ControllerConfig& cfg = {});
ControlCommand track(const WaypointPlan& plan, const VehicleState& state, const ControllerConfig& cfg = {});

}  // namespace rondo
