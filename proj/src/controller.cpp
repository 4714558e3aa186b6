#include "rondo/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace rondo {

CubicSpline::CubicSpline(std::vector<double> knots, std::vector<double> values) : t_(std::move(knots)), y_(std::move(values)) {
  const std::size_t n = t_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs matching knots and values, n >= 2");
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Thomas algorithm for the natural-boundary tridiagonal system.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1], h1 = t_[i + 1] - t_[i];
    const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m_[i] = d[i] - c[i] * m_[i + 1];
    if (i == 1) break;
  }
}

std::size_t CubicSpline::interval(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(t_.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, t_.size() - 2);
}

double CubicSpline::value(double t) const {
  const std::size_t i = interval(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::first_derivative(double t) const {
  const std::size_t i = interval(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
  return (y_[i + 1] - y_[i]) / h + ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

double CubicSpline::second_derivative(double t) const {
  const std::size_t i = interval(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h, b = (t - t_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

double SplineTrajectory::heading(double t) const {
  constexpr double kMovingSpeed = 1e-3;
  for (double tt = t; tt >= 0.0; tt -= 0.05) {
    const Vec2 v = velocity(tt);
    if (norm(v) > kMovingSpeed) return std::atan2(v.y, v.x);
  }
  return 0.0;
}

double SplineTrajectory::curvature(double t) const {
  const Vec2 v = velocity(t);
  const Vec2 a{x_.second_derivative(t), y_.second_derivative(t)};
  const double sp = norm(v);
  if (sp < 1e-6) return 0.0;
  return cross(v, a) / (sp * sp * sp);
}

SplineTrajectory fit_spline(const WaypointPlan& plan) {
  std::vector<double> t(kWaypointCount + 1), x(kWaypointCount + 1), y(kWaypointCount + 1);
  for (int k = 0; k < kWaypointCount; ++k) {
    t[static_cast<std::size_t>(k + 1)] = kWaypointDt * (k + 1);
    x[static_cast<std::size_t>(k + 1)] = plan.points[static_cast<std::size_t>(k)].x;
    y[static_cast<std::size_t>(k + 1)] = plan.points[static_cast<std::size_t>(k)].y;
  }
  CubicSpline sx(t, x);
  return SplineTrajectory(std::move(sx), CubicSpline(std::move(t), std::move(y)));
}

bool is_standstill_plan(const WaypointPlan& plan, double gap) {
  Vec2 prev{};
  for (const Vec2 p : plan.points) {
    if (norm(p - prev) >= gap) return false;
    prev = p;
  }
  return true;
}

ControlCommand track(const SplineTrajectory& traj, const VehicleState& state, const ControllerConfig& cfg) {
  ControlCommand cmd;
  const Pose2 pose = state.pose();
  double t_target = cfg.control_time;
  Vec2 local = pose.to_local(traj.position(t_target));
  // a plan that runs backwards, or whose control point is behind us, asks for a
  // negative speed; we cannot reverse, so that means brake
  const Vec2 vel = traj.velocity(cfg.control_time);
  const bool backwards = local.x < 0.0 || dot(vel, rotate(Vec2{1.0, 0.0}, pose.heading)) < 0.0;
  cmd.accel = cfg.speed_gain * ((backwards ? -norm(vel) : norm(vel)) - state.speed);

  while (norm(local) < cfg.min_target_distance && t_target < kPlanHorizon) {
    t_target = std::min(kPlanHorizon, t_target + 0.1);
    local = pose.to_local(traj.position(t_target));
  }
  const double dist2 = dot(local, local);
  if (dist2 >= cfg.min_target_distance * cfg.min_target_distance && local.x > 0.0) {
    // proportional in the lateral offset of the target point (pure-pursuit gain)
    const double curvature = 2.0 * local.y / dist2;
    const double heading_error = normalize_angle(traj.heading(cfg.control_time) - state.heading);
    cmd.steer = std::atan(cfg.wheelbase * curvature) + cfg.heading_gain * heading_error;
  }
  cmd.accel = std::clamp(cmd.accel, -kMaxDecel, kMaxAccel);
  cmd.steer = std::clamp(cmd.steer, -kMaxSteer, kMaxSteer);
  return cmd;
}

ControlCommand track(const WaypointPlan& plan, const VehicleState& state, const ControllerConfig& cfg) {
  if (is_standstill_plan(plan, cfg.standstill_gap)) return {-cfg.standstill_decel, 0.0};
  return track(fit_spline(plan), state, cfg);
}

}  // namespace rondo
