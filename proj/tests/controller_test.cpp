#include <cmath>

#include "doctest.h"
#include "rondo/controller.hpp"

using namespace rondo;

namespace {

WaypointPlan plan_from(double (*fx)(double), double (*fy)(double)) {
  WaypointPlan p;
  for (int k = 0; k < kWaypointCount; ++k) {
    const double t = kWaypointDt * (k + 1);
    p.points[static_cast<std::size_t>(k)] = {fx(t), fy(t)};
  }
  return p;
}

}  // namespace

TEST_CASE("spline interpolates its knots") {
  const std::vector<double> t{0.0, 0.5, 1.3, 2.0, 3.1};
  const std::vector<double> y{1.0, -2.0, 0.5, 4.0, 3.0};
  const CubicSpline s(t, y);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(s.value(t[i]) == doctest::Approx(y[i]).epsilon(1e-12));
  // natural end conditions
  CHECK(s.second_derivative(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.second_derivative(3.1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("spline reproduces straight lines exactly") {
  std::vector<double> t, y;
  for (int i = 0; i < 8; ++i) {
    t.push_back(0.3 * i);
    y.push_back(2.0 - 1.5 * 0.3 * i);
  }
  const CubicSpline s(t, y);
  for (double x = 0.0; x <= 2.1; x += 0.05) {
    CHECK(s.value(x) == doctest::Approx(2.0 - 1.5 * x));
    CHECK(s.first_derivative(x) == doctest::Approx(-1.5));
  }
}

TEST_CASE("spline trajectory passes the origin and every waypoint") {
  const WaypointPlan p = plan_from([](double t) { return 6.0 * t + 0.2 * t * t; }, [](double t) { return 0.3 * t * t; });
  const SplineTrajectory tr = fit_spline(p);
  CHECK(tr.position(0.0).x == doctest::Approx(0.0).epsilon(1e-12));
  for (int k = 0; k < kWaypointCount; ++k) {
    const Vec2 q = tr.position(kWaypointDt * (k + 1));
    CHECK(q.x == doctest::Approx(p.points[static_cast<std::size_t>(k)].x).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(p.points[static_cast<std::size_t>(k)].y).epsilon(1e-12));
  }
}

TEST_CASE("standstill plans") {
  WaypointPlan still;  // all zeros
  CHECK(is_standstill_plan(still));
  // creeping off: the first gap is tiny but the plan moves
  const WaypointPlan creep = plan_from([](double t) { return 1.5 * t * t; }, [](double) { return 0.0; });
  CHECK(creep.points[0].x < 0.1);
  CHECK_FALSE(is_standstill_plan(creep));
  WaypointPlan edge;
  for (int k = 0; k < kWaypointCount; ++k) edge.points[static_cast<std::size_t>(k)] = {0.099 * (k + 1), 0.0};
  CHECK(is_standstill_plan(edge));
  edge.points[14].x += 0.002;
  CHECK_FALSE(is_standstill_plan(edge));
}

TEST_CASE("straight plan at matching speed needs no correction") {
  const WaypointPlan p = plan_from([](double t) { return 8.0 * t; }, [](double) { return 0.0; });
  const ControlCommand c = track(p, VehicleState{0.0, 0.0, 0.0, 8.0});
  CHECK(c.steer == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(c.accel == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("standstill plan brakes at the configured rate") {
  const ControlCommand c = track(WaypointPlan{}, VehicleState{0.0, 0.0, 0.0, 5.0});
  CHECK(c.accel == doctest::Approx(-3.0));
}

TEST_CASE("lateral offset steers back towards the plan") {
  const WaypointPlan p = plan_from([](double t) { return 8.0 * t; }, [](double) { return 0.0; });
  CHECK(track(p, VehicleState{0.0, 0.5, 0.0, 8.0}).steer < 0.0);
  CHECK(track(p, VehicleState{0.0, -0.5, 0.0, 8.0}).steer > 0.0);
}

TEST_CASE("plan running backwards brakes instead of holding speed") {
  const WaypointPlan back = plan_from([](double t) { return -1.0 * t; }, [](double) { return 0.0; });
  const ControlCommand c = track(back, VehicleState{0.0, 0.0, 0.0, 1.0});
  CHECK(c.accel == doctest::Approx(2.5 * (-1.0 - 1.0)));
  const WaypointPlan fwd = plan_from([](double t) { return 1.0 * t; }, [](double) { return 0.0; });
  CHECK(track(fwd, VehicleState{0.0, 0.0, 0.0, 1.0}).accel == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("control point behind the vehicle brakes even if the spline turns forward there") {
  WaypointPlan p;
  const double xs[] = {-0.54, -0.63, -0.64, -0.82};
  for (int k = 0; k < kWaypointCount; ++k) p.points[static_cast<std::size_t>(k)] = {k < 4 ? xs[k] : -0.82 - 0.1 * (k - 3), 0.0};
  CHECK(track(p, VehicleState{0.0, 0.0, 0.0, 0.65}).accel < -2.5 * 0.65);
}
