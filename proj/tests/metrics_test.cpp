#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rondo/metrics.hpp"

using namespace rondo;

namespace {

WaypointPlan straight(double speed) {
  WaypointPlan p;
  for (int k = 0; k < kWaypointCount; ++k) p.points[static_cast<std::size_t>(k)] = {speed * kWaypointDt * (k + 1), 0.0};
  return p;
}

}  // namespace

TEST_CASE("consistent plans have zero temporal instability") {
  // constant speed on a circle; every plan is the exact future arc
  const double v = 6.0, R = 40.0;
  PlanLog log;
  for (int i = 0; i < 50; ++i) {
    const double t = 0.1 * i;
    const double a0 = v * t / R;
    const Pose2 pose{{R * std::sin(a0), R - R * std::cos(a0)}, a0};
    PlanLogEntry e;
    e.time = t;
    e.sdv_pose = pose;
    for (int k = 0; k < kWaypointCount; ++k) {
      const double a = v * (t + kWaypointDt * (k + 1)) / R;
      e.plan.points[static_cast<std::size_t>(k)] = pose.to_local(Vec2{R * std::sin(a), R - R * std::cos(a)});
    }
    log.push_back(e);
  }
  const TpiResult r = temporal_plan_instability(log);
  CHECK(r.values.size() == 48);
  for (double x : r.values) CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("instability measures the shift of the horizon point") {
  PlanLog log;
  for (int i = 0; i < 3; ++i) {
    PlanLogEntry e;
    e.time = 0.2 * i;
    e.sdv_pose = Pose2{{5.0 * e.time, 0.0}, 0.0};
    e.plan = straight(5.0);
    if (i == 1)
      for (auto& p : e.plan.points) p.y += 0.7;  // plan 1 is offset sideways
    log.push_back(e);
  }
  const TpiResult r = temporal_plan_instability(log);
  REQUIRE(r.values.size() == 2);
  CHECK(r.values[0] == doctest::Approx(0.7));
  CHECK(r.values[1] == doctest::Approx(0.7));
}

TEST_CASE("inverse TTC is 0 or 1 / (k * 0.2)") {
  const VehicleState sdv{0.0, 0.0, 0.0, 10.0};
  const VehicleDims dims{4.0, 2.0};
  const WaypointPlan plan = straight(10.0);  // waypoint k at 2k metres
  CHECK(waypoints_inverse_ttc(plan, sdv, dims, {}) == 0.0);
  for (int k = 1; k <= kWaypointCount; ++k) {
    // obstacle rear just beyond the SDV front bumper at waypoint k - 1
    const double front_prev = 2.0 * (k - 1) + 2.0;
    const OrientedBox obstacle{{front_prev + 0.5 + 1.0, 0.0}, 0.0, 2.0, 2.0};
    const std::vector<OrientedBox> t{obstacle};
    CAPTURE(k);
    CHECK(waypoints_inverse_ttc(plan, sdv, dims, t) == doctest::Approx(1.0 / (k * 0.2)));
  }
  // a vehicle beside the path is never hit
  const std::vector<OrientedBox> side{{{10.0, 4.0}, 0.0, 4.0, 2.0}};
  CHECK(waypoints_inverse_ttc(plan, sdv, dims, side) == 0.0);
}

TEST_CASE("standstill threshold sits exactly at 0.1 m") {
  WaypointPlan p = straight(0.0);
  CHECK(classify_standstill(p));
  p.points[0] = {0.0999, 0.0};
  CHECK(classify_standstill(p));
  p.points[0] = {0.1, 0.0};
  CHECK_FALSE(classify_standstill(p));
}

TEST_CASE("stopping plans are moving plans that come to rest") {
  WaypointPlan p = straight(5.0);
  CHECK_FALSE(classify_stopping(p));
  for (int k = 8; k < kWaypointCount; ++k) p.points[static_cast<std::size_t>(k)] = p.points[7];
  CHECK(classify_stopping(p));
  CHECK_FALSE(classify_stopping(straight(0.0)));  // standstill, not stopping
}

TEST_CASE("pooled two-proportion test matches a hand computation") {
  // 10/100 against 25/100: pooled 0.175
  const ProportionTest t = proportion_increase_test(10, 100, 25, 100);
  const double se = std::sqrt(0.175 * 0.825 * 0.02);
  CHECK(t.z == doctest::Approx(0.15 / se));
  CHECK(t.p_value == doctest::Approx(0.5 * std::erfc(0.15 / se / std::sqrt(2.0))));
  CHECK(t.p_value < 0.05);
  CHECK(proportion_increase_test(10, 100, 10, 100).p_value == doctest::Approx(0.5));
  CHECK(proportion_increase_test(0, 100, 0, 100).p_value == 1.0);
}

TEST_CASE("episode seeds differ per kind and index and ignore the policy") {
  CHECK(episode_seed(1, ScenarioKind::Yield, 0) != episode_seed(1, ScenarioKind::Yield, 1));
  CHECK(episode_seed(1, ScenarioKind::Yield, 0) != episode_seed(1, ScenarioKind::StopBehind, 0));
  CHECK(episode_seed(1, ScenarioKind::Yield, 3) == episode_seed(1, ScenarioKind::Yield, 3));
}

TEST_CASE("tables render as CSV and aligned text") {
  Table t;
  t.title = "demo";
  t.columns = {"name", "value"};
  t.add_row({"a", "1.000"});
  t.add_row({"long name", "2.500"});
  std::ostringstream csv, txt;
  write_csv(csv, t);
  write_text(txt, t);
  CHECK(csv.str() == "name,value\na,1.000\nlong name,2.500\n");
  std::istringstream lines(txt.str());
  std::string line;
  std::vector<std::size_t> widths;
  while (std::getline(lines, line))
    if (!line.empty() && line != "demo") widths.push_back(line.size());
  REQUIRE(widths.size() >= 3);
  for (std::size_t w : widths) CHECK(w == widths[0]);
}

TEST_CASE("closed-loop rates partition the episodes") {
  std::shared_ptr<const RoadMap> ra = std::make_shared<const RoadMap>(synthesize_roundabout(RoundaboutParams{}));
  std::shared_ptr<const RoadMap> rural =
      std::make_shared<const RoadMap>(synthesize_rural_road(600.0, {0.0, 0.004, -0.003, 0.0}, "rural"));
  const ScenarioMaps maps{ra, rural};
  ClosedLoopOptions o;
  o.episodes = 4;
  o.seed = 3;
  const std::vector<ScenarioKind> kinds{ScenarioKind::StopBehind, ScenarioKind::Yield};
  const PolicyFactory f = [] { return std::make_unique<StraightPolicy>(6.0); };
  const auto par = eval_closed_loop(f, kinds, maps, o);
  o.parallel = false;
  const auto ser = eval_closed_loop(f, kinds, maps, o);
  REQUIRE(par.size() == 2);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].success + par[i].collision + par[i].offroad + par[i].other == par[i].episodes);
    CHECK(par[i].success == ser[i].success);
    CHECK(par[i].collision == ser[i].collision);
    CHECK(par[i].avg_speed == ser[i].avg_speed);
  }
}
