#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rondo/geom.hpp"
#include "rondo/map.hpp"

using namespace rondo;

TEST_CASE("normalize_angle wraps into (-pi, pi]") {
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(normalize_angle(0.25 + 8 * kPi) == doctest::Approx(0.25));
}

TEST_CASE("pose round trip") {
  const Pose2 p{{3.0, -2.0}, 0.7};
  const Vec2 q{10.0, 4.0};
  const Vec2 back = p.to_world(p.to_local(q));
  CHECK(back.x == doctest::Approx(q.x));
  CHECK(back.y == doctest::Approx(q.y));
  // a point straight ahead of the pose is on the local x axis
  const Vec2 ahead = p.to_local(p.position + unit(0.7) * 5.0);
  CHECK(ahead.x == doctest::Approx(5.0));
  CHECK(ahead.y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("point_in_polygon against the unit-square oracle") {
  const Polygon sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int i = -5; i <= 15; ++i)
    for (int j = -5; j <= 15; ++j) {
      const Vec2 p{i * 0.1 + 0.013, j * 0.1 + 0.017};
      const bool oracle = p.x > 0 && p.x < 1 && p.y > 0 && p.y < 1;
      CHECK(point_in_polygon(sq, p) == oracle);
    }
}

TEST_CASE("projection and point are inverse on a path") {
  Polyline pts;
  for (int i = 0; i <= 40; ++i) {
    const double a = i * 0.05;
    pts.push_back({20.0 * std::cos(a), 20.0 * std::sin(a)});
  }
  const Path path(pts);
  for (double s : {1.0, 7.5, 20.0, 33.0})
    for (double d : {-3.0, 0.0, 2.5}) {
      const Vec2 p = path.point(s, d);
      const Path::Frenet f = path.project(p);
      CHECK(f.s == doctest::Approx(s).epsilon(1e-6));
      CHECK(f.d == doctest::Approx(d).epsilon(1e-6));
    }
}

TEST_CASE("separating-axis overlap matches sampled containment") {
  const OrientedBox a{{0, 0}, 0.3, 4.0, 2.0};
  for (double dx = -6.0; dx <= 6.0; dx += 0.75) {
    const OrientedBox b{{dx, 1.2}, -0.9, 3.0, 1.0};
    // oracle: any sampled point of b inside a, or of a inside b
    bool oracle = false;
    for (int i = 0; i <= 40 && !oracle; ++i)
      for (int j = 0; j <= 40 && !oracle; ++j) {
        const Vec2 pb = Pose2{b.centre, b.heading}.to_world(Vec2{(i / 40.0 - 0.5) * b.length, (j / 40.0 - 0.5) * b.width});
        const Vec2 pa = Pose2{a.centre, a.heading}.to_world(Vec2{(i / 40.0 - 0.5) * a.length, (j / 40.0 - 0.5) * a.width});
        oracle = a.contains(pb) || b.contains(pa);
      }
    CHECK(boxes_overlap(a, b) == oracle);
  }
}

TEST_CASE("default roundabout is connected and routable") {
  const RoadMap map = synthesize_roundabout(RoundaboutParams{});
  REQUIRE(map.is_roundabout());
  CHECK(map.roundabout->arms.size() == 4);
  CHECK(check_connectivity(map));
  for (int from = 0; from < 4; ++from)
    for (int to = 0; to < 4; ++to) {
      const Route r = roundabout_route(map, from, to);
      const RoutePath rp = build_route_path(map, r);
      CHECK(rp.path.length() > 0.0);
      // the goal lies on the exit lane and the whole path is drivable
      for (double s = 0.5; s < rp.goal_s; s += 2.0) CHECK(inside_drivable(map, rp.path.point(s)));
    }
}

TEST_CASE("ring speed class is low and the rural road is high") {
  const RoadMap ra = synthesize_roundabout(RoundaboutParams{});
  const Vec2 on_ring = ra.roundabout->centre + Vec2{ra.roundabout->ring_radius, 0.0};
  CHECK(speed_class_at(ra, on_ring) == SpeedClass::low);
  const RoadMap rural = synthesize_rural_road(400.0, {0.0, 0.003}, "rural");
  CHECK(speed_class_at(rural, rural.lanes[0].path.point(100.0)) == SpeedClass::high);
}

TEST_CASE("map serialization round trip") {
  const RoadMap map = synthesize_roundabout(RoundaboutParams{});
  const std::string text = serialize_map(map);
  CHECK(text.rfind("RONDOMAP1", 0) == 0);
  const RoadMap back = deserialize_map(text);
  CHECK(serialize_map(back) == text);
  CHECK(back.lanes.size() == map.lanes.size());
}

TEST_CASE("corrupt map text reports an error") {
  std::string text = serialize_map(synthesize_rural_road(200.0, {0.0}, "rural"));
  CHECK_THROWS_AS(deserialize_map("RONDOMAP2\n"), MapError);
  text.resize(text.size() / 2);
  CHECK_THROWS_AS(deserialize_map(text), MapError);
}
