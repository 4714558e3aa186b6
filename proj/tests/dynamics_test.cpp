#include <cmath>

#include "doctest.h"
#include "rondo/dynamics.hpp"
#include "rondo/scenario.hpp"

using namespace rondo;

TEST_CASE("IDM free road and interaction terms") {
  const IdmParams p;
  // free road: a (1 - (v/v0)^4)
  for (double v : {0.0, 5.0, 13.9, 16.0}) CHECK(idm_accel(v, std::nullopt, 0.0, p) == doctest::Approx(2.0 * (1 - std::pow(v / 13.9, 4))));
  // with leader, written out by hand
  const double v = 10.0, vl = 6.0, s = 25.0;
  const double s_star = 2.0 + v * 1.5 + v * (v - vl) / (2 * std::sqrt(2.0 * 3.0));
  const double oracle = 2.0 * (1 - std::pow(v / 13.9, 4) - (s_star / s) * (s_star / s));
  CHECK(idm_accel(v, s, vl, p) == doctest::Approx(oracle));
  CHECK(idm_accel(v, 0.0, vl, p) == -p.b_emergency);
  // standing behind a standing leader at exactly s0: a (1 - 1) = 0
  CHECK(idm_accel(0.0, p.s0, 0.0, p) == doctest::Approx(0.0));
}

TEST_CASE("bicycle step matches fine Euler integration") {
  const VehicleDims dims{4.5, 1.9};
  const VehicleState s0{1.0, 2.0, 0.4, 8.0};
  for (double steer : {0.0, 0.1, -0.3})
    for (double accel : {0.0, 1.5, -2.0}) {
      const VehicleState exact = step_bicycle(s0, accel, steer, dims, 0.1);
      VehicleState e = s0;
      const int n = 20000;
      const double h = 0.1 / n;
      for (int i = 0; i < n; ++i) {
        const double vm = e.speed + 0.5 * accel * h;
        e.x += vm * std::cos(e.heading) * h;
        e.y += vm * std::sin(e.heading) * h;
        e.heading += vm * std::tan(steer) / dims.wheelbase() * h;
        e.speed += accel * h;
      }
      CHECK(exact.x == doctest::Approx(e.x).epsilon(1e-6));
      CHECK(exact.y == doctest::Approx(e.y).epsilon(1e-6));
      CHECK(exact.heading == doctest::Approx(e.heading).epsilon(1e-6));
      CHECK(exact.speed == doctest::Approx(e.speed).epsilon(1e-9));
    }
}

TEST_CASE("braking stops without reversing") {
  const VehicleState s{0.0, 0.0, 0.0, 0.3};
  const VehicleState n = step_bicycle(s, -6.0, 0.0, {}, 0.1);
  CHECK(n.speed == 0.0);
  // stops after 0.05 s having covered v^2 / 2a
  CHECK(n.x == doctest::Approx(0.3 * 0.3 / 12.0));
}

TEST_CASE("steering is clamped to 45 degrees") {
  const VehicleState s{0.0, 0.0, 0.0, 5.0};
  CHECK(step_bicycle(s, 0.0, 2.0, {}, 0.1) == step_bicycle(s, 0.0, kMaxSteer, {}, 0.1));
}

namespace {

Agent on_route(const RoadMap& map, const Route& r, double s, double speed, int id) {
  Agent a;
  a.id = id;
  a.route = make_route_data(map, r);
  a.state.speed = speed;
  place_on_route(a, s);
  return a;
}

}  // namespace

TEST_CASE("conflict gate yields only to near ring traffic") {
  const RoadMap map = synthesize_roundabout(RoundaboutParams{});
  const ArmInfo& arm0 = map.roundabout->arms[0];
  const Route entering = roundabout_route(map, 0, 2);
  Agent ego = on_route(map, entering, arm0.yield_s - 5.0, 3.0, 0);
  ego.role = AgentRole::sdv;

  std::vector<Agent> world{ego};
  CHECK(conflict_gate(0, world, map) == GateDecision::proceed);

  // a ring vehicle from the previous arm, just upstream of arm 0's merge point
  const int prev = static_cast<int>(map.roundabout->arms.size()) - 1;
  const Route ring_route = roundabout_route(map, prev, 1);
  const RoutePath rp = build_route_path(map, ring_route);
  const auto merge_path_s = rp.path_s_of(map.roundabout->ring_lane, arm0.merge_s);
  REQUIRE(merge_path_s.has_value());
  for (const auto& [dist, expect] : {std::pair{6.0, GateDecision::yield}, std::pair{40.0, GateDecision::proceed}}) {
    std::vector<Agent> w{ego, on_route(map, ring_route, *merge_path_s - dist, 6.0, 1)};
    update_agent_bookkeeping(1, w, map, {});
    const std::optional<double> ttc = time_to_conflict(w[1], arm0, map);
    CAPTURE(dist);
    if (expect == GateDecision::yield) {
      REQUIRE(ttc.has_value());
      CHECK(*ttc < 3.0);
    }
    CHECK(conflict_gate(0, w, map) == expect);
  }
}

TEST_CASE("leader detection picks the nearest vehicle ahead in lane") {
  const RoadMap map = synthesize_rural_road(400.0, {0.0}, "rural");
  const Route r{{0}, 350.0, 0.0};
  std::vector<Agent> w{on_route(map, r, 50.0, 10.0, 0), on_route(map, r, 90.0, 5.0, 1), on_route(map, r, 70.0, 4.0, 2),
                       on_route(map, r, 20.0, 4.0, 3)};
  const auto lead = find_leader(0, w);
  REQUIRE(lead.has_value());
  // bumper gap: 20 m between centres minus two half lengths
  CHECK(lead->gap == doctest::Approx(20.0 - 4.5).epsilon(1e-6));
  CHECK(lead->speed == 4.0);
}
