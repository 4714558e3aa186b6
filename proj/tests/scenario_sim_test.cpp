#include <memory>

#include "doctest.h"
#include "rondo/scenario.hpp"
#include "rondo/sim.hpp"

using namespace rondo;

namespace {

std::shared_ptr<const RoadMap> roundabout() {
  static auto m = std::make_shared<const RoadMap>(synthesize_roundabout(RoundaboutParams{}));
  return m;
}
std::shared_ptr<const RoadMap> rural() {
  static auto m = std::make_shared<const RoadMap>(synthesize_rural_road(600.0, {0.0, 0.004, -0.003, 0.0}, "rural"));
  return m;
}
std::shared_ptr<const RoadMap> map_for(ScenarioKind k) { return needs_roundabout(k) ? roundabout() : rural(); }

}  // namespace

TEST_CASE("scenario names round trip") {
  for (const ScenarioKind k : kAllScenarioKinds) CHECK(parse_scenario(scenario_name(k)) == k);
  CHECK_FALSE(parse_scenario("no-such-kind").has_value());
}

TEST_CASE("sampling is a pure function of the seed") {
  for (const ScenarioKind k : kAllScenarioKinds) {
    CAPTURE(scenario_name(k));
    const std::string a = describe(sample_scenario(k, map_for(k), 42));
    CHECK(a == describe(sample_scenario(k, map_for(k), 42)));
    CHECK(a != describe(sample_scenario(k, map_for(k), 43)));
  }
}

TEST_CASE("sampled episodes start without overlapping vehicles") {
  for (const ScenarioKind k : kAllScenarioKinds)
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const EpisodeConfig ep = sample_scenario(k, map_for(k), seed);
      REQUIRE(!ep.agents.empty());
      CHECK(ep.agents[0].role == AgentRole::sdv);
      for (std::size_t i = 0; i < ep.agents.size(); ++i)
        for (std::size_t j = i + 1; j < ep.agents.size(); ++j) {
          CAPTURE(scenario_name(k));
          CAPTURE(seed);
          CHECK_FALSE(boxes_overlap(ep.agents[i].box(), ep.agents[j].box()));
        }
    }
}

TEST_CASE("collision test agrees with footprint overlap") {
  Agent a, b;
  a.state = {0, 0, 0, 0};
  b.state = {4.4, 0, 0, 0};
  CHECK(detect_collision(a, b));
  b.state.x = 4.6;
  CHECK_FALSE(detect_collision(a, b));
  b.state = {2.0, 2.0, kPi / 2, 0};  // rotated, corner reaches into a
  CHECK(detect_collision(a, b) == boxes_overlap(a.box(), b.box()));
}

TEST_CASE("a policy that never moves times out") {
  const EpisodeConfig ep = sample_scenario(ScenarioKind::RandomTraffic, roundabout(), 5);
  StopPolicy stop;
  const EpisodeResult r = run_episode(ep, stop);
  CHECK(r.termination == Termination::timeout);
  // braking at the standstill rate from the initial speed, then parked
  const double v0 = ep.agents[0].state.speed;
  CHECK(r.distance <= v0 * v0 / (2 * 3.0) + v0 * kTickSeconds);
  CHECK(r.state_log.back().agents[0].state.speed == 0.0);
}

TEST_CASE("expert drives a stop-behind episode to success, deterministically") {
  const EpisodeConfig ep = sample_scenario(ScenarioKind::StopBehind, map_for(ScenarioKind::StopBehind), 9);
  ExpertPolicy e1, e2;
  const EpisodeResult a = run_episode(ep, e1);
  const EpisodeResult b = run_episode(ep, e2);
  CHECK(a.termination == Termination::success);
  CHECK(a.collision_count == 0);
  CHECK(a.state_log == b.state_log);
  CHECK(a.plan_log == b.plan_log);
}

TEST_CASE("success criterion bookkeeping") {
  SuccessCriterion c;
  c.kind = SuccessCriterion::Kind::go_to_goal;
  c.goal_s = 50.0;
  std::vector<SdvTick> ticks;
  for (int i = 0; i <= 60; ++i) ticks.push_back({i * 0.1, i * 1.0, 0.0, 2.0, 10.0, std::nullopt});
  CHECK(check_success(c, ticks, 0, 0));
  CHECK_FALSE(check_success(c, ticks, 1, 0));
  ticks.resize(40);
  CHECK_FALSE(check_success(c, ticks, 0, 0));
}
