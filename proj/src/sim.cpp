#include "rondo/sim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace rondo {

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::success: return "success";
    case Termination::collision: return "collision";
    case Termination::offroad: return "offroad";
    case Termination::timeout: return "timeout";
    case Termination::infraction: return "infraction";
    case Termination::fault: return "fault";
  }
  return "unknown";
}

bool detect_collision(const Agent& a, const Agent& b) { return boxes_overlap(a.box(), b.box()); }

namespace {

SdvTick sdv_tick(double time, std::span<const Agent> world, const RoadMap& map) {
  const Agent& sdv = world[0];
  SdvTick t;
  t.time = time;
  t.speed = sdv.state.speed;
  t.progress = sdv.progress;
  const RoutePath& rp = sdv.route->path;
  t.lateral = rp.path.project_near(sdv.state.position(), sdv.progress - 1.0, sdv.progress + 1.0).d;
  t.half_lane = 0.5 * map.lane(rp.span_at(sdv.progress).lane_id).width;
  if (const auto leader = find_leader(0, world)) t.gap = leader->gap;
  return t;
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& config, Policy& sdv_policy, const TickHooks& hooks, const SimConfig& sim) {
  const RoadMap& map = *config.map;
  std::vector<Agent> world = config.agents;
  sdv_policy.reset();

  ControllerConfig cc = sim.controller;
  cc.wheelbase = world[0].dims.wheelbase();
  SuccessMonitor monitor(config.criterion);
  EpisodeResult res;
  const int extra_ticks = static_cast<int>(std::lround(sim.extra_time / kTickSeconds));
  const int max_ticks = static_cast<int>(std::lround(config.max_duration / kTickSeconds));

  bool inside = inside_drivable(map, world[0].state.position());
  bool decided = false;
  int end_tick = 0;
  double distance = 0.0;
  std::vector<ControlCommand> cmds(world.size());

  for (int k = 0;; ++k) {
    const double t = k * kTickSeconds;
    res.state_log.push_back(snapshot(t, world));
    res.sdv_log.push_back(sdv_tick(t, world, map));
    const SdvTick& st = res.sdv_log.back();

    if (!decided) {
      const bool now_inside = inside_drivable(map, world[0].state.position());
      if (inside && !now_inside) ++res.offroad_event_count;
      inside = now_inside;
      bool hit = false;
      for (std::size_t i = 1; i < world.size() && !hit; ++i)
        hit = world[i].active && detect_collision(world[0], world[i]);

      if (hit) {
        ++res.collision_count;
        res.termination = Termination::collision;
        decided = true;
      } else if (!now_inside && distance_to_drivable(map, world[0].state.position()) > sim.offroad_limit) {
        res.termination = Termination::offroad;
        decided = true;
      } else if (monitor.observe(st)) {
        const bool clean =
            config.criterion.kind != SuccessCriterion::Kind::go_to_goal || res.offroad_event_count == 0;
        res.termination = clean ? Termination::success : Termination::infraction;
        decided = true;
      } else if (k >= max_ticks) {
        res.termination = Termination::timeout;
        decided = true;
      }
      if (decided) {
        res.duration = t;
        res.distance = distance;
        end_tick = res.termination == Termination::success ? k + extra_ticks : k;
      }
    }
    if (decided && k >= end_tick) {
      if (hooks.on_tick) hooks.on_tick(TickView{t, world, &map, &st, nullptr});
      break;
    }

    const Observation obs{t, &map, world, res.state_log};
    const WaypointPlan plan = sdv_policy.act(obs);
    if (!plan.finite()) {
      if (!decided) {
        res.termination = Termination::fault;
        res.duration = t;
        res.distance = distance;
      }
      if (hooks.on_tick) hooks.on_tick(TickView{t, world, &map, &st, nullptr});
      break;
    }
    res.plan_log.push_back(plan);
    if (hooks.on_tick) hooks.on_tick(TickView{t, world, &map, &st, &res.plan_log.back()});

    // the plan is in the SDV frame, so the tracked state sits at its origin
    cmds[0] = track(plan, VehicleState{0.0, 0.0, 0.0, world[0].state.speed}, cc);
    for (std::size_t i = 1; i < world.size(); ++i)
      cmds[i] = world[i].active ? expert_control(i, world, map, t, sim.traffic) : ControlCommand{};
    for (std::size_t i = 0; i < world.size(); ++i) {
      if (!world[i].active) continue;
      const Vec2 before = world[i].state.position();
      world[i].state = step_bicycle(world[i].state, cmds[i].accel, cmds[i].steer, world[i].dims, kTickSeconds);
      if (i == 0) distance += norm(world[0].state.position() - before);
    }
    for (std::size_t i = 0; i < world.size(); ++i)
      if (world[i].active) update_agent_bookkeeping(i, world, map, sim.traffic.gate);
  }
  res.avg_speed = res.duration > 0.0 ? res.distance / res.duration : 0.0;
  return res;
}

void write_episode_log(std::ostream& os, const EpisodeResult& result) {
  char buf[160];
  for (std::size_t k = 0; k < result.state_log.size(); ++k) {
    for (const AgentSnapshot& a : result.state_log[k].agents) {
      std::snprintf(buf, sizeof(buf), "%zu %d %.6f %.6f %.6f %.6f\n", k, a.id, a.state.x, a.state.y, a.state.heading,
                    a.state.speed);
      os << buf;
    }
  }
}

}  // namespace rondo
