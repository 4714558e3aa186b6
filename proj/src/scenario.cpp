#include "rondo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rondo/augment.hpp"
#include "rondo/rng.hpp"

namespace rondo {

namespace {

struct KindName {
  ScenarioKind kind;
  std::string_view name;
};
constexpr KindName kNames[] = {
    {ScenarioKind::SlowDownBehind, "slow-down-behind"},
    {ScenarioKind::IncreaseGap, "increase-gap"},
    {ScenarioKind::StopBehind, "stop-behind"},
    {ScenarioKind::DriveoffStop, "driveoff-stop"},
    {ScenarioKind::Yield, "yield"},
    {ScenarioKind::YieldWithLead, "yield-with-lead"},
    {ScenarioKind::RandomTraffic, "random-traffic"},
    {ScenarioKind::HighSpeedRural, "high-speed-rural"},
    {ScenarioKind::RandomWithParkedCars, "random-with-parked-cars"},
    {ScenarioKind::ChallengingStopping, "challenging-stopping"},
};

constexpr int kSpawnAttempts = 40;

/// Builder state shared by the per-kind samplers.
struct Builder {
  const RoadMap& map;
  const ScenarioParams& params;
  Rng rng;
  EpisodeConfig cfg;

  Agent& sdv() { return cfg.agents.front(); }

  VehicleDims traffic_dims() {
    Agent a;
    a.role = AgentRole::traffic;
    if (params.sample_dims) {
      AugmentConfig ac;
      ac.dims_length_lo = params.dims_length_lo;
      ac.dims_length_hi = params.dims_length_hi;
      ac.dims_width_lo = params.dims_width_lo;
      ac.dims_width_hi = params.dims_width_hi;
      a = aug_dims(a, rng, ac);
    }
    return a.dims;
  }

  Agent traffic(std::shared_ptr<const RouteData> route, double s, double speed, double set_speed) {
    Agent a;
    a.id = static_cast<int>(cfg.agents.size());
    a.role = AgentRole::traffic;
    a.dims = traffic_dims();
    a.route = std::move(route);
    a.idm.v0 = set_speed;
    a.state.speed = speed;
    place_on_route(a, s);
    return a;
  }

  int random_arm() { return rng.uniform_int(0, static_cast<int>(map.roundabout->arms.size()) - 1); }
  int other_arm(int a) {
    const int n = static_cast<int>(map.roundabout->arms.size());
    return (a + rng.uniform_int(1, n - 1)) % n;
  }

  std::shared_ptr<const RouteData> arm_route(int from, int to, double goal = 1e9) {
    Route r = roundabout_route(map, from, to, goal);
    return make_route_data(map, r);
  }

  /// SDV entering from a random arm toward a random goal on another arm's exit.
  void roundabout_sdv(double s_lo, double s_hi, double v_lo, double v_hi) {
    const int from = random_arm(), to = other_arm(from);
    const double goal = rng.uniform(params.goal_lo, params.goal_hi);
    make_sdv(make_route_data(map, roundabout_route(map, from, to, goal)), rng.uniform(s_lo, s_hi),
             rng.uniform(v_lo, v_hi), speed_limit_mps(SpeedClass::mid));
  }

  void make_sdv(std::shared_ptr<const RouteData> route, double s, double speed, double set_speed) {
    Agent a;
    a.id = 0;
    a.role = AgentRole::sdv;
    a.dims = {params.sdv_length, params.sdv_width};
    a.route = std::move(route);
    a.idm.v0 = set_speed;
    a.idm.T = params.sdv_headway;
    a.state.speed = speed;
    place_on_route(a, s);
    cfg.agents.assign(1, a);
    cfg.criterion.kind = SuccessCriterion::Kind::go_to_goal;
    cfg.criterion.goal_s = a.route->path.goal_s;
  }

  double desired_gap(double v) const { return params.criterion_s0 + v * params.criterion_T; }

  /// Vehicle on the SDV's entry lane, `gap` metres (bumper to bumper) ahead.
  Agent& lead_on_entry(double gap, double speed, double set_speed) {
    const Agent& s = sdv();
    const int from = s.route->entry_arm;
    auto route = arm_route(from, random_arm());
    const double sdv_s = s.progress;
    const double sdv_half = 0.5 * s.dims.length;
    Agent lead = traffic(route, 0.0, speed, set_speed);
    place_on_route(lead, sdv_s + sdv_half + gap + 0.5 * lead.dims.length);
    cfg.agents.push_back(lead);
    return cfg.agents.back();
  }

  Agent& obstacle_ahead(double gap, double lateral = 0.0, double yaw = 0.0) {
    const Agent& s = sdv();
    Agent a = traffic(s.route, 0.0, 0.0, 0.0);
    a.behaviour = Behaviour::parked;
    place_on_route(a, s.progress + 0.5 * s.dims.length + gap + 0.5 * a.dims.length, lateral);
    a.state.heading = normalize_angle(a.state.heading + yaw);
    cfg.agents.push_back(a);
    return cfg.agents.back();
  }

  /// Ring vehicles arriving at the conflict point of `arm` around `t_arrive`.
  void ring_traffic(int arm_index, double t_arrive, int count) {
    const RoundaboutInfo& info = *map.roundabout;
    const ArmInfo& arm = info.arms[static_cast<std::size_t>(arm_index)];
    const Lane& ring = map.lane(info.ring_lane);
    const double ring_len = ring.path.length();
    const double ring_limit = speed_limit_mps(ring.limit_class);
    for (int k = 0; k < count; ++k) {
      for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
        const double v = rng.uniform(3.5, 5.4);
        const double t = t_arrive + rng.uniform(-3.0, 4.0);
        const double dist = std::clamp(t * v, -20.0, ring_len - 25.0);
        const double start = ring.path.wrap(arm.merge_s - dist);
        // exits reached after the conflict point
        std::vector<int> exits;
        for (std::size_t j = 0; j < info.arms.size(); ++j) {
          const double to_exit = ring.path.wrap(info.arms[j].diverge_s - start);
          const double to_merge = ring.path.wrap(arm.merge_s - start);
          if (dist < 0.0 || to_exit > to_merge + 3.0) exits.push_back(static_cast<int>(j));
        }
        if (exits.empty()) continue;
        const int exit = exits[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(exits.size()) - 1))];
        Route r{{info.ring_lane, info.arms[static_cast<std::size_t>(exit)].exit_lane}, 0.0, start};
        Agent a = traffic(make_route_data(map, r), 0.0, v, ring_limit * rng.uniform(params.traffic_speed_lo, 1.0));
        if (try_add(a)) break;
      }
    }
  }

  /// Random traffic anywhere on the roundabout.
  void random_roundabout_traffic(int count) {
    const RoundaboutInfo& info = *map.roundabout;
    const Lane& ring = map.lane(info.ring_lane);
    for (int k = 0; k < count; ++k) {
      for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
        const double u = rng.uniform();
        const double factor = rng.uniform(params.traffic_speed_lo, params.traffic_speed_hi);
        Agent a;
        if (u < 0.4) {
          const double start = rng.uniform(0.0, ring.path.length());
          Route r{{info.ring_lane, info.arms[static_cast<std::size_t>(random_arm())].exit_lane}, 0.0, start};
          auto rd = make_route_data(map, r);
          a = traffic(rd, 0.0, 0.0, speed_limit_mps(SpeedClass::low) * factor);
          a.state.speed = std::min(rd->limit_at(0.0), a.idm.v0) * rng.uniform(0.7, 1.0);
        } else if (u < 0.8) {
          const int from = random_arm();
          auto rd = arm_route(from, other_arm(from));
          const double s = rng.uniform(0.0, std::max(1.0, *rd->yield_line_s - 30.0));
          a = traffic(rd, s, 0.0, speed_limit_mps(SpeedClass::mid) * factor);
          a.state.speed = std::min(rd->limit_at(s), a.idm.v0) * rng.uniform(0.6, 1.0);
        } else {
          const ArmInfo& arm = info.arms[static_cast<std::size_t>(random_arm())];
          auto rd = make_route_data(map, Route{{arm.exit_lane}, 1e9, 0.0});
          const double s = rng.uniform(5.0, std::max(6.0, rd->path.path.length() - 20.0));
          a = traffic(rd, s, 0.0, speed_limit_mps(SpeedClass::mid) * factor);
          a.state.speed = std::min(rd->limit_at(s), a.idm.v0) * rng.uniform(0.7, 1.0);
        }
        if (try_add(a)) break;
      }
    }
  }

  bool try_add(Agent a) {
    a.id = static_cast<int>(cfg.agents.size());
    if (!spawn_is_clear(cfg.agents, a, 1.0)) return false;
    for (const Agent& other : cfg.agents) {
      if (!spacing_ok(a, other) || !spacing_ok(other, a)) return false;
    }
    cfg.agents.push_back(std::move(a));
    return true;
  }

  /// `follower` must not start inside its IDM safe gap to `leader`.
  static bool spacing_ok(const Agent& follower, const Agent& leader) {
    if (!follower.route) return true;
    const Path& path = follower.route->path.path;
    const Path::Frenet f = path.project_near(leader.state.position(), follower.progress - 1.0, follower.progress + 60.0);
    if (!f.inside || std::abs(f.d) > 3.0) return true;
    const double ds = f.s - follower.progress;
    if (ds <= 0.0) return true;
    const double gap = ds - 0.5 * (follower.dims.length + leader.dims.length);
    const double v = follower.state.speed;
    const double dv = std::max(0.0, v - leader.state.speed);
    return gap > 2.0 + 1.5 * v + dv * dv / 6.0;
  }
};

void sample_high_speed(Builder& b) {
  const RoadMap& map = b.map;
  const double limit = speed_limit_mps(SpeedClass::high);
  const double len = map.lane(0).path.length();
  const double start = b.rng.uniform(10.0, 30.0);
  const double goal = std::min(len - 20.0, start + b.rng.uniform(200.0, 300.0));
  b.make_sdv(make_route_data(map, Route{{0}, goal, 0.0}), start, b.rng.uniform(14.0, 19.0), limit);
  const auto same = b.sdv().route;
  const auto oncoming = make_route_data(map, Route{{1}, 1e9, 0.0});
  const int leads = b.rng.uniform_int(0, 2), others = b.rng.uniform_int(0, 3);
  for (int k = 0; k < leads; ++k) {
    for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
      const double s = start + b.rng.uniform(50.0, 220.0);
      if (s > len - 30.0) continue;
      const double v = limit * b.rng.uniform(0.55, 0.85);
      if (b.try_add(b.traffic(same, s, v, v))) break;
    }
  }
  for (int k = 0; k < others; ++k) {
    for (int attempt = 0; attempt < kSpawnAttempts; ++attempt) {
      const double s = b.rng.uniform(0.0, len - 30.0);
      const double v = limit * b.rng.uniform(0.7, 1.0);
      if (b.try_add(b.traffic(oncoming, s, v, v))) break;
    }
  }
}

double arrival_time(const Agent& a) {
  const double dist = *a.route->yield_line_s - (a.progress + 0.5 * a.dims.length);
  return std::max(0.0, dist) / std::max(3.0, 0.5 * (a.state.speed + speed_limit_mps(SpeedClass::low)));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  for (const auto& kn : kNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario(std::string_view name) {
  for (const auto& kn : kNames)
    if (kn.name == name) return kn.kind;
  return std::nullopt;
}

bool needs_roundabout(ScenarioKind kind) { return kind != ScenarioKind::HighSpeedRural; }

std::string_view criterion_name(SuccessCriterion::Kind kind) {
  switch (kind) {
    case SuccessCriterion::Kind::go_to_goal: return "go-to-goal";
    case SuccessCriterion::Kind::stop_in_lane: return "stop-in-lane";
    case SuccessCriterion::Kind::increase_gap_restored: return "increase-gap-restored";
  }
  return "unknown";
}

bool SuccessMonitor::observe(const SdvTick& tick) {
  if (done_) return true;
  if (tick.time < c_.not_before - 1e-9) return false;
  switch (c_.kind) {
    case SuccessCriterion::Kind::go_to_goal:
      done_ = tick.progress >= c_.goal_s;
      break;
    case SuccessCriterion::Kind::stop_in_lane:
      if (!ref_progress_) ref_progress_ = tick.progress;
      done_ = tick.speed < 0.1 && std::abs(tick.lateral) < tick.half_lane &&
              tick.progress - *ref_progress_ >= c_.min_progress_gain;
      break;
    case SuccessCriterion::Kind::increase_gap_restored: {
      const bool safe = !tick.gap || *tick.gap >= c_.s0 + tick.speed * c_.T;
      if (!safe) {
        streak_start_.reset();
        break;
      }
      if (!streak_start_) streak_start_ = tick.time;
      done_ = tick.time - *streak_start_ >= c_.hold_time - 1e-9;
      break;
    }
  }
  return done_;
}

bool check_success(const SuccessCriterion& criterion, std::span<const SdvTick> ticks, int collision_count,
                   int offroad_event_count) {
  if (collision_count > 0) return false;
  if (criterion.kind == SuccessCriterion::Kind::go_to_goal && offroad_event_count > 0) return false;
  SuccessMonitor monitor(criterion);
  for (const SdvTick& t : ticks)
    if (monitor.observe(t)) return true;
  return false;
}

void place_on_route(Agent& agent, double s, double lateral) {
  const Path& path = agent.route->path.path;
  s = std::clamp(s, 0.0, path.length());
  const Vec2 p = path.point(s, lateral);
  agent.state.x = p.x;
  agent.state.y = p.y;
  agent.state.heading = path.heading(s);
  agent.progress = s;
}

bool spawn_is_clear(std::span<const Agent> agents, const Agent& candidate, double margin) {
  OrientedBox c = candidate.box();
  c.length += 2.0 * margin;
  c.width += 2.0 * margin;
  for (const Agent& a : agents)
    if (boxes_overlap(c, a.box())) return false;
  return true;
}

EpisodeConfig sample_scenario(ScenarioKind kind, std::shared_ptr<const RoadMap> map, std::uint64_t seed,
                              const ScenarioParams& params) {
  if (!map) throw ScenarioError("scenario needs a map");
  if (needs_roundabout(kind) && !map->is_roundabout())
    throw ScenarioError(std::string(scenario_name(kind)) + " needs a roundabout map");
  if (!needs_roundabout(kind) && (map->is_roundabout() || map->lanes.size() < 2))
    throw ScenarioError(std::string(scenario_name(kind)) + " needs a two-lane road map");

  Builder b{*map, params, Rng(derive_seed(seed, scenario_name(kind))), {}};
  b.cfg.kind = kind;
  b.cfg.map = map;
  b.cfg.seed = seed;
  b.cfg.max_duration = params.max_duration;

  using K = SuccessCriterion::Kind;
  const double mid = speed_limit_mps(SpeedClass::mid);
  switch (kind) {
    case ScenarioKind::SlowDownBehind: {
      b.roundabout_sdv(0.0, 10.0, 6.0, 9.0);
      const double v = b.sdv().state.speed;
      const double lead_v = b.rng.uniform(2.0, 4.0);
      b.lead_on_entry(b.desired_gap(v) * b.rng.uniform(1.0, 1.5), lead_v, lead_v);
      b.cfg.criterion.kind = K::increase_gap_restored;
      b.cfg.criterion.not_before = 3.0;
      break;
    }
    case ScenarioKind::IncreaseGap: {
      b.roundabout_sdv(0.0, 10.0, 6.0, 9.0);
      const double v = b.sdv().state.speed;
      const double lead_v = v - b.rng.uniform(1.0, 3.0);
      b.lead_on_entry(b.desired_gap(v) * b.rng.uniform(0.35, 0.7), lead_v, lead_v);
      b.cfg.criterion.kind = K::increase_gap_restored;
      break;
    }
    case ScenarioKind::StopBehind: {
      b.roundabout_sdv(0.0, 10.0, 5.0, 9.0);
      b.obstacle_ahead(b.rng.uniform(25.0, 50.0));
      b.cfg.criterion.kind = K::stop_in_lane;
      break;
    }
    case ScenarioKind::DriveoffStop: {
      b.roundabout_sdv(15.0, 30.0, 0.0, 0.0);
      Agent& lead = b.lead_on_entry(b.rng.uniform(2.0, 2.5), 0.0, mid);
      lead.behaviour = Behaviour::driveoff_stop;
      lead.driveoff.hold_until = b.rng.uniform(3.0, 6.0);
      lead.driveoff.stop_s = lead.progress + 0.5 * lead.dims.length + b.rng.uniform(3.0, 8.0);
      b.cfg.criterion.kind = K::stop_in_lane;
      b.cfg.criterion.not_before = lead.driveoff.hold_until;
      b.cfg.criterion.min_progress_gain = 1.0;
      break;
    }
    case ScenarioKind::Yield: {
      b.roundabout_sdv(0.0, 15.0, 5.0, 9.0);
      b.ring_traffic(b.sdv().route->entry_arm, arrival_time(b.sdv()), b.rng.uniform_int(1, 3));
      break;
    }
    case ScenarioKind::YieldWithLead: {
      b.roundabout_sdv(0.0, 10.0, 5.0, 9.0);
      const double v = b.sdv().state.speed;
      const double lead_v = v * b.rng.uniform(0.8, 1.0);
      Agent& lead = b.lead_on_entry(b.desired_gap(v) * b.rng.uniform(1.0, 1.5), lead_v, mid);
      const double t = arrival_time(lead);
      b.ring_traffic(b.sdv().route->entry_arm, t, b.rng.uniform_int(1, 3));
      break;
    }
    case ScenarioKind::RandomTraffic:
    case ScenarioKind::RandomWithParkedCars: {
      b.roundabout_sdv(0.0, 15.0, 5.0, 9.0);
      b.random_roundabout_traffic(b.rng.uniform_int(0, params.random_traffic_max));
      if (kind == ScenarioKind::RandomWithParkedCars) {
        AugmentConfig ac;
        ac.dims_length_lo = params.dims_length_lo;
        ac.dims_length_hi = params.dims_length_hi;
        ac.dims_width_lo = params.dims_width_lo;
        ac.dims_width_hi = params.dims_width_hi;
        ac.offroad_distance_lo = params.offroad_distance_lo;
        ac.offroad_distance_hi = params.offroad_distance_hi;
        const int n = b.rng.uniform_int(params.parked_lo, params.parked_hi);
        b.cfg = aug_offroad_vehicles(std::move(b.cfg), b.rng, n, ac);
      }
      break;
    }
    case ScenarioKind::HighSpeedRural:
      sample_high_speed(b);
      break;
    case ScenarioKind::ChallengingStopping: {
      b.roundabout_sdv(0.0, 10.0, 9.0, 12.0);
      b.obstacle_ahead(b.rng.uniform(22.0, 40.0), b.rng.uniform(-0.6, 0.6), b.rng.uniform(-0.15, 0.15));
      b.cfg.criterion.kind = K::stop_in_lane;
      break;
    }
  }
  b.cfg.criterion.s0 = params.criterion_s0;
  b.cfg.criterion.T = params.criterion_T;
  b.cfg.criterion.hold_time = params.criterion_hold;
  for (std::size_t i = 0; i < b.cfg.agents.size(); ++i) b.cfg.agents[i].id = static_cast<int>(i);
  return std::move(b.cfg);
}

std::string describe(const EpisodeConfig& config) {
  std::ostringstream os;
  os << "scenario " << scenario_name(config.kind) << " seed " << config.seed << " map "
     << (config.map ? config.map->id : "-") << " max_duration " << fmt(config.max_duration) << '\n';
  const SuccessCriterion& c = config.criterion;
  os << "criterion " << criterion_name(c.kind) << ' ' << fmt(c.goal_s) << ' ' << fmt(c.not_before) << ' '
     << fmt(c.min_progress_gain) << ' ' << fmt(c.hold_time) << ' ' << fmt(c.s0) << ' ' << fmt(c.T) << '\n';
  for (const Agent& a : config.agents) {
    os << "agent " << a.id << ' ' << (a.role == AgentRole::sdv ? "sdv" : "traffic") << ' '
       << static_cast<int>(a.behaviour) << ' ' << fmt(a.state.x) << ' ' << fmt(a.state.y) << ' '
       << fmt(a.state.heading) << ' ' << fmt(a.state.speed) << ' ' << fmt(a.dims.length) << ' '
       << fmt(a.dims.width) << ' ' << fmt(a.idm.v0) << ' ' << fmt(a.idm.T) << ' ' << fmt(a.driveoff.hold_until)
       << ' ' << fmt(a.driveoff.stop_s) << " route";
    if (a.route) {
      for (const int l : a.route->route.lane_sequence) os << ' ' << l;
      os << " goal " << fmt(a.route->route.goal_s) << " start " << fmt(a.route->route.start_s);
    } else {
      os << " none";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace rondo
