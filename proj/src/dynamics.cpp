#include "rondo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rondo {

OrientedBox footprint(const VehicleState& s, const VehicleDims& d) {
  return OrientedBox{{s.x, s.y}, s.heading, d.length, d.width};
}

VehicleState step_bicycle(const VehicleState& state, double accel, double steer, const VehicleDims& dims, double dt) {
  steer = std::clamp(steer, -kMaxSteer, kMaxSteer);
  double moving_time = dt;
  double v_end = state.speed + accel * dt;
  if (v_end < 0.0) {
    moving_time = accel < 0.0 ? state.speed / -accel : 0.0;
    v_end = 0.0;
  }
  const double ds = state.speed * moving_time + 0.5 * accel * moving_time * moving_time;
  const double curvature = std::tan(steer) / dims.wheelbase();
  const double dpsi = ds * curvature;

  VehicleState out = state;
  if (std::abs(dpsi) > 1e-12) {
    const double r = 1.0 / curvature;
    out.x += r * (std::sin(state.heading + dpsi) - std::sin(state.heading));
    out.y += r * (std::cos(state.heading) - std::cos(state.heading + dpsi));
  } else {
    out.x += ds * std::cos(state.heading);
    out.y += ds * std::sin(state.heading);
  }
  out.heading = normalize_angle(state.heading + dpsi);
  out.speed = accel == 0.0 ? state.speed : v_end;
  return out;
}

double idm_accel(double v, std::optional<double> leader_gap, double leader_speed, const IdmParams& p) {
  const double free_term = std::pow(v / p.v0, p.delta);
  if (!leader_gap) return p.a_max * (1.0 - free_term);
  const double s = *leader_gap;
  if (s <= 0.0) return -p.b_emergency;
  const double dv = v - leader_speed;
  const double s_star = p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf)));
  return p.a_max * (1.0 - free_term - (s_star / s) * (s_star / s));
}

// ---------------------------------------------------------------------------

double RouteData::limit_at(double path_s) const {
  if (speed_limit.empty()) return 1e9;
  const auto i = static_cast<std::size_t>(std::clamp(path_s, 0.0, static_cast<double>(speed_limit.size() - 1)));
  return speed_limit[i];
}

std::shared_ptr<const RouteData> make_route_data(const RoadMap& map, const Route& route) {
  auto data = std::make_shared<RouteData>();
  data->route = route;
  data->path = build_route_path(map, route);
  const Path& path = data->path.path;
  const double len = path.length();

  for (const int lane_id : route.lane_sequence) {
    const Lane& lane = map.lane(lane_id);
    if (lane.kind == LaneKind::entry) data->entry_arm = lane.arm;
    if (lane.kind == LaneKind::exit) data->exit_arm = lane.arm;
  }
  if (map.roundabout && data->entry_arm >= 0) {
    const ArmInfo& arm = map.roundabout->arms[static_cast<std::size_t>(data->entry_arm)];
    data->yield_line_s = data->path.path_s_of(arm.entry_lane, arm.yield_s);
  }
  if (map.roundabout && data->exit_arm >= 0) {
    data->ring_exit_s = map.roundabout->arms[static_cast<std::size_t>(data->exit_arm)].diverge_s;
  }

  const int samples = static_cast<int>(std::floor(len)) + 1;
  data->speed_limit.resize(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double s = i;
    const Vec2 p = path.point(s);
    const auto& span = data->path.span_at(s);
    const SpeedClass cls = speed_class_at(map, p).value_or(map.lane(span.lane_id).limit_class);
    double limit = speed_limit_mps(cls);
    const double h0 = path.heading(std::max(0.0, s - 2.0)), h1 = path.heading(std::min(len, s + 2.0));
    const double arc = std::min(len, s + 2.0) - std::max(0.0, s - 2.0);
    if (arc > 0.5) {
      const double kappa = std::abs(normalize_angle(h1 - h0)) / arc;
      if (kappa > 1e-6) limit = std::min(limit, std::sqrt(kExpertLateralAccel / kappa));
    }
    data->speed_limit[static_cast<std::size_t>(i)] = limit;
  }
  return data;
}

double route_progress(const Agent& agent) {
  const Path& path = agent.route->path.path;
  const Path::Frenet f = path.project_near(agent.state.position(), agent.progress - 6.0, agent.progress + 16.0);
  return f.s;
}

double effective_desired_speed(const Agent& agent) {
  double v0 = agent.idm.v0;
  const RouteData& rd = *agent.route;
  const double v = agent.state.speed;
  const double horizon = v * v / agent.idm.b_comf + 20.0;
  const double decel = 0.5 * agent.idm.b_comf;
  for (double ds = 0.0; ds <= horizon; ds += 1.0) {
    const double limit = rd.limit_at(agent.progress + ds);
    const double relaxed = std::sqrt(limit * limit + 2.0 * decel * std::max(0.0, ds - 0.5 * agent.dims.length));
    v0 = std::min(v0, relaxed);
  }
  return std::max(v0, 0.5);
}

// ---------------------------------------------------------------------------

std::optional<double> time_to_conflict(const Agent& other, const ArmInfo& arm, const RoadMap& map) {
  if (!other.active || !map.roundabout) return std::nullopt;
  const Lane& ring = map.lane(map.roundabout->ring_lane);
  const Path::Frenet f = ring.path.project(other.state.position());
  if (std::abs(f.d) > 0.5 * ring.width + 0.5) return std::nullopt;
  const double ring_len = ring.path.length();
  const double to_conflict = ring.path.wrap(arm.merge_s - f.s);
  const double past = ring_len - to_conflict;
  const double half = 0.5 * other.dims.length;
  // still occupying the conflict area, or about to
  if (past < half + 2.0 || to_conflict - half < 1.0) return 0.0;
  if (other.route && other.route->ring_exit_s) {
    const double to_exit = ring.path.wrap(*other.route->ring_exit_s - f.s);
    if (to_exit < to_conflict) return std::nullopt;
  }
  return to_conflict / std::max(other.state.speed, 0.5);
}

GateDecision conflict_gate(std::size_t self, std::span<const Agent> world, const RoadMap& map, const GateConfig& cfg) {
  const Agent& agent = world[self];
  if (!map.roundabout || agent.committed || !agent.route || !agent.route->yield_line_s || agent.route->entry_arm < 0)
    return GateDecision::proceed;
  const double front = agent.progress + 0.5 * agent.dims.length;
  const double to_line = *agent.route->yield_line_s - front;
  if (to_line > cfg.horizon || to_line < -0.5) return GateDecision::proceed;
  const ArmInfo& arm = map.roundabout->arms[static_cast<std::size_t>(agent.route->entry_arm)];
  for (std::size_t i = 0; i < world.size(); ++i) {
    if (i == self) continue;
    const auto t = time_to_conflict(world[i], arm, map);
    if (t && *t < cfg.time_threshold) return GateDecision::yield;
  }
  return GateDecision::proceed;
}

double expert_steering(const Agent& agent, const RoadMap&, const PursuitConfig& cfg) {
  const Path& path = agent.route->path.path;
  if (agent.progress >= path.length() - 0.05) return 0.0;
  const double lookahead = std::clamp(cfg.gain * agent.state.speed, cfg.min_lookahead, cfg.max_lookahead);
  const double target_s = agent.progress + lookahead;
  Vec2 target;
  if (target_s <= path.length()) {
    target = path.point(target_s);
  } else {
    // extend straight beyond the end so the approach stays aligned
    target = path.point(path.length()) + path.tangent(path.length()) * (target_s - path.length());
  }
  const Vec2 local = agent.state.pose().to_local(target);
  const double ld2 = dot(local, local);
  if (ld2 < 1e-9) return 0.0;
  const double curvature = 2.0 * local.y / ld2;
  return std::clamp(std::atan(agent.dims.wheelbase() * curvature), -kMaxSteer, kMaxSteer);
}

std::optional<Leader> find_leader(std::size_t self, std::span<const Agent> world, double lookahead) {
  const Agent& agent = world[self];
  const Path& path = agent.route->path.path;
  std::optional<Leader> best;
  for (std::size_t i = 0; i < world.size(); ++i) {
    if (i == self || !world[i].active) continue;
    const Agent& other = world[i];
    const Vec2 rel = other.state.position() - agent.state.position();
    if (dot(rel, rel) > (lookahead + 10.0) * (lookahead + 10.0)) continue;
    const Path::Frenet f = path.project_near(other.state.position(), agent.progress - 2.0, agent.progress + lookahead);
    if (!f.inside) continue;
    const double ds = f.s - agent.progress;
    if (ds <= 0.0 || ds > lookahead) continue;
    const double phi = normalize_angle(other.state.heading - path.heading(f.s));
    const double c = std::abs(std::cos(phi)), s = std::abs(std::sin(phi));
    const double half_lat = 0.5 * (other.dims.width * c + other.dims.length * s);
    if (std::abs(f.d) - half_lat > 0.5 * agent.dims.width + 0.3) continue;
    const double half_long = 0.5 * (other.dims.length * c + other.dims.width * s);
    const double gap = ds - 0.5 * agent.dims.length - half_long;
    if (!best || gap < best->gap) best = Leader{gap, std::max(0.0, other.state.speed * std::cos(phi))};
  }
  return best;
}

ControlCommand expert_control(std::size_t self, std::span<const Agent> world, const RoadMap& map, double time,
                              const ExpertConfig& cfg) {
  const Agent& agent = world[self];
  if (!agent.active) return {};
  const double v = agent.state.speed;
  auto hold = [&] { return ControlCommand{v > 0.0 ? -agent.idm.b_emergency : 0.0, 0.0}; };

  if (agent.behaviour == Behaviour::parked) return hold();
  if (agent.behaviour == Behaviour::driveoff_stop && time < agent.driveoff.hold_until) return hold();

  IdmParams p = agent.idm;
  p.v0 = effective_desired_speed(agent);
  const double front = agent.progress + 0.5 * agent.dims.length;

  double accel = idm_accel(v, std::nullopt, 0.0, p);
  if (const auto leader = find_leader(self, world)) accel = std::min(accel, idm_accel(v, leader->gap, leader->speed, p));
  if (conflict_gate(self, world, map, cfg.gate) == GateDecision::yield) {
    // stop with the front bumper about a metre before the line
    const double gap = *agent.route->yield_line_s + p.s0 - 1.0 - front;
    accel = std::min(accel, idm_accel(v, gap, 0.0, p));
  }
  if (agent.behaviour == Behaviour::driveoff_stop) {
    const double gap = agent.driveoff.stop_s + p.s0 - front;
    accel = std::min(accel, idm_accel(v, gap, 0.0, p));
  }
  accel = std::clamp(accel, -p.b_emergency, p.a_max);
  return {accel, expert_steering(agent, map, cfg.pursuit)};
}

void update_agent_bookkeeping(std::size_t self, std::span<Agent> world, const RoadMap& map, const GateConfig& cfg) {
  Agent& agent = world[self];
  if (!agent.route) return;
  agent.progress = route_progress(agent);
  if (!agent.committed && agent.route->yield_line_s) {
    const double to_line = *agent.route->yield_line_s - (agent.progress + 0.5 * agent.dims.length);
    if (to_line < -0.5) {
      agent.committed = true;
    } else if (to_line < 2.5 && agent.state.speed > 1.5) {
      // moving into the entry without a yield request: hold that decision
      const std::span<const Agent> view(world.data(), world.size());
      if (conflict_gate(self, view, map, cfg) == GateDecision::proceed) agent.committed = true;
    }
  }
  if (agent.role == AgentRole::traffic && agent.progress >= agent.route->path.path.length() - 0.5) agent.active = false;
}

}  // namespace rondo
