#include "rondo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rondo/controller.hpp"

namespace rondo {

TickRecord snapshot(double time, std::span<const Agent> world) {
  TickRecord r;
  r.time = time;
  r.agents.reserve(world.size());
  for (const Agent& a : world)
    if (a.active) r.agents.push_back({a.id, a.role, a.state, a.dims});
  return r;
}

WaypointPlan expert_plan(std::span<const Agent> world, const RoadMap& map, double time, const ExpertPolicyConfig& cfg) {
  std::vector<Agent> sim(world.begin(), world.end());
  std::vector<double> lateral(sim.size(), 0.0);
  for (std::size_t i = 1; i < sim.size(); ++i) {
    const Agent& a = sim[i];
    if (!a.route || !a.active) continue;
    lateral[i] = a.route->path.path.project_near(a.state.position(), a.progress - 1.0, a.progress + 1.0).d;
  }
  const Pose2 origin = sim[0].state.pose();
  const double dt = cfg.rollout_dt;
  const int per_waypoint = std::max(1, static_cast<int>(std::lround(kWaypointDt / dt)));
  WaypointPlan plan;
  for (int k = 1; k <= kWaypointCount * per_waypoint; ++k) {
    const ControlCommand cmd = expert_control(0, sim, map, time + (k - 1) * dt, cfg.expert);
    Agent& sdv = sim[0];
    sdv.state = step_bicycle(sdv.state, cmd.accel, cmd.steer, sdv.dims, dt);
    for (std::size_t i = 1; i < sim.size(); ++i) {
      Agent& a = sim[i];
      if (!a.active || !a.route || a.state.speed <= 0.0) continue;
      const Path& path = a.route->path.path;
      a.progress += a.state.speed * dt;
      if (a.progress >= path.length()) {
        a.active = false;
        continue;
      }
      const Vec2 p = path.point(a.progress, lateral[i]);
      a.state.x = p.x;
      a.state.y = p.y;
      a.state.heading = path.heading(a.progress);
    }
    update_agent_bookkeeping(0, sim, map, cfg.expert.gate);
    if (k % per_waypoint == 0) plan.points[static_cast<std::size_t>(k / per_waypoint - 1)] = origin.to_local(sdv.state.position());
  }
  return plan;
}

WaypointPlan StraightPolicy::act(const Observation&) {
  WaypointPlan p;
  for (int k = 0; k < kWaypointCount; ++k) p.points[static_cast<std::size_t>(k)] = {speed_ * kWaypointDt * (k + 1), 0.0};
  return p;
}

// ---------------------------------------------------------------------------

void HistoryQueue::push(TickRecord msg) {
  q_.push_back(std::move(msg));
  while (q_.size() > 2 && q_.back().time - q_[1].time >= keep_) q_.pop_front();
}

std::optional<std::array<TickRecord, kHistorySlots>> HistoryQueue::resample(double now) const {
  constexpr double kEps = 1e-9;
  if (q_.empty()) return std::nullopt;
  const double oldest = now - kHistoryStep * (kHistorySlots - 1);
  if (q_.front().time > oldest + kEps || q_.back().time < now - kEps) return std::nullopt;

  // latest dimensions per object
  std::map<int, VehicleDims> dims;
  for (const TickRecord& r : q_)
    for (const AgentSnapshot& a : r.agents) dims[a.id] = a.dims;

  std::array<TickRecord, kHistorySlots> out;
  for (int slot = 0; slot < kHistorySlots; ++slot) {
    const double t = now - kHistoryStep * slot;
    // bracketing messages: a.time <= t <= b.time
    std::size_t hi = 0;
    while (hi + 1 < q_.size() && q_[hi].time < t - kEps) ++hi;
    const std::size_t lo = hi > 0 && q_[hi].time > t + kEps ? hi - 1 : hi;
    const TickRecord& a = q_[lo];
    const TickRecord& b = q_[hi];
    const double span = b.time - a.time;
    const double f = span > kEps ? (t - a.time) / span : 0.0;
    TickRecord& rec = out[static_cast<std::size_t>(slot)];
    rec.time = t;
    for (const AgentSnapshot& sa : a.agents) {
      const auto it = std::find_if(b.agents.begin(), b.agents.end(), [&](const AgentSnapshot& x) { return x.id == sa.id; });
      if (it == b.agents.end()) {
        if (f < kEps) rec.agents.push_back(sa);
        continue;
      }
      AgentSnapshot s = sa;
      s.state.x = sa.state.x + f * (it->state.x - sa.state.x);
      s.state.y = sa.state.y + f * (it->state.y - sa.state.y);
      s.state.heading = normalize_angle(sa.state.heading + f * normalize_angle(it->state.heading - sa.state.heading));
      s.state.speed = sa.state.speed + f * (it->state.speed - sa.state.speed);
      s.dims = dims[sa.id];
      rec.agents.push_back(s);
    }
    if (f > 1.0 - kEps) {
      // objects that only appear in the later message
      for (const AgentSnapshot& sb : b.agents) {
        const bool known = std::any_of(rec.agents.begin(), rec.agents.end(), [&](const AgentSnapshot& x) { return x.id == sb.id; });
        if (!known) rec.agents.push_back(sb);
      }
    }
  }
  return out;
}

SceneFrame frame_from_history(const std::array<TickRecord, kHistorySlots>& hist, const Route& route,
                              const std::string& map_id) {
  SceneFrame f;
  f.time = hist[0].time;
  f.route = route;
  f.map_id = map_id;
  std::map<int, TrackedObject> objects;
  bool have_sdv = false;
  for (int slot = 0; slot < kHistorySlots; ++slot) {
    for (const AgentSnapshot& a : hist[static_cast<std::size_t>(slot)].agents) {
      TrackedObject* obj;
      if (a.role == AgentRole::sdv) {
        obj = &f.sdv;
        have_sdv = true;
      } else {
        obj = &objects[a.id];
      }
      obj->id = a.id;
      if (slot == 0 || !obj->present[0]) obj->dims = a.dims;
      obj->history[static_cast<std::size_t>(slot)] = a.state;
      obj->present[static_cast<std::size_t>(slot)] = true;
    }
  }
  if (!have_sdv) f.sdv.present = {};
  for (auto& [id, obj] : objects) f.traffic.push_back(obj);
  return f;
}

// ---------------------------------------------------------------------------

WaypointPlan transform_reference_point(const WaypointPlan& plan, const RefPointSpec& from, const RefPointSpec& to) {
  const double delta = to.offset - from.offset;
  if (delta == 0.0) return plan;
  double extent = 0.0;
  for (const Vec2 p : plan.points) extent = std::max(extent, norm(p));
  if (extent < 1e-6) return plan;

  // dense arc-length table of the spline through origin and waypoints,
  // extended beyond both ends by polynomial extrapolation
  const SplineTrajectory traj = fit_spline(plan);
  constexpr double kStep = 0.002;
  const double t_lo = -1.5, t_hi = kPlanHorizon + 1.5;
  const int n = static_cast<int>(std::lround((t_hi - t_lo) / kStep));
  std::vector<double> ts(static_cast<std::size_t>(n + 1)), arc(static_cast<std::size_t>(n + 1));
  Vec2 prev = traj.position(t_lo);
  for (int i = 0; i <= n; ++i) {
    const double t = t_lo + i * kStep;
    const Vec2 p = traj.position(t);
    ts[static_cast<std::size_t>(i)] = t;
    arc[static_cast<std::size_t>(i)] = i == 0 ? 0.0 : arc[static_cast<std::size_t>(i - 1)] + norm(p - prev);
    prev = p;
  }
  auto arc_at = [&](double t) {
    const double u = (t - t_lo) / kStep;
    const auto i = std::clamp(static_cast<std::size_t>(u), std::size_t{0}, arc.size() - 2);
    const double f = u - static_cast<double>(i);
    return arc[i] + f * (arc[i + 1] - arc[i]);
  };
  auto t_at = [&](double s) {
    const auto it = std::lower_bound(arc.begin(), arc.end(), s);
    if (it == arc.begin()) return ts.front();
    if (it == arc.end()) return ts.back();
    const auto i = static_cast<std::size_t>(it - arc.begin());
    const double ds = arc[i] - arc[i - 1];
    const double f = ds > 0.0 ? (s - arc[i - 1]) / ds : 0.0;
    return ts[i - 1] + f * kStep;
  };

  WaypointPlan out;
  for (int k = 0; k < kWaypointCount; ++k) {
    const double s = arc_at(kWaypointDt * (k + 1)) + delta;
    out.points[static_cast<std::size_t>(k)] = traj.position(t_at(s));
  }
  return out;
}

}  // namespace rondo
