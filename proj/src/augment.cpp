#include "rondo/augment.hpp"

#include <cstdio>

namespace rondo {

Agent aug_dims(Agent agent, Rng& rng, const AugmentConfig& cfg) {
  if (agent.role == AgentRole::sdv) return agent;
  agent.dims.length = rng.uniform(cfg.dims_length_lo, cfg.dims_length_hi);
  agent.dims.width = rng.uniform(cfg.dims_width_lo, cfg.dims_width_hi);
  return agent;
}

EpisodeConfig aug_offroad_vehicles(EpisodeConfig config, Rng& rng, int count, const AugmentConfig& cfg, int* placed) {
  int done = 0;
  const RoadMap& map = *config.map;
  for (int k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
      const Lane& lane = map.lanes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(map.lanes.size()) - 1))];
      const double s = rng.uniform(0.0, lane.path.length());
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double dist = rng.uniform(cfg.offroad_distance_lo, cfg.offroad_distance_hi);
      const Vec2 p = lane.path.point(s) + left_normal(lane.path.tangent(s)) * (side * (0.5 * lane.width + dist));

      Agent a;
      a.id = static_cast<int>(config.agents.size());
      a.role = AgentRole::traffic;
      a.behaviour = Behaviour::parked;
      a.active = true;
      a = aug_dims(a, rng, cfg);
      a.state = {p.x, p.y, normalize_angle(rng.uniform(-kPi, kPi)), 0.0};

      const double centre_dist = distance_to_drivable(map, p);
      if (centre_dist < cfg.offroad_distance_lo || centre_dist > cfg.offroad_distance_hi) continue;
      bool clear = true;
      for (const Vec2 c : a.box().corners()) {
        if (distance_to_drivable(map, c) < 0.2) {
          clear = false;
          break;
        }
      }
      if (!clear || !spawn_is_clear(config.agents, a, 0.5)) continue;
      config.agents.push_back(a);
      ok = true;
    }
    if (ok) ++done;
  }
  if (done < count) std::fprintf(stderr, "warning: placed %d of %d off-road vehicles\n", done, count);
  if (placed) *placed = done;
  return config;
}

}  // namespace rondo
