#include "rondo/nn/learned_policy.hpp"

#include <cmath>

#include "rondo/raster.hpp"

namespace rondo::nn {

std::array<TickRecord, kHistorySlots> extrapolated_history(const TickRecord& now) {
  std::array<TickRecord, kHistorySlots> out;
  for (int slot = 0; slot < kHistorySlots; ++slot) {
    const double back = kHistoryStep * slot;
    TickRecord& r = out[static_cast<std::size_t>(slot)];
    r.time = now.time - back;
    r.agents = now.agents;
    for (AgentSnapshot& a : r.agents) {
      a.state.x -= back * a.state.speed * std::cos(a.state.heading);
      a.state.y -= back * a.state.speed * std::sin(a.state.heading);
    }
  }
  return out;
}

LearnedPolicy::LearnedPolicy(Network<float> net, int pool, std::string label)
    : net_(std::move(net)), pool_(pool), label_(std::move(label)) {
  if (net_.config().input_size * pool_ != kGridSize) throw ShapeError("input size times pool factor must equal the grid");
  input_.resize(static_cast<std::size_t>(net_.config().in_channels) * net_.config().input_size * net_.config().input_size);
}

void LearnedPolicy::reset() {
  queue_.clear();
  last_pushed_ = -1e18;
}

WaypointPlan LearnedPolicy::act(const Observation& obs) {
  constexpr double kEps = 1e-9;
  if (obs.history.empty()) {
    if (obs.time > last_pushed_ + kEps) {
      queue_.push(snapshot(obs.time, obs.world));
      last_pushed_ = obs.time;
    }
  } else {
    // only the records that arrived since the last call
    std::size_t first = obs.history.size();
    while (first > 0 && obs.history[first - 1].time > last_pushed_ + kEps) --first;
    for (std::size_t i = first; i < obs.history.size(); ++i) queue_.push(obs.history[i]);
    last_pushed_ = std::max(last_pushed_, obs.history.back().time);
  }
  auto hist = queue_.resample(obs.time);
  if (!hist) hist = extrapolated_history(obs.history.empty() ? snapshot(obs.time, obs.world) : obs.history.back());

  const Agent& sdv = obs.world[0];
  const SceneFrame frame = frame_from_history(*hist, sdv.route ? sdv.route->route : Route{}, obs.map->id);
  const BevGrid grid = rasterize(frame, *obs.map);
  pool_grid(grid, pool_, input_);
  net_.forward(1, input_.data());
  WaypointPlan plan;
  const std::vector<float>& out = net_.waypoints();
  for (int k = 0; k < kWaypointCount; ++k)
    plan.points[static_cast<std::size_t>(k)] = {out[static_cast<std::size_t>(2 * k)], out[static_cast<std::size_t>(2 * k + 1)]};
  return plan;
}

}  // namespace rondo::nn
