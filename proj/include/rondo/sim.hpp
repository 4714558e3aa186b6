#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rondo/controller.hpp"
#include "rondo/policy.hpp"
#include "rondo/scenario.hpp"

namespace rondo {

enum class Termination {
  success,
  collision,
  offroad,    // SDV centre more than 5 m outside the drivable area
  timeout,
  infraction, // criterion met after an off-road event
  fault,      // policy produced a non-finite plan
};
std::string_view termination_name(Termination t);

struct EpisodeResult {
  Termination termination = Termination::timeout;
  double duration = 0.0;
  double distance = 0.0;  // SDV path length driven
  double avg_speed = 0.0;
  int collision_count = 0;
  int offroad_event_count = 0;
  std::vector<TickRecord> state_log;
  std::vector<WaypointPlan> plan_log;  // one per tick that ran the policy
  std::vector<SdvTick> sdv_log;

  bool success() const { return termination == Termination::success; }
};

/// Read-only view handed to hooks after every recorded tick.
struct TickView {
  double time = 0.0;
  std::span<const Agent> world;
  const RoadMap* map = nullptr;
  const SdvTick* sdv = nullptr;
  const WaypointPlan* plan = nullptr;  // null on the final (terminating) tick
};

struct TickHooks {
  std::function<void(const TickView&)> on_tick;
};

struct SimConfig {
  double offroad_limit = 5.0;
  double extra_time = 0.0;  // keep simulating this long after success (for label capture)
  ControllerConfig controller;
  ExpertConfig traffic;
};

EpisodeResult run_episode(const EpisodeConfig& config, Policy& sdv_policy, const TickHooks& hooks = {},
                          const SimConfig& sim = {});

bool detect_collision(const Agent& a, const Agent& b);

/// One line per tick and agent: tick id x y heading speed.
void write_episode_log(std::ostream& os, const EpisodeResult& result);

}  // namespace rondo
