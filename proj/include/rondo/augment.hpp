#pragma once

#include "rondo/rng.hpp"
#include "rondo/scenario.hpp"

namespace rondo {

struct AugmentConfig {
  bool rotate = true;
  bool translate = true;
  bool bitflip = true;
  bool dims = true;
  bool offroad = true;
  double p_rotate = 0.5;
  double p_translate = 0.5;
  double rot_range_deg = 5.0;
  double trans_range = 2.0;  // m
  double p_flip = 0.0005;
  double dims_length_lo = 4.0, dims_length_hi = 6.0;
  double dims_width_lo = 1.0, dims_width_hi = 3.0;
  double p_offroad_sequence = 0.5;  // fraction of generated sequences that get off-road vehicles
  int offroad_lo = 1, offroad_hi = 6;
  double offroad_distance_lo = 3.0, offroad_distance_hi = 15.0;
};

/// Resamples length and width of a traffic vehicle.
Agent aug_dims(Agent agent, Rng& rng, const AugmentConfig& cfg = {});

/// Adds up to `count` parked vehicles just off the drivable area.
/// Returns the config with the vehicles appended; `placed` receives how many fit.
EpisodeConfig aug_offroad_vehicles(EpisodeConfig config, Rng& rng, int count, const AugmentConfig& cfg = {},
                                   int* placed = nullptr);

}  // namespace rondo
