#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rondo/augment.hpp"
#include "rondo/frame.hpp"
#include "rondo/map.hpp"
#include "rondo/nn/adam.hpp"
#include "rondo/nn/loss.hpp"
#include "rondo/nn/network.hpp"

namespace rondo::nn {

using MapStore = std::map<std::string, std::shared_ptr<const RoadMap>>;

struct TrainConfig {
  int epochs = 5;
  int batch = 32;
  double lr = 1e-3;
  double lr_decay = 0.94;  // per epoch
  double weight_decay = 1e-4;
  int pool = 4;            // max-pool factor from the 256 grid to the network input
  int dev_limit = 0;       // dev frames scored per epoch, 0 = all
  bool mean_plan_bias = true;
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;  // 0 is the untrained network
  double lr = 0.0;
  LossTerms train;
  LossTerms dev;
};

struct TrainResult {
  Network<float> net;
  std::vector<EpochLog> log;
  bool diverged = false;
  Network<float> initial;  // the state epoch 0 is scored at
};

/// Stable per-frame key; augmentation draws are keyed by it, not by batch position.
std::uint64_t frame_key(const SceneFrame& f);

/// Network input and labels of one frame. `aug` and `rng` may be null (no augmentation).
void prepare_sample(const SceneFrame& frame, const RoadMap& map, int pool, const AugmentConfig* aug, Rng* rng,
                    float* input, float* wp_label, float* anchor_label);

/// Mean loss over `frames`, no augmentation.
LossTerms evaluate_loss(Network<float>& net, std::span<const SceneFrame> frames, const MapStore& maps,
                        const LossConfig& loss, int pool, int batch);

TrainResult train(std::span<const SceneFrame> train_frames, std::span<const SceneFrame> dev_frames,
                  const MapStore& maps, const NetworkConfig& net_cfg, const LossConfig& loss_cfg,
                  const TrainConfig& cfg, const AugmentConfig& aug,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

void write_training_csv(std::ostream& os, std::span<const EpochLog> log);

}  // namespace rondo::nn
