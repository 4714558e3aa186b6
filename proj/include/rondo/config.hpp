#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rondo/augment.hpp"
#include "rondo/map.hpp"
#include "rondo/nn/loss.hpp"
#include "rondo/nn/network.hpp"
#include "rondo/nn/trainer.hpp"
#include "rondo/scenario.hpp"
#include "rondo/sim.hpp"

namespace rondo {

inline constexpr const char* kCodeVersion = "0.3.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioWeight {
  ScenarioKind kind;
  double weight;
  bool operator==(const ScenarioWeight&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 1;

  RoundaboutParams roundabout;
  double rural_length = 600.0;
  std::vector<double> rural_curvature{0.0, 0.004, -0.003, 0.0};

  ScenarioParams scenario;
  std::vector<ScenarioWeight> mix;  // training-data scenario mix

  int sequences = 300;
  std::uint64_t train_frames = 16000;
  std::uint64_t dev_frames = 4000;
  double split_ratio = 0.8;

  AugmentConfig augment;
  nn::NetworkConfig network;
  nn::LossConfig loss;
  nn::TrainConfig training;
  SimConfig sim;

  int eval_episodes = 100;
  std::vector<ScenarioKind> eval_kinds;
  int snippet_sequences = 60;

  RunConfig();
};

enum class Preset { desk, paper };
RunConfig preset_config(Preset p);
Preset parse_preset(const std::string& name);

/// Applies `section.key = value` lines on top of `cfg`. Unknown keys and bad
/// values raise ConfigError naming `source` and the line number.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source = "<config>");
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Every key with its current value, in a fixed order.
std::string dump_config(const RunConfig& cfg);
/// Commented template of every key; defaults chosen here rather than published are marked.
std::string config_template();
/// 16 hex digits of FNV-1a over dump_config.
std::string config_hash(const RunConfig& cfg);

std::string format_mix(const std::vector<ScenarioWeight>& mix);
std::vector<ScenarioWeight> parse_mix(const std::string& text);

}  // namespace rondo
