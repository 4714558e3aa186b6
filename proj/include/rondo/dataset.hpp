#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rondo/frame.hpp"
#include "rondo/policy.hpp"
#include "rondo/scenario.hpp"
#include "rondo/sim.hpp"

namespace rondo {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

struct CaptureResult {
  std::vector<SceneFrame> frames;
  Termination termination = Termination::timeout;
  bool dropped = false;
};

/// Runs the expert on `config` and cuts frames with complete history and future.
CaptureResult capture_sequence(const EpisodeConfig& config, std::uint64_t sequence_id, const SimConfig& sim = {},
                               const ExpertPolicyConfig& expert = {});

/// Frames from a state log; ticks without 0.4 s history or 3 s future are skipped.
std::vector<SceneFrame> frames_from_log(std::span<const TickRecord> log, const Route& route, const std::string& map_id,
                                        std::uint64_t sequence_id);

struct SequenceInfo {
  std::uint64_t id = 0;
  std::string kind;
  std::uint64_t seed = 0;
  std::uint32_t frame_count = 0;
  std::string split;                   // "train" or "dev"
  std::vector<std::int32_t> selected;  // ticks kept after subsampling

  bool operator==(const SequenceInfo&) const = default;
};

struct DatasetManifest {
  std::uint32_t version = kDatasetVersion;
  std::uint64_t generator_seed = 0;
  std::string config_hash;
  std::uint64_t train_target = 0;
  std::uint64_t dev_target = 0;
  std::vector<SequenceInfo> sequences;

  std::uint64_t frame_total() const;
  std::uint64_t selected_total(const std::string& split) const;
  bool operator==(const DatasetManifest&) const = default;
};

/// Sequence-level split, then uniform frame subsampling within each split.
/// `frame_ticks[i]` lists the ticks available in sequence i.
DatasetManifest split_and_subsample(DatasetManifest manifest, const std::vector<std::vector<std::int32_t>>& frame_ticks,
                                    double ratio, std::uint64_t train_target, std::uint64_t dev_target,
                                    std::uint64_t seed);

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

std::string encode_frames(const std::vector<SceneFrame>& frames);
std::vector<SceneFrame> decode_frames(const std::string& bytes);
void write_dataset(const std::vector<SceneFrame>& frames, const std::string& path);
std::vector<SceneFrame> read_dataset(const std::string& path);

}  // namespace rondo
