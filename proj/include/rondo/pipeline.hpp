#pragma once

#include <string>
#include <vector>

#include "rondo/config.hpp"
#include "rondo/dataset.hpp"
#include "rondo/metrics.hpp"
#include "rondo/nn/trainer.hpp"

namespace rondo {

/// Maps used by every command; ids match the map files written by gen-map.
ScenarioMaps build_maps(const RunConfig& cfg);

/// One header line naming code version, config hash and seed.
std::string provenance(const RunConfig& cfg);

/// Scenario kind of each generated sequence, apportioned by the mix weights.
std::vector<ScenarioKind> allocate_sequences(const std::vector<ScenarioWeight>& mix, int count);

/// Episode of sequence i, including the sequence-level augmentations.
EpisodeConfig sequence_episode(const RunConfig& cfg, const ScenarioMaps& maps, ScenarioKind kind, std::uint64_t seq_seed);

/// gen-data: maps, manifest.txt, train.rds, dev.rds and config.txt in `out_dir`.
DatasetManifest generate_dataset(const RunConfig& cfg, const std::string& out_dir);

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<SceneFrame> train, dev;
  nn::MapStore maps;
};
LoadedDataset load_dataset(const std::string& dir);

/// Drops frames whose sequence has one of `kinds`.
void exclude_kinds(LoadedDataset& data, const std::vector<ScenarioKind>& kinds);

/// train: weights.rwt, init.rwt (the untrained start) and training.csv in `out_dir`.
nn::TrainResult train_model(const RunConfig& cfg, const LoadedDataset& data, const std::string& out_dir);

/// "expert", "stop", "straight", "untrained" (seeded init, no data) or a weight file.
PolicyFactory make_policy_factory(const std::string& spec, const RunConfig& cfg);

/// eval-cl: closed_loop.csv and closed_loop.txt in `out_dir` (skipped when empty).
std::vector<ClosedLoopRow> run_closed_loop(const RunConfig& cfg, const PolicyFactory& policy,
                                           const std::vector<ScenarioKind>& kinds, int episodes,
                                           const std::string& out_dir);

/// Held-out expert episodes cut into labelled snippets.
std::vector<Snippet> build_snippets(const RunConfig& cfg, const ScenarioMaps& maps);

/// eval-ol: open_loop.csv and open_loop.txt in `out_dir`.
std::vector<OpenLoopRow> run_open_loop(const RunConfig& cfg, const PolicyFactory& policy, const std::string& out_dir);

/// Toggle names: rot, trans, bitflip, dims, offroad, pos, vel, class, reg, or a
/// scenario kind (training data with / without that kind).
void apply_toggle(RunConfig& cfg, std::vector<ScenarioKind>& excluded, const std::string& toggle, bool on);
bool toggle_needs_data(const std::string& toggle);

/// ablate: every on/off combination of `toggles`, trained and evaluated.
Table run_ablation(const RunConfig& cfg, const std::vector<std::string>& toggles, const std::string& data_dir,
                   const std::string& out_dir);

void write_table_files(const Table& t, const RunConfig& cfg, const std::string& stem);

}  // namespace rondo
