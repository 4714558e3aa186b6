#include "rondo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "rondo/nn/learned_policy.hpp"
#include "rondo/nn/weights.hpp"
#include "rondo/rng.hpp"

namespace fs = std::filesystem;

namespace rondo {

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

}  // namespace

ScenarioMaps build_maps(const RunConfig& cfg) {
  ScenarioMaps m;
  m.roundabout = std::make_shared<const RoadMap>(synthesize_roundabout(cfg.roundabout, "roundabout"));
  m.rural = std::make_shared<const RoadMap>(
      synthesize_rural_road(cfg.rural_length, cfg.rural_curvature, "rural", cfg.roundabout.lane_width));
  return m;
}

std::string provenance(const RunConfig& cfg) {
  return std::string("rondo ") + kCodeVersion + " config " + config_hash(cfg) + " seed " + std::to_string(cfg.seed);
}

// Largest-remainder apportionment; ties go to the earlier mix entry.
std::vector<ScenarioKind> allocate_sequences(const std::vector<ScenarioWeight>& mix, int count) {
  double total = 0.0;
  for (const ScenarioWeight& w : mix) total += w.weight;
  if (!(total > 0.0)) throw ConfigError("scenario mix has zero total weight");
  std::vector<int> n(mix.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int used = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double exact = count * mix[i].weight / total;
    n[i] = static_cast<int>(std::floor(exact));
    used += n[i];
    rem.push_back({exact - n[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; used < count; ++r, ++used) ++n[rem[r % rem.size()].second];

  std::vector<ScenarioKind> out;
  for (std::size_t i = 0; i < mix.size(); ++i) out.insert(out.end(), static_cast<std::size_t>(n[i]), mix[i].kind);
  return out;
}

EpisodeConfig sequence_episode(const RunConfig& cfg, const ScenarioMaps& maps, ScenarioKind kind,
                               std::uint64_t seq_seed) {
  ScenarioParams params = cfg.scenario;
  params.sample_dims = params.sample_dims && cfg.augment.dims;
  params.dims_length_lo = cfg.augment.dims_length_lo;
  params.dims_length_hi = cfg.augment.dims_length_hi;
  params.dims_width_lo = cfg.augment.dims_width_lo;
  params.dims_width_hi = cfg.augment.dims_width_hi;
  EpisodeConfig ep = sample_scenario(kind, maps.for_kind(kind), seq_seed, params);

  if (cfg.augment.offroad) {
    Rng rng(derive_seed(seq_seed, "offroad"));
    if (rng.bernoulli(cfg.augment.p_offroad_sequence)) {
      const int count = rng.uniform_int(cfg.augment.offroad_lo, cfg.augment.offroad_hi);
      AugmentConfig aug = cfg.augment;
      if (!aug.dims) aug.dims_length_lo = aug.dims_length_hi = 4.5, aug.dims_width_lo = aug.dims_width_hi = 1.8;
      ep = aug_offroad_vehicles(std::move(ep), rng, count, aug);
    }
  }
  return ep;
}

DatasetManifest generate_dataset(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const ScenarioMaps maps = build_maps(cfg);
  save_map(*maps.roundabout, join(out_dir, "roundabout.map"));
  save_map(*maps.rural, join(out_dir, "rural.map"));

  const std::vector<ScenarioKind> kinds = allocate_sequences(cfg.mix, cfg.sequences);
  const auto n = static_cast<std::int64_t>(kinds.size());
  std::vector<CaptureResult> caps(kinds.size());
  std::vector<std::uint64_t> seeds(kinds.size());
  const std::uint64_t base = derive_seed(cfg.seed, "sequence");
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    seeds[u] = derive_seed(base, static_cast<std::uint64_t>(i));
    const EpisodeConfig ep = sequence_episode(cfg, maps, kinds[u], seeds[u]);
    caps[u] = capture_sequence(ep, static_cast<std::uint64_t>(i), cfg.sim);
  }

  DatasetManifest m;
  m.generator_seed = cfg.seed;
  m.config_hash = config_hash(cfg);
  std::vector<std::vector<std::int32_t>> ticks;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    SequenceInfo s;
    s.id = i;
    s.kind = std::string(scenario_name(kinds[i]));
    s.seed = seeds[i];
    s.frame_count = static_cast<std::uint32_t>(caps[i].frames.size());
    std::vector<std::int32_t> t;
    for (const SceneFrame& f : caps[i].frames) t.push_back(f.tick);
    ticks.push_back(std::move(t));
    m.sequences.push_back(std::move(s));
  }
  m = split_and_subsample(std::move(m), ticks, cfg.split_ratio, cfg.train_frames, cfg.dev_frames,
                          derive_seed(cfg.seed, "dataset"));

  std::vector<SceneFrame> train, dev;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const SequenceInfo& s = m.sequences[i];
    const std::set<std::int32_t> keep(s.selected.begin(), s.selected.end());
    for (SceneFrame& f : caps[i].frames) {
      if (!keep.count(f.tick)) continue;
      (s.split == "train" ? train : dev).push_back(std::move(f));
    }
  }
  write_manifest(m, join(out_dir, "manifest.txt"));
  write_dataset(train, join(out_dir, "train.rds"));
  write_dataset(dev, join(out_dir, "dev.rds"));
  auto os = open_out(join(out_dir, "config.txt"));
  os << "# " << provenance(cfg) << '\n' << dump_config(cfg);
  return m;
}

LoadedDataset load_dataset(const std::string& dir) {
  LoadedDataset d;
  d.manifest = read_manifest(join(dir, "manifest.txt"));
  d.train = read_dataset(join(dir, "train.rds"));
  d.dev = read_dataset(join(dir, "dev.rds"));
  for (const char* name : {"roundabout", "rural"}) {
    auto map = std::make_shared<const RoadMap>(load_map(join(dir, std::string(name) + ".map")));
    d.maps[map->id] = map;
  }
  return d;
}

void exclude_kinds(LoadedDataset& data, const std::vector<ScenarioKind>& kinds) {
  if (kinds.empty()) return;
  std::set<std::uint64_t> drop;
  for (const SequenceInfo& s : data.manifest.sequences) {
    const auto k = parse_scenario(s.kind);
    if (k && std::find(kinds.begin(), kinds.end(), *k) != kinds.end()) drop.insert(s.id);
  }
  auto gone = [&](const SceneFrame& f) { return drop.count(f.sequence_id) > 0; };
  std::erase_if(data.train, gone);
  std::erase_if(data.dev, gone);
}

nn::TrainResult train_model(const RunConfig& cfg, const LoadedDataset& data, const std::string& out_dir) {
  nn::TrainConfig tc = cfg.training;
  tc.seed = cfg.seed;
  nn::TrainResult r = nn::train(data.train, data.dev, data.maps, cfg.network, cfg.loss, tc, cfg.augment);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    nn::save_weights(r.net, {config_hash(cfg), cfg.seed, kCodeVersion}, join(out_dir, "weights.rwt"));
    nn::save_weights(r.initial, {config_hash(cfg), cfg.seed, kCodeVersion}, join(out_dir, "init.rwt"));
    auto os = open_out(join(out_dir, "training.csv"));
    os << "# " << provenance(cfg) << '\n';
    nn::write_training_csv(os, r.log);
  }
  return r;
}

PolicyFactory make_policy_factory(const std::string& spec, const RunConfig& cfg) {
  if (spec == "expert") return [] { return std::make_unique<ExpertPolicy>(); };
  if (spec == "stop") return [] { return std::make_unique<StopPolicy>(); };
  if (spec == "straight") return [] { return std::make_unique<StraightPolicy>(5.0); };
  if (spec == "untrained") {
    nn::Network<float> net(cfg.network);
    net.init(cfg.seed);
    return [net, pool = cfg.training.pool] { return std::make_unique<nn::LearnedPolicy>(net, pool, "untrained"); };
  }
  const nn::Network<float> net = nn::load_weights(spec);
  return [net, pool = cfg.training.pool] { return std::make_unique<nn::LearnedPolicy>(net, pool); };
}

void write_table_files(const Table& t, const RunConfig& cfg, const std::string& stem) {
  {
    auto os = open_out(stem + ".csv");
    os << "# " << provenance(cfg) << '\n';
    write_csv(os, t);
  }
  auto os = open_out(stem + ".txt");
  os << "# " << provenance(cfg) << '\n';
  write_text(os, t);
}

std::vector<ClosedLoopRow> run_closed_loop(const RunConfig& cfg, const PolicyFactory& policy,
                                           const std::vector<ScenarioKind>& kinds, int episodes,
                                           const std::string& out_dir) {
  ClosedLoopOptions opts;
  opts.episodes = episodes;
  opts.seed = derive_seed(cfg.seed, "closed-loop");
  opts.params = cfg.scenario;
  opts.sim = cfg.sim;
  const ScenarioMaps maps = build_maps(cfg);
  std::vector<ClosedLoopRow> rows = eval_closed_loop(policy, kinds, maps, opts);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_table_files(closed_loop_table(rows), cfg, join(out_dir, "closed_loop"));
  }
  return rows;
}

std::vector<Snippet> build_snippets(const RunConfig& cfg, const ScenarioMaps& maps) {
  const auto n = static_cast<std::int64_t>(cfg.snippet_sequences);
  std::vector<std::vector<Snippet>> parts(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
  const std::uint64_t base = derive_seed(cfg.seed, "snippets");
  constexpr auto kinds = std::span(kTrainingScenarioKinds);
  SnippetOptions so;
  so.sim = cfg.sim;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const ScenarioKind kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
    const EpisodeConfig ep =
        sample_scenario(kind, maps.for_kind(kind), derive_seed(base, static_cast<std::uint64_t>(i)), cfg.scenario);
    parts[static_cast<std::size_t>(i)] = extract_snippets(ep, static_cast<std::uint64_t>(i), so);
  }
  std::vector<Snippet> out;
  for (auto& p : parts)
    for (auto& s : p) out.push_back(std::move(s));
  return out;
}

std::vector<OpenLoopRow> run_open_loop(const RunConfig& cfg, const PolicyFactory& policy, const std::string& out_dir) {
  const ScenarioMaps maps = build_maps(cfg);
  const std::vector<Snippet> snippets = build_snippets(cfg, maps);
  std::vector<OpenLoopRow> rows = eval_open_loop(policy, snippets);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_table_files(open_loop_table(rows), cfg, join(out_dir, "open_loop"));
  }
  return rows;
}

// ---------------------------------------------------------------------------

bool toggle_needs_data(const std::string& t) { return t == "dims" || t == "offroad"; }

void apply_toggle(RunConfig& cfg, std::vector<ScenarioKind>& excluded, const std::string& t, bool on) {
  if (t == "rot") cfg.augment.rotate = on;
  else if (t == "trans") cfg.augment.translate = on;
  else if (t == "bitflip") cfg.augment.bitflip = on;
  else if (t == "dims") cfg.augment.dims = on;
  else if (t == "offroad") cfg.augment.offroad = on;
  else if (t == "pos") cfg.loss.lambda_pos = on ? cfg.loss.lambda_pos : 0.0;
  else if (t == "vel") cfg.loss.lambda_vel = on ? cfg.loss.lambda_vel : 0.0;
  else if (t == "class") cfg.loss.lambda_class = on ? cfg.loss.lambda_class : 0.0;
  else if (t == "reg") cfg.loss.lambda_reg = on ? cfg.loss.lambda_reg : 0.0;
  else if (const auto k = parse_scenario(t)) {
    if (!on) excluded.push_back(*k);
  } else {
    throw ConfigError("unknown ablation toggle '" + t + "'");
  }
}

Table run_ablation(const RunConfig& cfg, const std::vector<std::string>& toggles, const std::string& data_dir,
                   const std::string& out_dir) {
  if (toggles.empty() || toggles.size() > 10) throw ConfigError("ablate needs between 1 and 10 toggles");
  Table t;
  t.title = "ablation";
  for (const std::string& s : toggles) t.columns.push_back(s);
  const std::vector<ScenarioKind>& kinds = cfg.eval_kinds;
  for (const ScenarioKind k : kinds) {
    t.columns.push_back(std::string(scenario_name(k)) + " success");
    t.columns.push_back(std::string(scenario_name(k)) + " collisions");
  }
  t.columns.push_back("final dev loss");

  std::map<std::string, LoadedDataset> data_cache;
  const std::size_t combos = std::size_t{1} << toggles.size();
  for (std::size_t mask = 0; mask < combos; ++mask) {
    RunConfig c = cfg;
    std::vector<ScenarioKind> excluded;
    std::string data_key, label;
    std::vector<std::string> row;
    for (std::size_t i = 0; i < toggles.size(); ++i) {
      const bool on = !(mask >> i & 1U);
      apply_toggle(c, excluded, toggles[i], on);
      if (toggle_needs_data(toggles[i])) data_key += toggles[i] + (on ? "1" : "0");
      label += (i ? "_" : "") + toggles[i] + (on ? "-on" : "-off");
      row.push_back(on ? "✓" : "✗");
    }
    std::string dir = data_dir;
    if (!data_key.empty() || data_dir.empty()) {
      dir = join(out_dir, "data-" + (data_key.empty() ? std::string("base") : data_key));
      if (!fs::exists(join(dir, "manifest.txt"))) generate_dataset(c, dir);
    }
    if (!data_cache.count(dir)) data_cache.emplace(dir, load_dataset(dir));
    LoadedDataset d = data_cache.at(dir);
    exclude_kinds(d, excluded);

    const std::string run_dir = join(out_dir, label);
    const nn::TrainResult r = train_model(c, d, run_dir);
    const PolicyFactory f = make_policy_factory(join(run_dir, "weights.rwt"), c);
    const auto rows = run_closed_loop(c, f, kinds, c.eval_episodes, run_dir);
    for (const ClosedLoopRow& cl : rows) {
      row.push_back(format_number(cl.rate(cl.success)));
      row.push_back(format_number(cl.rate(cl.collision)));
    }
    row.push_back(r.log.empty() ? "nan" : format_number(r.log.back().dev.total, 4));
    t.add_row(std::move(row));
  }
  write_table_files(t, cfg, join(out_dir, "ablation"));
  return t;
}

}  // namespace rondo
