// rondo: data generation, training and evaluation driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rondo/pipeline.hpp"
#include "rondo/raster.hpp"
#include "rondo/rng.hpp"

namespace fs = std::filesystem;
using namespace rondo;

namespace {

struct Common {
  std::string config_file;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "out";
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "config file of 'section.key = value' lines");
  app->add_option("--preset", c.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) { c.seed_set = true; });
  app->add_option("-o,--out-dir", c.out_dir, "output directory");
  app->add_option("--set", c.sets, "override one key, e.g. --set training.epochs=2");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = preset_config(parse_preset(c.preset));
  if (!c.config_file.empty()) apply_config_file(cfg, c.config_file);
  std::string text;
  for (const std::string& s : c.sets) text += s + "\n";
  if (!text.empty()) apply_config_text(cfg, text, "--set");
  if (c.seed_set) cfg.seed = c.seed;
  return cfg;
}

std::vector<ScenarioKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ScenarioKind> out;
  for (const std::string& n : names) {
    const auto k = parse_scenario(n);
    if (!k) throw ConfigError("unknown scenario kind '" + n + "'");
    out.push_back(*k);
  }
  return out;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void print_table(const Table& t) { write_text(std::cout, t); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rondo: roundabout driving policy pipeline"};

  app.footer("rondo --config-template prints every config key with its default.");
  app.require_subcommand(1);
  Common common;

  auto* gen_map = app.add_subcommand("gen-map", "write the roundabout and rural road maps");
  add_common(gen_map, common);

  auto* gen_data = app.add_subcommand("gen-data", "simulate expert sequences and write a dataset");
  add_common(gen_data, common);
  int sequences = -1;
  std::string mix_file;
  gen_data->add_option("--sequences", sequences, "number of sequences");
  gen_data->add_option("--scenario-mix", mix_file, "file with kind:weight entries");

  auto* train = app.add_subcommand("train", "train the network on a dataset");
  add_common(train, common);
  std::string data_dir;
  std::vector<std::string> exclude;
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--exclude-kind", exclude, "drop frames of these scenario kinds");

  auto* eval_cl = app.add_subcommand("eval-cl", "closed-loop evaluation");
  add_common(eval_cl, common);
  std::string weights, policy_name;
  std::vector<std::string> kind_names;
  int episodes = -1;
  auto* w_opt = eval_cl->add_option("--weights", weights, "weight file");
  eval_cl->add_option("--policy", policy_name, "expert, stop, straight or untrained")->excludes(w_opt);
  eval_cl->add_option("--kinds", kind_names, "scenario kinds (default: evaluation.kinds)");
  eval_cl->add_option("--episodes", episodes, "episodes per kind");

  auto* eval_ol = app.add_subcommand("eval-ol", "open-loop metrics on labelled expert snippets");
  add_common(eval_ol, common);
  auto* w_opt2 = eval_ol->add_option("--weights", weights, "weight file");
  eval_ol->add_option("--policy", policy_name, "expert, stop, straight or untrained")->excludes(w_opt2);

  auto* dump_grid = app.add_subcommand("dump-grid", "write every raster channel of one frame as PGM");
  add_common(dump_grid, common);
  std::string kind_name = "random-traffic";
  int episode_index = 0;
  double at_time = 2.0;
  int frame_index = -1;
  dump_grid->add_option("--data", data_dir, "take a frame from this dataset's dev split");
  dump_grid->add_option("--frame", frame_index, "dev frame index (with --data)");
  dump_grid->add_option("--kind", kind_name, "scenario kind");
  dump_grid->add_option("--episode", episode_index, "episode index");
  dump_grid->add_option("--time", at_time, "frame time in s");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate every on/off combination of toggles");
  add_common(ablate, common);
  std::vector<std::string> toggles;
  ablate->add_option("toggles", toggles,
                     "rot trans bitflip dims offroad pos vel class reg, or scenario kinds")
      ->required();
  ablate->add_option("--data", data_dir, "dataset for combinations that keep data-level toggles on");

  auto* replay = app.add_subcommand("replay-export", "run one episode and export its log and plans");
  add_common(replay, common);
  auto* w_opt3 = replay->add_option("--weights", weights, "weight file");
  replay->add_option("--policy", policy_name, "expert, stop, straight or untrained")->excludes(w_opt3);
  replay->add_option("--kind", kind_name, "scenario kind");
  replay->add_option("--episode", episode_index, "episode index");

  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--config-template") {
      std::cout << config_template();
      return 0;
    }
  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load_config(common);
    const std::string& out = common.out_dir;
    fs::create_directories(out);

    if (*gen_map) {
      const ScenarioMaps maps = build_maps(cfg);
      save_map(*maps.roundabout, path_in(out, "roundabout.map"));
      save_map(*maps.rural, path_in(out, "rural.map"));
      std::cout << provenance(cfg) << "\nwrote " << path_in(out, "roundabout.map") << " and "
                << path_in(out, "rural.map") << '\n';
    } else if (*gen_data) {
      RunConfig c = cfg;
      if (sequences >= 0) c.sequences = sequences;
      if (!mix_file.empty()) {
        std::ifstream is(mix_file);
        if (!is) throw ConfigError("cannot read " + mix_file);
        std::string text, line;
        while (std::getline(is, line)) {
          const auto hash = line.find('#');
          if (hash != std::string::npos) line.resize(hash);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          text += (text.empty() ? "" : ",") + line;
        }
        c.mix = parse_mix(text);
      }
      const DatasetManifest m = generate_dataset(c, out);
      std::cout << provenance(c) << "\nsequences " << m.sequences.size() << ", train frames "
                << m.selected_total("train") << ", dev frames " << m.selected_total("dev") << '\n';
    } else if (*train) {
      LoadedDataset d = load_dataset(data_dir);
      exclude_kinds(d, parse_kinds(exclude));
      std::cout << provenance(cfg) << "\ntrain frames " << d.train.size() << ", dev frames " << d.dev.size() << '\n';
      const nn::TrainResult r = train_model(cfg, d, out);
      nn::write_training_csv(std::cout, r.log);
      if (r.diverged) {
        std::cerr << "training diverged; kept the last finite weights\n";
        return 2;
      }
    } else if (*eval_cl) {
      const std::vector<ScenarioKind> kinds = kind_names.empty() ? cfg.eval_kinds : parse_kinds(kind_names);
      const PolicyFactory f = make_policy_factory(weights.empty() ? (policy_name.empty() ? "expert" : policy_name) : weights, cfg);
      const auto rows = run_closed_loop(cfg, f, kinds, episodes > 0 ? episodes : cfg.eval_episodes, out);
      std::cout << provenance(cfg) << '\n';
      print_table(closed_loop_table(rows));
    } else if (*eval_ol) {
      const PolicyFactory f = make_policy_factory(weights.empty() ? (policy_name.empty() ? "expert" : policy_name) : weights, cfg);
      const auto rows = run_open_loop(cfg, f, out);
      std::cout << provenance(cfg) << '\n';
      print_table(open_loop_table(rows));
    } else if (*dump_grid) {
      SceneFrame frame;
      std::shared_ptr<const RoadMap> map;
      if (!data_dir.empty()) {
        LoadedDataset d = load_dataset(data_dir);
        if (d.dev.empty()) throw std::runtime_error("dataset has no dev frames");
        const std::size_t i = frame_index < 0 ? 0 : static_cast<std::size_t>(frame_index);
        if (i >= d.dev.size()) throw std::runtime_error("frame index out of range");
        frame = d.dev[i];
        map = d.maps.at(frame.map_id);
      } else {
        const auto kinds = parse_kinds({kind_name});
        const ScenarioMaps maps = build_maps(cfg);
        map = maps.for_kind(kinds[0]);
        const EpisodeConfig ep = sample_scenario(
            kinds[0], map, episode_seed(derive_seed(cfg.seed, "closed-loop"), kinds[0], episode_index), cfg.scenario);
        ExpertPolicy expert;
        SimConfig sim = cfg.sim;
        sim.extra_time = kPredictionHorizon + 0.1;
        const EpisodeResult r = run_episode(ep, expert, {}, sim);
        const auto frames = frames_from_log(r.state_log, ep.agents[0].route->route, map->id, 0);
        if (frames.empty()) throw std::runtime_error("episode too short for a complete frame");
        std::size_t best = 0;
        for (std::size_t i = 1; i < frames.size(); ++i)
          if (std::abs(frames[i].time - at_time) < std::abs(frames[best].time - at_time)) best = i;
        frame = frames[best];
      }
      const BevGrid grid = rasterize(frame, *map);
      for (int ch = 0; ch < kChannels; ++ch) {
        char name[32];
        std::snprintf(name, sizeof(name), "grid_ch%02d.pgm", ch);
        std::ofstream os(path_in(out, name), std::ios::binary);
        write_pgm(os, grid, ch);
      }
      std::cout << provenance(cfg) << "\nframe t=" << frame.time << " of sequence " << frame.sequence_id << ", "
                << kChannels << " channels written to " << out << '\n';
    } else if (*ablate) {
      const Table t = run_ablation(cfg, toggles, data_dir, out);
      std::cout << provenance(cfg) << '\n';
      print_table(t);
    } else if (*replay) {
      const auto kinds = parse_kinds({kind_name});
      const ScenarioMaps maps = build_maps(cfg);
      const EpisodeConfig ep = sample_scenario(
          kinds[0], maps.for_kind(kinds[0]), episode_seed(derive_seed(cfg.seed, "closed-loop"), kinds[0], episode_index),
          cfg.scenario);
      const PolicyFactory f = make_policy_factory(weights.empty() ? (policy_name.empty() ? "expert" : policy_name) : weights, cfg);
      auto policy = f();
      const EpisodeResult r = run_episode(ep, *policy, {}, cfg.sim);
      {
        std::ofstream os(path_in(out, "episode.log"));
        os << "# " << provenance(cfg) << "\n# " << scenario_name(kinds[0]) << " episode " << episode_index << ' '
           << termination_name(r.termination) << "\n# tick id x y heading speed\n";
        write_episode_log(os, r);
      }
      std::ofstream os(path_in(out, "plans.csv"));
      os << "# " << provenance(cfg) << "\ntick,time,waypoint,x,y\n";
      for (std::size_t k = 0; k < r.plan_log.size(); ++k) {
        for (int j = 0; j < kWaypointCount; ++j) {
          const Vec2 p = r.plan_log[k].points[static_cast<std::size_t>(j)];
          char buf[128];
          std::snprintf(buf, sizeof(buf), "%zu,%.3f,%d,%.6f,%.6f\n", k, r.state_log[k].time, j + 1, p.x, p.y);
          os << buf;
        }
      }
      std::cout << provenance(cfg) << '\n'
                << scenario_name(kinds[0]) << " episode " << episode_index << ": " << termination_name(r.termination)
                << ", " << r.duration << " s\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
