#include "rondo/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "rondo/rng.hpp"

namespace rondo {

RunConfig::RunConfig() {
  for (const ScenarioKind k : kTrainingScenarioKinds)
    mix.push_back({k, k == ScenarioKind::RandomTraffic ? 3.0 : 1.0});
  eval_kinds.assign(std::begin(kAllScenarioKinds), std::end(kAllScenarioKinds));
}

RunConfig preset_config(Preset p) {
  RunConfig c;
  if (p == Preset::paper) {
    c.sequences = 3000;
    c.train_frames = 240000;
    c.dev_frames = 37000;
    c.network.input_size = 256;
    c.network.stage_channels = {16, 32, 32, 32};
    c.training.pool = 1;
    c.training.epochs = 50;
    c.training.batch = 256;
    c.augment.p_flip = 0.01;
    c.eval_episodes = 200;
  }
  return c;
}

Preset parse_preset(const std::string& name) {
  if (name == "desk") return Preset::desk;
  if (name == "paper") return Preset::paper;
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

std::string format_mix(const std::vector<ScenarioWeight>& mix) {
  std::ostringstream os;
  for (std::size_t i = 0; i < mix.size(); ++i) os << (i ? "," : "") << scenario_name(mix[i].kind) << ':' << mix[i].weight;
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError("expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0) throw ConfigError("expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // shortest form that round-trips
  for (int p = 1; p <= 17; ++p) {
    char t[64];
    std::snprintf(t, sizeof(t), "%.*g", p, v);
    if (std::strtod(t, nullptr) == v) return t;
  }
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

struct Key {
  std::string name;
  bool published;  // default has a published value
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define DBL(name, field, published)                                                  \
  Key {                                                                          \
    name, published, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const RunConfig& c) { return fmt(c.field); }                          \
  }
#define INT(name, field, published)                                                                      \
  Key {                                                                                              \
    name, published, [](RunConfig& c, const std::string& v) { c.field = static_cast<decltype(c.field)>(to_int(v)); }, \
        [](const RunConfig& c) { return std::to_string(c.field); }                                   \
  }
#define BOOL(name, field, published)                                               \
  Key {                                                                        \
    name, published, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      INT("run.seed", seed, false),

      DBL("map.ring_radius", roundabout.ring_radius, false),
      INT("map.arm_count", roundabout.arm_count, false),
      DBL("map.arm_length", roundabout.arm_length, false),
      DBL("map.lane_width", roundabout.lane_width, false),
      DBL("map.rural_length", rural_length, false),
      Key{"map.rural_curvature", false,
          [](RunConfig& c, const std::string& v) {
            c.rural_curvature.clear();
            for (const std::string& s : split(v, ',')) c.rural_curvature.push_back(to_double(s));
          },
          [](const RunConfig& c) { return fmt_list(c.rural_curvature); }},

      Key{"scenarios.mix", false, [](RunConfig& c, const std::string& v) { c.mix = parse_mix(v); },
          [](const RunConfig& c) { return format_mix(c.mix); }},
      DBL("scenarios.sdv_speed_lo", scenario.sdv_speed_lo, false),
      DBL("scenarios.sdv_speed_hi", scenario.sdv_speed_hi, false),
      DBL("scenarios.goal_lo", scenario.goal_lo, false),
      DBL("scenarios.goal_hi", scenario.goal_hi, false),
      INT("scenarios.random_traffic_max", scenario.random_traffic_max, false),
      DBL("scenarios.max_duration", scenario.max_duration, false),
      BOOL("scenarios.sample_dims", scenario.sample_dims, true),
      DBL("scenarios.criterion_s0", scenario.criterion_s0, false),
      DBL("scenarios.criterion_T", scenario.criterion_T, false),
      DBL("scenarios.criterion_hold", scenario.criterion_hold, true),

      INT("data.sequences", sequences, false),
      INT("data.train_frames", train_frames, false),
      INT("data.dev_frames", dev_frames, false),
      DBL("data.split_ratio", split_ratio, true),

      BOOL("augment.rotate", augment.rotate, true),
      BOOL("augment.translate", augment.translate, true),
      BOOL("augment.bitflip", augment.bitflip, true),
      BOOL("augment.dims", augment.dims, true),
      BOOL("augment.offroad", augment.offroad, true),
      DBL("augment.p_rotate", augment.p_rotate, true),
      DBL("augment.p_translate", augment.p_translate, true),
      DBL("augment.rot_range_deg", augment.rot_range_deg, true),
      DBL("augment.trans_range", augment.trans_range, true),
      DBL("augment.p_flip", augment.p_flip, false),
      DBL("augment.dims_length_lo", augment.dims_length_lo, true),
      DBL("augment.dims_length_hi", augment.dims_length_hi, true),
      DBL("augment.dims_width_lo", augment.dims_width_lo, true),
      DBL("augment.dims_width_hi", augment.dims_width_hi, true),
      DBL("augment.p_offroad_sequence", augment.p_offroad_sequence, false),
      INT("augment.offroad_lo", augment.offroad_lo, false),
      INT("augment.offroad_hi", augment.offroad_hi, false),
      DBL("augment.offroad_distance_lo", augment.offroad_distance_lo, false),
      DBL("augment.offroad_distance_hi", augment.offroad_distance_hi, false),

      INT("network.input_size", network.input_size, false),
      INT("network.adapter_channels", network.adapter_channels, false),
      Key{"network.stage_channels", false,
          [](RunConfig& c, const std::string& v) {
            c.network.stage_channels.clear();
            for (const std::string& s : split(v, ',')) c.network.stage_channels.push_back(static_cast<int>(to_int(s)));
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.network.stage_channels.size(); ++i)
              s += (i ? "," : "") + std::to_string(c.network.stage_channels[i]);
            return s;
          }},
      INT("network.latent_channels", network.latent_channels, false),
      INT("network.head_channels", network.head_channels, true),
      INT("network.hidden", network.hidden, true),
      INT("network.pred_hidden", network.pred_hidden, true),

      DBL("loss.lambda_pos", loss.lambda_pos, true),
      DBL("loss.lambda_vel", loss.lambda_vel, true),
      DBL("loss.lambda_class", loss.lambda_class, true),
      DBL("loss.lambda_reg", loss.lambda_reg, true),
      DBL("loss.focal_alpha", loss.focal_alpha, true),
      DBL("loss.focal_gamma", loss.focal_gamma, true),
      DBL("loss.huber_delta", loss.huber_delta, false),

      INT("training.epochs", training.epochs, false),
      INT("training.batch", training.batch, false),
      DBL("training.lr", training.lr, true),
      DBL("training.lr_decay", training.lr_decay, true),
      DBL("training.weight_decay", training.weight_decay, false),
      INT("training.pool", training.pool, false),
      INT("training.dev_limit", training.dev_limit, false),
      BOOL("training.mean_plan_bias", training.mean_plan_bias, false),

      DBL("controller.control_time", sim.controller.control_time, true),
      DBL("controller.speed_gain", sim.controller.speed_gain, false),
      DBL("controller.heading_gain", sim.controller.heading_gain, false),
      DBL("controller.min_target_distance", sim.controller.min_target_distance, false),

      DBL("evaluation.offroad_limit", sim.offroad_limit, false),
      INT("evaluation.episodes", eval_episodes, false),
      INT("evaluation.snippet_sequences", snippet_sequences, false),
      Key{"evaluation.kinds", false,
          [](RunConfig& c, const std::string& v) {
            c.eval_kinds.clear();
            for (const std::string& s : split(v, ',')) {
              const auto k = parse_scenario(s);
              if (!k) throw ConfigError("unknown scenario kind '" + s + "'");
              c.eval_kinds.push_back(*k);
            }
          },
          [](const RunConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.eval_kinds.size(); ++i) s += (i ? "," : "") + std::string(scenario_name(c.eval_kinds[i]));
            return s;
          }},
  };
  return table;
}

#undef DBL
#undef INT
#undef BOOL

}  // namespace

std::vector<ScenarioWeight> parse_mix(const std::string& text) {
  std::vector<ScenarioWeight> mix;
  for (const std::string& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const std::string name = trim(item.substr(0, colon));
    const auto k = parse_scenario(name);
    if (!k) throw ConfigError("unknown scenario kind '" + name + "'");
    const double w = colon == std::string::npos ? 1.0 : to_double(trim(item.substr(colon + 1)));
    if (!(w >= 0.0)) throw ConfigError("scenario weight must be non-negative");
    mix.push_back({*k, w});
  }
  if (mix.empty()) throw ConfigError("scenario mix is empty");
  return mix;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* found = nullptr;
    for (const Key& k : keys())
      if (k.name == key) found = &k;
    if (!found) throw ConfigError(where() + "unknown key '" + key + "'");
    try {
      found->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + key + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::string config_template() {
  const RunConfig defaults;
  std::string out = "# rondo run configuration: section.key = value\n";
  std::string section;
  for (const Key& k : keys()) {
    const std::string sec = k.name.substr(0, k.name.find('.'));
    if (sec != section) {
      out += "\n";
      section = sec;
    }
    out += k.name + " = " + k.get(defaults);
    if (!k.published) out += "  # default, not from paper";
    out += "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(dump_config(cfg))));
  return buf;
}

}  // namespace rondo
