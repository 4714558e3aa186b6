#include "rondo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "rondo/rng.hpp"

namespace rondo {

WaypointPlan waypoint_label(const SceneFrame& frame) {
  const Pose2 pose = frame.sdv_pose();
  WaypointPlan p;
  for (int k = 0; k < kWaypointCount; ++k)
    p.points[static_cast<std::size_t>(k)] = pose.to_local(frame.sdv_future[static_cast<std::size_t>(k)].position());
  return p;
}

namespace {

constexpr int kTicksPerStep = 2;  // 0.2 s at 10 Hz
constexpr int kHistoryTicks = kTicksPerStep * (kHistorySlots - 1);
constexpr int kFutureTicks = kTicksPerStep * kWaypointCount;

const AgentSnapshot* find_id(const TickRecord& r, int id) {
  for (const AgentSnapshot& a : r.agents)
    if (a.id == id) return &a;
  return nullptr;
}

const AgentSnapshot* find_sdv(const TickRecord& r) {
  for (const AgentSnapshot& a : r.agents)
    if (a.role == AgentRole::sdv) return &a;
  return nullptr;
}

}  // namespace

std::vector<SceneFrame> frames_from_log(std::span<const TickRecord> log, const Route& route, const std::string& map_id,
                                        std::uint64_t sequence_id) {
  std::vector<SceneFrame> out;
  const int n = static_cast<int>(log.size());
  for (int k = kHistoryTicks; k + kFutureTicks < n; ++k) {
    const TickRecord& now = log[static_cast<std::size_t>(k)];
    const AgentSnapshot* sdv = find_sdv(now);
    if (!sdv) continue;
    SceneFrame f;
    f.sequence_id = sequence_id;
    f.tick = k;
    f.time = now.time;
    f.map_id = map_id;
    f.route = route;
    f.sdv.id = sdv->id;
    f.sdv.dims = sdv->dims;
    bool complete = true;
    for (int slot = 0; slot < kHistorySlots; ++slot) {
      const AgentSnapshot* s = find_sdv(log[static_cast<std::size_t>(k - kTicksPerStep * slot)]);
      if (!s) {
        complete = false;
        break;
      }
      f.sdv.history[static_cast<std::size_t>(slot)] = s->state;
      f.sdv.present[static_cast<std::size_t>(slot)] = true;
    }
    for (int j = 1; j <= kWaypointCount && complete; ++j) {
      const AgentSnapshot* s = find_sdv(log[static_cast<std::size_t>(k + kTicksPerStep * j)]);
      if (!s) complete = false;
      else f.sdv_future[static_cast<std::size_t>(j - 1)] = s->state;
    }
    if (!complete) continue;
    for (const AgentSnapshot& a : now.agents) {
      if (a.role == AgentRole::sdv) continue;
      TrackedObject obj;
      obj.id = a.id;
      obj.dims = a.dims;
      for (int slot = 0; slot < kHistorySlots; ++slot) {
        if (const AgentSnapshot* s = find_id(log[static_cast<std::size_t>(k - kTicksPerStep * slot)], a.id)) {
          obj.history[static_cast<std::size_t>(slot)] = s->state;
          obj.present[static_cast<std::size_t>(slot)] = true;
        }
      }
      f.traffic.push_back(obj);
    }
    for (const AgentSnapshot& a : log[static_cast<std::size_t>(k + kFutureTicks)].agents)
      if (a.role != AgentRole::sdv) f.traffic_future.push_back({a.id, a.dims, a.state});
    out.push_back(std::move(f));
  }
  return out;
}

CaptureResult capture_sequence(const EpisodeConfig& config, std::uint64_t sequence_id, const SimConfig& sim,
                               const ExpertPolicyConfig& expert) {
  SimConfig sc = sim;
  sc.extra_time = std::max(sc.extra_time, kPlanHorizon + 0.05);
  ExpertPolicy policy(expert);
  const EpisodeResult res = run_episode(config, policy, {}, sc);
  CaptureResult out;
  out.termination = res.termination;
  if (res.termination == Termination::fault || res.termination == Termination::collision ||
      res.termination == Termination::offroad) {
    std::fprintf(stderr, "warning: sequence %llu (%s, seed %llu) dropped: %s\n",
                 static_cast<unsigned long long>(sequence_id), std::string(scenario_name(config.kind)).c_str(),
                 static_cast<unsigned long long>(config.seed), std::string(termination_name(res.termination)).c_str());
    out.dropped = true;
    return out;
  }
  out.frames = frames_from_log(res.state_log, config.agents[0].route->route, config.map->id, sequence_id);
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t DatasetManifest::frame_total() const {
  std::uint64_t n = 0;
  for (const auto& s : sequences) n += s.frame_count;
  return n;
}

std::uint64_t DatasetManifest::selected_total(const std::string& split) const {
  std::uint64_t n = 0;
  for (const auto& s : sequences)
    if (s.split == split) n += s.selected.size();
  return n;
}

DatasetManifest split_and_subsample(DatasetManifest m, const std::vector<std::vector<std::int32_t>>& frame_ticks,
                                    double ratio, std::uint64_t train_target, std::uint64_t dev_target,
                                    std::uint64_t seed) {
  const std::size_t n = m.sequences.size();
  if (frame_ticks.size() != n) throw DatasetError("frame tick lists do not match the sequence count");
  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    SequenceInfo& s = m.sequences[order[i]];
    s.split = i < n_train ? "train" : "dev";
    s.frame_count = static_cast<std::uint32_t>(frame_ticks[order[i]].size());
    s.selected.clear();
  }
  m.train_target = train_target;
  m.dev_target = dev_target;

  for (const std::string split : {"train", "dev"}) {
    const std::uint64_t target = split == "train" ? train_target : dev_target;
    std::vector<std::pair<std::size_t, std::int32_t>> pool;
    for (std::size_t i = 0; i < n; ++i)
      if (m.sequences[i].split == split)
        for (const std::int32_t t : frame_ticks[i]) pool.emplace_back(i, t);
    std::size_t keep = pool.size();
    if (target > pool.size()) {
      std::fprintf(stderr, "warning: %s target %llu exceeds %zu available frames, taking all\n", split.c_str(),
                   static_cast<unsigned long long>(target), pool.size());
    } else {
      keep = static_cast<std::size_t>(target);
      Rng pick(derive_seed(seed, "subsample-" + split));
      for (std::size_t i = 0; i < keep; ++i) {
        const auto j = i + static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(pool.size() - i) - 1));
        std::swap(pool[i], pool[j]);
      }
      pool.resize(keep);
    }
    for (const auto& [seq, tick] : pool) m.sequences[seq].selected.push_back(tick);
  }
  for (SequenceInfo& s : m.sequences) std::sort(s.selected.begin(), s.selected.end());
  return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DatasetError("cannot write " + path);
  os << "# rondo dataset manifest\n";
  os << "format RONDODS1 " << m.version << '\n';
  os << "generator_seed " << m.generator_seed << '\n';
  os << "config_hash " << (m.config_hash.empty() ? "-" : m.config_hash) << '\n';
  os << "train_target " << m.train_target << '\n';
  os << "dev_target " << m.dev_target << '\n';
  os << "sequences " << m.sequences.size() << '\n';
  for (const SequenceInfo& s : m.sequences) {
    os << "sequence " << s.id << ' ' << s.kind << ' ' << s.seed << ' ' << s.frame_count << ' '
       << (s.split.empty() ? "-" : s.split) << ' ' << s.selected.size();
    for (const std::int32_t t : s.selected) os << ' ' << t;
    os << '\n';
  }
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot read " + path);
  DatasetManifest m;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DatasetError(path + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string magic;
      ls >> magic >> m.version;
      if (magic != "RONDODS1") fail("unknown format '" + magic + "'");
    } else if (key == "generator_seed") {
      ls >> m.generator_seed;
    } else if (key == "config_hash") {
      ls >> m.config_hash;
      if (m.config_hash == "-") m.config_hash.clear();
    } else if (key == "train_target") {
      ls >> m.train_target;
    } else if (key == "dev_target") {
      ls >> m.dev_target;
    } else if (key == "sequences") {
      std::size_t n = 0;
      ls >> n;
      m.sequences.reserve(n);
    } else if (key == "sequence") {
      SequenceInfo s;
      std::size_t count = 0;
      ls >> s.id >> s.kind >> s.seed >> s.frame_count >> s.split >> count;
      if (s.split == "-") s.split.clear();
      s.selected.resize(count);
      for (auto& t : s.selected) ls >> t;
      m.sequences.push_back(std::move(s));
    } else {
      fail("unknown key '" + key + "'");
    }
    if (ls.fail()) fail("malformed line");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Binary frame container: magic, version, frame count, then records.

namespace {

constexpr char kMagic[8] = {'R', 'O', 'N', 'D', 'O', 'D', 'S', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  void state(const VehicleState& s) {
    put(s.x);
    put(s.y);
    put(s.heading);
    put(s.speed);
  }
  void dims(const VehicleDims& d) {
    put(d.length);
    put(d.width);
  }
  void object(const TrackedObject& o) {
    put<std::int32_t>(o.id);
    dims(o.dims);
    for (int k = 0; k < kHistorySlots; ++k) {
      put<std::uint8_t>(o.present[static_cast<std::size_t>(k)] ? 1 : 0);
      state(o.history[static_cast<std::size_t>(k)]);
    }
  }
  std::string out;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : data_(bytes) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) fail("truncated record");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  VehicleState state() {
    VehicleState s;
    s.x = get<double>();
    s.y = get<double>();
    s.heading = get<double>();
    s.speed = get<double>();
    return s;
  }
  VehicleDims dims() {
    VehicleDims d;
    d.length = get<double>();
    d.width = get<double>();
    return d;
  }
  TrackedObject object() {
    TrackedObject o;
    o.id = get<std::int32_t>();
    o.dims = dims();
    for (int k = 0; k < kHistorySlots; ++k) {
      const auto flag = get<std::uint8_t>();
      if (flag > 1) fail("bad presence flag");
      o.present[static_cast<std::size_t>(k)] = flag == 1;
      o.history[static_cast<std::size_t>(k)] = state();
    }
    return o;
  }
  std::uint32_t count(std::uint32_t limit, const char* what) {
    const auto n = get<std::uint32_t>();
    if (n > limit) fail(std::string("implausible ") + what + " count");
    return n;
  }
  std::string text(std::size_t n) {
    if (pos_ + n > data_.size()) fail("truncated string");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DatasetError("dataset format error at byte " + std::to_string(pos_) + ": " + msg);
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_frames(const std::vector<SceneFrame>& frames) {
  Writer w;
  w.out.append(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint64_t>(frames.size());
  for (const SceneFrame& f : frames) {
    w.put<std::uint64_t>(f.sequence_id);
    w.put<std::int32_t>(f.tick);
    w.put<double>(f.time);
    w.object(f.sdv);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.traffic.size()));
    for (const TrackedObject& o : f.traffic) w.object(o);
    for (const VehicleState& s : f.sdv_future) w.state(s);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.traffic_future.size()));
    for (const FutureObject& o : f.traffic_future) {
      w.put<std::int32_t>(o.id);
      w.dims(o.dims);
      w.state(o.state);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.map_id.size()));
    w.out += f.map_id;
    w.put<std::uint32_t>(static_cast<std::uint32_t>(f.route.lane_sequence.size()));
    for (const int l : f.route.lane_sequence) w.put<std::int32_t>(l);
    w.put<double>(f.route.goal_s);
    w.put<double>(f.route.start_s);
  }
  return std::move(w.out);
}

std::vector<SceneFrame> decode_frames(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.text(sizeof(kMagic));
  if (magic != std::string(kMagic, sizeof(kMagic))) throw DatasetError("dataset format error at byte 0: bad magic header");
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion) r.fail("unsupported version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>();
  if (n > bytes.size()) r.fail("implausible frame count");
  std::vector<SceneFrame> frames;
  frames.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    SceneFrame f;
    f.sequence_id = r.get<std::uint64_t>();
    f.tick = r.get<std::int32_t>();
    f.time = r.get<double>();
    f.sdv = r.object();
    const auto nt = r.count(100000, "traffic");
    for (std::uint32_t k = 0; k < nt; ++k) f.traffic.push_back(r.object());
    for (VehicleState& s : f.sdv_future) s = r.state();
    const auto nf = r.count(100000, "future object");
    for (std::uint32_t k = 0; k < nf; ++k) {
      FutureObject o;
      o.id = r.get<std::int32_t>();
      o.dims = r.dims();
      o.state = r.state();
      f.traffic_future.push_back(o);
    }
    f.map_id = r.text(r.count(4096, "map id byte"));
    const auto nl = r.count(4096, "route lane");
    for (std::uint32_t k = 0; k < nl; ++k) f.route.lane_sequence.push_back(r.get<std::int32_t>());
    f.route.goal_s = r.get<double>();
    f.route.start_s = r.get<double>();
    frames.push_back(std::move(f));
  }
  if (!r.done()) r.fail("trailing bytes after last frame");
  return frames;
}

void write_dataset(const std::vector<SceneFrame>& frames, const std::string& path) {
  const std::string bytes = encode_frames(frames);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DatasetError("cannot write " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DatasetError("write failed for " + path);
}

std::vector<SceneFrame> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_frames(ss.str());
}

}  // namespace rondo
