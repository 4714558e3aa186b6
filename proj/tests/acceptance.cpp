// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "rondo/augment.hpp"
#include "rondo/controller.hpp"
#include "rondo/dataset.hpp"
#include "rondo/metrics.hpp"
#include "rondo/nn/loss.hpp"
#include "rondo/nn/network.hpp"
#include "rondo/pipeline.hpp"
#include "rondo/raster.hpp"
#include "rondo/rng.hpp"
#include "rondo/sim.hpp"

#ifndef RONDO_CLI_PATH
#define RONDO_CLI_PATH "rondo"
#endif

namespace fs = std::filesystem;
using namespace rondo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

ScenarioMaps default_maps() { return build_maps(RunConfig{}); }

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rondo_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// ---------------------------------------------------------------------------

Outcome expert_gate() {
  const ScenarioMaps maps = default_maps();
  ClosedLoopOptions o;
  o.episodes = 200;
  o.seed = 20240601;
  const auto rows = eval_closed_loop([] { return std::make_unique<ExpertPolicy>(); }, kAllScenarioKinds, maps, o);
  Outcome out{true, ""};
  double worst = 1.0;
  std::string worst_kind;
  for (const ClosedLoopRow& r : rows) {
    const double s = r.rate(r.success);
    if (s < worst) worst = s, worst_kind = std::string(scenario_name(r.kind));
    if (s < 0.95) {
      out.pass = false;
      out.detail += fmt("%s %.3f; ", std::string(scenario_name(r.kind)).c_str(), s);
    }
  }
  out.detail += fmt("lowest success %.3f (%s) over 200 episodes per kind", worst, worst_kind.c_str());
  return out;
}

// ---------------------------------------------------------------------------
// Pixel oracle: every pixel centre is mapped back to the world and tested
// against the source geometry with point_in_polygon / segment distance.

enum : std::uint8_t { kOff = 0, kOn = 1, kUnsure = 2 };

struct PixelOracle {
  Pose2 pose;
  std::array<std::vector<std::uint8_t>, kChannels> expect;
  std::array<std::vector<std::uint8_t>, kChannels> inside;
  std::array<std::vector<std::uint8_t>, kChannels> near;

  explicit PixelOracle(const Pose2& p) : pose(p) {
    for (int ch = 0; ch < kChannels; ++ch) {
      inside[static_cast<std::size_t>(ch)].assign(kGridSize * kGridSize, 0);
      near[static_cast<std::size_t>(ch)].assign(kGridSize * kGridSize, 0);
    }
  }

  Vec2 world_of(int r, int c) const { return pose.to_world(from_pixel(r, c)); }

  // pixel-space bounding box of world points, padded by `pad` pixels
  void pixel_box(std::span<const Vec2> pts, double pad, int& r0, int& r1, int& c0, int& c1) const {
    double rl = 1e18, rh = -1e18, cl = 1e18, chh = -1e18;
    for (const Vec2 w : pts) {
      const Vec2 px = to_pixel(pose.to_local(w));
      rl = std::min(rl, px.x), rh = std::max(rh, px.x), cl = std::min(cl, px.y), chh = std::max(chh, px.y);
    }
    r0 = std::max(0, static_cast<int>(std::floor(rl - pad)));
    r1 = std::min(kGridSize - 1, static_cast<int>(std::ceil(rh + pad)));
    c0 = std::max(0, static_cast<int>(std::floor(cl - pad)));
    c1 = std::min(kGridSize - 1, static_cast<int>(std::ceil(chh + pad)));
  }

  void polygon(int ch, const Polygon& poly) {
    int r0, r1, c0, c1;
    pixel_box(poly, 1.0, r0, r1, c0, c1);
    auto& in = inside[static_cast<std::size_t>(ch)];
    auto& nr = near[static_cast<std::size_t>(ch)];
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const Vec2 w = world_of(r, c);
        const auto i = static_cast<std::size_t>(r * kGridSize + c);
        if (distance_to_polygon_boundary(poly, w) <= 0.5 * kCellSize) nr[i] = 1;
        else if (point_in_polygon(poly, w)) in[i] = 1;
      }
  }

  // a cell whose centre is within half a cell of the segment must be lit; one
  // further than half a diagonal cannot be
  void segment(int ch, Vec2 a, Vec2 b) {
    const Vec2 pts[2] = {a, b};
    int r0, r1, c0, c1;
    pixel_box(pts, 1.0, r0, r1, c0, c1);
    auto& in = inside[static_cast<std::size_t>(ch)];
    auto& nr = near[static_cast<std::size_t>(ch)];
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) {
        const double d = point_segment_distance(world_of(r, c), a, b) / kCellSize;
        const auto i = static_cast<std::size_t>(r * kGridSize + c);
        if (d < 0.5) in[i] = 1;
        else if (d <= 0.5 * std::sqrt(2.0) + 1e-9) nr[i] = 1;
      }
  }

  std::uint8_t state(int ch, int r, int c) const {
    const auto i = static_cast<std::size_t>(r * kGridSize + c);
    if (inside[static_cast<std::size_t>(ch)][i]) return kOn;
    return near[static_cast<std::size_t>(ch)][i] ? kUnsure : kOff;
  }
};

bool polygon_channel(int ch) { return ch != channel::solid && ch != channel::broken; }

Outcome raster_parity() {
  const ScenarioMaps maps = default_maps();
  SimConfig sim;
  sim.extra_time = kPredictionHorizon + 0.1;
  std::size_t compared = 0, mismatched = 0, skipped = 0;
  bool anchor_ok = true;
  std::string first_bad;
  for (int scene = 0; scene < 50; ++scene) {
    const ScenarioKind kind = kAllScenarioKinds[static_cast<std::size_t>(scene) % std::size(kAllScenarioKinds)];
    const EpisodeConfig ep = sample_scenario(kind, maps.for_kind(kind), derive_seed(777, static_cast<std::uint64_t>(scene)));
    ExpertPolicy expert;
    const EpisodeResult res = run_episode(ep, expert, {}, sim);
    const auto frames = frames_from_log(res.state_log, ep.agents[0].route->route, ep.map->id, 0);
    if (frames.empty()) return {false, fmt("scene %d produced no frame", scene)};
    const SceneFrame& f = frames[static_cast<std::size_t>(scene * 37) % frames.size()];
    const RoadMap& map = *ep.map;
    const BevGrid grid = rasterize(f, map);

    PixelOracle o(f.sdv_pose());
    for (int k = 0; k < kHistorySlots; ++k) {
      const auto slot = static_cast<std::size_t>(k);
      auto box = [](const VehicleState& s, const VehicleDims& d) {
        const auto c = footprint(s, d).corners();
        return Polygon(c.begin(), c.end());
      };
      if (f.sdv.present[slot]) o.polygon(channel::sdv + k, box(f.sdv.history[slot], f.sdv.dims));
      for (const TrackedObject& t : f.traffic)
        if (t.present[slot]) o.polygon(channel::traffic + k, box(t.history[slot], t.dims));
    }
    for (const Boundary& b : map.boundaries)
      for (std::size_t i = 1; i < b.line.size(); ++i)
        o.segment(b.kind == BoundaryKind::solid ? channel::solid : channel::broken, b.line[i - 1], b.line[i]);
    for (const Polygon& p : map.drivable) o.polygon(channel::drivable, p);
    for (const SpeedZone& z : map.speed_zones) o.polygon(channel::speed + static_cast<int>(z.cls), z.polygon);
    for (const Polygon& p : route_corridor(map, f.route)) o.polygon(channel::route, p);

    for (int ch = 0; ch < kChannels; ++ch)
      for (int r = 0; r < kGridSize; ++r)
        for (int c = 0; c < kGridSize; ++c) {
          const std::uint8_t want = o.state(ch, r, c);
          if (want == kUnsure) {
            ++skipped;
            continue;
          }
          ++compared;
          if (grid.get(ch, r, c) != (want == kOn)) {
            if (mismatched++ == 0) first_bad = fmt("scene %d ch %d (%d,%d)%s", scene, ch, r, c, polygon_channel(ch) ? "" : " line");
          }
        }

    // SDV footprint is centred on the anchor pixel
    double sr = 0, sc = 0;
    std::size_t n = 0;
    for (int r = 0; r < kGridSize; ++r)
      for (int c = 0; c < kGridSize; ++c)
        if (grid.get(channel::sdv, r, c)) sr += r, sc += c, ++n;
    if (n == 0 || std::abs(sr / n - kAnchorRow) > 0.5 || std::abs(sc / n - kAnchorCol) > 0.5 || !grid.get(channel::sdv, 84, 128))
      anchor_ok = false;
  }
  const Vec2 ahead = to_pixel({10.0, 0.0}), left = to_pixel({0.0, 1.0});
  const bool scale_ok = std::abs(ahead.x - 124.0) < 1e-12 && std::abs(left.y - 132.0) < 1e-12;
  Outcome out;
  out.pass = mismatched == 0 && anchor_ok && scale_ok;
  out.detail = fmt("%zu pixels compared, %zu within the edge band skipped, %zu mismatches", compared, skipped, mismatched);
  if (mismatched) out.detail += " (first: " + first_bad + ")";
  if (!anchor_ok) out.detail += "; SDV not centred on (84,128)";
  if (!scale_ok) out.detail += "; pixel scale is not 0.25 m";
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  nn::NetworkConfig cfg;
  cfg.input_size = 8;
  cfg.adapter_channels = 4;
  cfg.stage_channels = {6};
  cfg.latent_channels = 6;
  cfg.head_channels = 4;
  cfg.hidden = 8;
  cfg.pred_hidden = 4;
  nn::Network<double> net(cfg);
  net.init(12);
  Rng rng(99);
  const int B = 2, S = cfg.latent_size();
  std::vector<double> x(static_cast<std::size_t>(B * cfg.in_channels * cfg.input_size * cfg.input_size));
  for (auto& v : x) v = rng.uniform();
  std::vector<double> wl(static_cast<std::size_t>(B * nn::kWaypointOutputs));
  for (auto& v : wl) v = rng.uniform(-3.0, 3.0);
  std::vector<double> al(static_cast<std::size_t>(B * S * S * nn::kAnchorOutputs));
  for (std::size_t c = 0; c < al.size(); c += nn::kAnchorOutputs) {
    al[c] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    for (std::size_t f = 1; f < static_cast<std::size_t>(nn::kAnchorOutputs); ++f) al[c + f] = rng.uniform(-2.0, 2.0);
  }

  const char* names[4] = {"position", "velocity", "classification", "regression"};
  double worst_all = 0.0;
  std::string detail;
  for (int term = 0; term < 4; ++term) {
    nn::LossConfig lc;
    lc.lambda_pos = term == 0, lc.lambda_vel = term == 1, lc.lambda_class = term == 2, lc.lambda_reg = term == 3;
    auto loss = [&] {
      net.forward(B, x.data());
      return nn::compute_loss<double>(B, S, net.waypoints().data(), net.anchors().data(), wl.data(), al.data(), lc,
                                      nullptr, nullptr)
          .total;
    };
    net.forward(B, x.data());
    std::vector<double> dwp(net.waypoints().size()), dan(net.anchors().size());
    nn::compute_loss<double>(B, S, net.waypoints().data(), net.anchors().data(), wl.data(), al.data(), lc, dwp.data(),
                             dan.data());
    net.backward(dwp.data(), dan.data());
    double worst = 0.0, worst_a = 0.0, worst_fd = 0.0;
    std::size_t count = 0;
    for (auto& p : net.params())
      for (std::size_t j = 0; j < p.size(); ++j) {
        // fourth-order central stencil
        const double keep = p.value[j], h = 1e-5;
        auto at = [&](double d) {
          p.value[j] = keep + d;
          return loss();
        };
        const double fd = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
        p.value[j] = keep;
        // gradients under 1e-6 are below what differencing resolves; compare them absolutely
        const double denom = std::max({std::abs(fd), std::abs(p.grad[j]), 1e-6});
        const double rel = std::abs(fd - p.grad[j]) / denom;
        if (rel > worst) worst = rel, worst_a = p.grad[j], worst_fd = fd;
        ++count;
      }
    worst_all = std::max(worst_all, worst);
    detail += fmt("%s %.1e (%.3e vs %.3e), ", names[term], worst, worst_a, worst_fd);
    if (term == 3) detail += fmt("%zu parameters", count);
  }
  return {worst_all < 1e-4, "max relative error: " + detail};
}

// ---------------------------------------------------------------------------

Outcome training_effect() {
  RunConfig cfg = preset_config(Preset::desk);
  cfg.seed = 2024;
  const std::string root = scratch_dir("training");
  generate_dataset(cfg, root + "/data");
  LoadedDataset data = load_dataset(root + "/data");
  const std::size_t frames = data.train.size() + data.dev.size();

  const nn::TrainResult full = train_model(cfg, data, root + "/full");
  auto wp_loss = [&](const nn::LossTerms& t) { return cfg.loss.lambda_pos * t.pos + cfg.loss.lambda_vel * t.vel; };
  const double init = wp_loss(full.log.front().dev), final_loss = wp_loss(full.log.back().dev);
  const double drop = 1.0 - final_loss / init;

  const std::vector<ScenarioKind> random{ScenarioKind::RandomTraffic};
  const auto learned = run_closed_loop(cfg, make_policy_factory(root + "/full/weights.rwt", cfg), random, 100, "");
  // the network as training starts: seeded weights with the mean-plan output bias
  const auto untrained = run_closed_loop(cfg, make_policy_factory(root + "/full/init.rwt", cfg), random, 100, "");

  LoadedDataset ablated = data;
  exclude_kinds(ablated, {ScenarioKind::StopBehind});
  train_model(cfg, ablated, root + "/no-stop-behind");
  const std::vector<ScenarioKind> stopping{ScenarioKind::StopBehind};
  const auto with = run_closed_loop(cfg, make_policy_factory(root + "/full/weights.rwt", cfg), stopping, 100, "");
  const auto without =
      run_closed_loop(cfg, make_policy_factory(root + "/no-stop-behind/weights.rwt", cfg), stopping, 100, "");
  const ProportionTest t = proportion_increase_test(with[0].collision, with[0].episodes, without[0].collision,
                                                    without[0].episodes);

  const bool loss_ok = drop >= 0.5 && !full.diverged;
  const bool random_ok = learned[0].collision < untrained[0].collision;
  const bool ablation_ok = t.p_value < 0.05;
  Outcome out;
  out.pass = loss_ok && random_ok && ablation_ok;
  out.detail = fmt("%zu frames; dev waypoint loss %.3f -> %.3f (-%.0f%%)%s; random-traffic collisions learned %.2f vs "
                   "untrained %.2f%s; stop-behind collisions %.2f -> %.2f without it in training, p = %.3g%s",
                   frames, init, final_loss, 100 * drop, loss_ok ? "" : " [fail]", learned[0].rate(learned[0].collision),
                   untrained[0].rate(untrained[0].collision), random_ok ? "" : " [fail]", with[0].rate(with[0].collision),
                   without[0].rate(without[0].collision), t.p_value, ablation_ok ? "" : " [fail]");
  return out;
}

// ---------------------------------------------------------------------------

Outcome augmentation_stats() {
  const AugmentConfig cfg;
  std::string detail;
  bool pass = true;
  for (const double p : {cfg.p_flip, 0.01}) {
    Rng rng(derive_seed(5, static_cast<std::uint64_t>(p * 1e6)));
    std::size_t flipped = 0;
    const int reps = 40;
    for (int i = 0; i < reps; ++i) {
      BevGrid g;
      aug_bitflip(g, p, rng);
      flipped += g.count();
    }
    const double n = static_cast<double>(reps) * kChannels * kGridSize * kGridSize;
    const double z = (static_cast<double>(flipped) - n * p) / std::sqrt(n * p * (1 - p));
    pass = pass && std::abs(z) <= 3.0;
    detail += fmt("bitflip p=%g: fraction %.6f (%.2f sigma); ", p, flipped / n, z);
  }

  Rng rng(8);
  Agent a;
  const int n = 200000;
  double sl = 0, sw = 0, lo_l = 1e9, hi_l = -1e9, lo_w = 1e9, hi_w = -1e9;
  for (int i = 0; i < n; ++i) {
    const Agent b = aug_dims(a, rng, cfg);
    sl += b.dims.length, sw += b.dims.width;
    lo_l = std::min(lo_l, b.dims.length), hi_l = std::max(hi_l, b.dims.length);
    lo_w = std::min(lo_w, b.dims.width), hi_w = std::max(hi_w, b.dims.width);
  }
  const double ml = sl / n, mw = sw / n;
  const bool dims_ok = lo_l >= 4.0 && hi_l <= 6.0 && lo_w >= 1.0 && hi_w <= 3.0 && std::abs(ml - 5.0) <= 0.05 &&
                       std::abs(mw - 2.0) <= 0.02;
  pass = pass && dims_ok;
  detail += fmt("dims length [%.3f, %.3f] mean %.4f, width [%.3f, %.3f] mean %.4f", lo_l, hi_l, ml, lo_w, hi_w, mw);
  return {pass, detail};
}

// ---------------------------------------------------------------------------

WaypointPlan line_plan(double speed) {
  WaypointPlan p;
  for (int k = 0; k < kWaypointCount; ++k) p.points[static_cast<std::size_t>(k)] = {speed * kWaypointDt * (k + 1), 0.0};
  return p;
}

Outcome metric_fixed_points() {
  std::vector<std::string> bad;

  // stationary SDV repeating its standstill plan, through a real episode log
  {
    PlanLog log;
    for (int i = 0; i < 40; ++i) log.push_back({0.1 * i, WaypointPlan{}, Pose2{{3.0, -1.0}, 0.4}});
    const TpiResult r = temporal_plan_instability(log);
    if (r.values.size() != 38 || r.mean != 0.0) bad.push_back("tpi of a stationary SDV");
  }
  // compared points (3, 4) m apart
  {
    PlanLog log(2);
    log[0] = {0.0, line_plan(5.0), Pose2{}};
    log[1] = {0.2, line_plan(5.0), Pose2{}};
    log[1].plan.points[kWaypointCount - 2] = log[0].plan.points[kWaypointCount - 1] + Vec2{3.0, 4.0};
    const TpiResult r = temporal_plan_instability(log);
    if (r.values.size() != 1 || std::abs(r.values[0] - 5.0) > 1e-12) bad.push_back("tpi (3,4) -> 5");
  }
  // expert at constant speed on a straight road replans consistently
  {
    auto road = std::make_shared<const RoadMap>(synthesize_rural_road(500.0, {0.0}, "straight"));
    EpisodeConfig ep = sample_scenario(ScenarioKind::HighSpeedRural, road, 3);
    ep.agents.resize(1);
    ep.agents[0].state.speed = std::min(ep.agents[0].idm.v0, ep.agents[0].route->limit_at(0.0));
    ep.max_duration = 10.0;
    ExpertPolicy expert;
    const EpisodeResult r = run_episode(ep, expert);
    const TpiResult t = temporal_plan_instability(plan_log_of(r));
    if (!(t.mean < 0.05)) bad.push_back(fmt("expert straight-road tpi %.3f", t.mean));
  }
  // inverse TTC
  {
    const VehicleState sdv{0.0, 0.0, 0.0, 10.0};
    const VehicleDims dims{4.0, 2.0};
    const WaypointPlan plan = line_plan(10.0);
    if (waypoints_inverse_ttc(plan, sdv, dims, {}) != 0.0) bad.push_back("inverse TTC without traffic");
    const std::vector<OrientedBox> beside{{{12.0, 5.0}, 0.0, 4.0, 2.0}};
    if (waypoints_inverse_ttc(plan, sdv, dims, beside) != 0.0) bad.push_back("inverse TTC of a clear plan");
    for (int k = 1; k <= kWaypointCount; ++k) {
      const double rear = 2.0 * (k - 1) + 2.0 + 0.5;  // just past the SDV front at waypoint k-1
      const std::vector<OrientedBox> ahead{{{rear + 1.0, 0.0}, 0.0, 2.0, 2.0}};
      if (std::abs(waypoints_inverse_ttc(plan, sdv, dims, ahead) - 1.0 / (k * 0.2)) > 1e-12)
        bad.push_back(fmt("inverse TTC at waypoint %d", k));
    }
  }
  // standstill threshold
  {
    WaypointPlan p;
    p.points[0] = {0.1, 0.0};
    const bool at = classify_standstill(p);
    p.points[0] = {std::nextafter(0.1, 0.0), 0.0};
    const bool below = classify_standstill(p);
    if (at || !below) bad.push_back("standstill threshold");
    if (!classify_standstill(WaypointPlan{})) bad.push_back("zero plan is standstill");
  }
  std::string detail = bad.empty() ? "tpi, inverse TTC and standstill fixed points hold" : "failed:";
  for (const auto& b : bad) detail += " " + b + ";";
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome controller_fidelity() {
  std::vector<std::string> bad;
  // knots
  double knot_err = 0.0;
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    WaypointPlan p;
    Vec2 at{};
    for (auto& q : p.points) at = q = at + Vec2{rng.uniform(0.0, 3.0), rng.uniform(-0.5, 0.5)};
    const SplineTrajectory s = fit_spline(p);
    for (int k = 0; k < kWaypointCount; ++k)
      knot_err = std::max(knot_err, norm(s.position(kWaypointDt * (k + 1)) - p.points[static_cast<std::size_t>(k)]));
  }
  if (knot_err > 1e-12) bad.push_back(fmt("knot error %.2e", knot_err));

  // expert plans tracked in an empty world
  const ScenarioMaps maps = default_maps();
  double sq = 0.0;
  std::size_t n = 0;
  int failed = 0;
  for (int i = 0; i < 20; ++i) {
    const ScenarioKind kind = i % 2 ? ScenarioKind::RandomTraffic : ScenarioKind::HighSpeedRural;
    EpisodeConfig ep = sample_scenario(kind, maps.for_kind(kind), derive_seed(31, static_cast<std::uint64_t>(i)));
    ep.agents.resize(1);
    ExpertPolicy expert;
    const EpisodeResult r = run_episode(ep, expert);
    failed += !r.success();
    for (const SdvTick& t : r.sdv_log) sq += t.lateral * t.lateral, ++n;
  }
  const double rms = std::sqrt(sq / std::max<std::size_t>(n, 1));
  if (!(rms < 0.2)) bad.push_back(fmt("lateral RMS %.3f m", rms));
  if (failed) bad.push_back(fmt("%d empty-world episodes failed", failed));

  // the commands read the trajectory at 0.4 s: moving the 0.4 s waypoint moves
  // them, moving the horizon waypoint barely does
  ControllerConfig cc;
  const VehicleState st{0.0, 0.0, 0.0, 8.0};
  const WaypointPlan base = line_plan(8.0);
  WaypointPlan near = base, far = base;
  near.points[1].y += 0.3;
  far.points[kWaypointCount - 1].y += 0.3;
  const double s_near = track(near, st, cc).steer, s_far = track(far, st, cc).steer;
  if (!(s_near > 0.0 && std::abs(s_far) < 0.05 * s_near)) bad.push_back(fmt("steer near %.4f far %.4f", s_near, s_far));
  near = base, far = base;
  near.points[1].x += 0.4;
  far.points[kWaypointCount - 1].x += 0.4;
  const double a_near = track(near, st, cc).accel, a_far = track(far, st, cc).accel;
  if (!(std::abs(a_near) > 0.01 && std::abs(a_far) < 0.05 * std::abs(a_near))) bad.push_back(fmt("accel near %.4f far %.4f", a_near, a_far));
  // proportional speed law evaluated exactly at the control time
  for (int trial = 0; trial < 50; ++trial) {
    WaypointPlan p;
    Vec2 at{};
    for (auto& q : p.points) at = q = at + Vec2{rng.uniform(0.5, 3.0), rng.uniform(-0.3, 0.3)};
    const SplineTrajectory s = fit_spline(p);
    const double v = rng.uniform(0.0, 12.0);
    const double want = std::clamp(cc.speed_gain * (s.speed(0.4) - v), -kMaxDecel, kMaxAccel);
    if (std::abs(track(p, VehicleState{0, 0, 0, v}, cc).accel - want) > 1e-9) {
      bad.push_back("speed law not evaluated at 0.4 s");
      break;
    }
  }
  ControllerConfig unit_gain = cc;
  unit_gain.speed_gain = 1.0;
  const double two_faster = track(line_plan(7.0), VehicleState{0, 0, 0, 5.0}, unit_gain).accel;
  if (std::abs(two_faster - 2.0) > 1e-9) bad.push_back(fmt("2 m/s faster with k_v=1 gave %.4f", two_faster));

  std::string detail = fmt("knot error %.1e, lateral RMS %.3f m over %zu ticks, steer near/far %.4f/%.4f, accel near/far "
                           "%.4f/%.4f", knot_err, rms, n, s_near, s_far, a_near, a_far);
  for (const auto& b : bad) detail += "; " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------

std::string read_all(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::map<std::string, std::string> tree(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_all(e.path());
  return out;
}

Outcome determinism() {
  const std::string root = scratch_dir("determinism");
  const std::string cfg_path = root + "/small.cfg";
  std::ofstream(cfg_path) << "data.sequences = 16\ndata.train_frames = 400\ndata.dev_frames = 100\n"
                             "training.epochs = 2\nevaluation.episodes = 6\nevaluation.kinds = random-traffic,stop-behind\n";
  const std::string cli = RONDO_CLI_PATH;
  for (const char* run : {"a", "b"}) {
    const std::string out = root + "/" + run;
    const std::string common = " --config " + cfg_path + " --seed 77 ";
    const std::string cmds[3] = {
        cli + " gen-data" + common + "-o " + out + "/data",
        cli + " train" + common + "--data " + out + "/data -o " + out + "/train",
        cli + " eval-cl" + common + "--weights " + out + "/train/weights.rwt -o " + out + "/eval",
    };
    for (const std::string& c : cmds)
      if (std::system((c + " > " + out + ".log 2>&1").c_str()) != 0) return {false, "command failed: " + c};
  }
  std::string detail;
  bool pass = true;
  for (const char* stage : {"data", "train", "eval"}) {
    const auto a = tree(root + "/a/" + stage), b = tree(root + "/b/" + stage);
    std::size_t bytes = 0;
    bool same = a.size() == b.size() && !a.empty();
    for (const auto& [name, content] : a) {
      bytes += content.size();
      const auto it = b.find(name);
      if (it == b.end() || it->second != content) {
        same = false;
        detail += fmt("%s/%s differs; ", stage, name.c_str());
      }
    }
    pass = pass && same;
    detail += fmt("%s: %zu files, %zu bytes %s; ", stage, a.size(), bytes, same ? "identical" : "DIFFER");
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"expert gate: success >= 0.95 per kind over 200 episodes", expert_gate},
      {"rasterizer parity with the point-in-polygon oracle", raster_parity},
      {"gradient check on an 8x8 network", gradient_check},
      {"desk-scale training effect", training_effect},
      {"augmentation statistics", augmentation_stats},
      {"metric fixed points", metric_fixed_points},
      {"controller fidelity", controller_fidelity},
      {"determinism of gen-data, train and eval-cl", determinism},
  };
  const double budget[] = {300, 60, 120, 2700, 60, 60, 120, 2700};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget[i]) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", budget[i]);
    }
    failures += !o.pass;
    std::printf("[%s] criterion %d: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
