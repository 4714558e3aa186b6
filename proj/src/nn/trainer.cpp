#include "rondo/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "rondo/raster.hpp"
#include "rondo/rng.hpp"

namespace rondo::nn {

std::uint64_t frame_key(const SceneFrame& f) {
  return derive_seed(f.sequence_id, static_cast<std::uint64_t>(f.tick));
}

void prepare_sample(const SceneFrame& frame, const RoadMap& map, int pool, const AugmentConfig* aug, Rng* rng,
                    float* input, float* wp_label, float* anchor_label) {
  BevGrid grid = rasterize(frame, map);
  FrameLabels labels = make_labels(frame);
  if (aug && rng) augment_sample(grid, labels, *aug, *rng);
  const int n = kGridSize / pool;
  pool_grid(grid, pool, std::span<float>(input, static_cast<std::size_t>(kChannels) * n * n));
  for (int k = 0; k < kWaypointCount; ++k) {
    wp_label[2 * k] = static_cast<float>(labels.waypoints.points[static_cast<std::size_t>(k)].x);
    wp_label[2 * k + 1] = static_cast<float>(labels.waypoints.points[static_cast<std::size_t>(k)].y);
  }
  std::copy(labels.anchors.values.begin(), labels.anchors.values.end(), anchor_label);
}

namespace {

struct Batch {
  std::vector<float> input, wp, anchors;
  void resize(int b, const NetworkConfig& cfg) {
    const auto n = static_cast<std::size_t>(b);
    input.resize(n * static_cast<std::size_t>(cfg.in_channels * cfg.input_size * cfg.input_size));
    wp.resize(n * kWaypointOutputs);
    anchors.resize(n * kAnchorGrid * kAnchorGrid * kAnchorFeatures);
  }
};

const RoadMap& map_for(const MapStore& maps, const SceneFrame& f) {
  const auto it = maps.find(f.map_id);
  if (it == maps.end()) throw std::runtime_error("frame references unknown map '" + f.map_id + "'");
  return *it->second;
}

// rasterizes and augments samples in parallel; each draw depends only on the frame and epoch
void fill_batch(Batch& batch, std::span<const SceneFrame> frames, std::span<const std::size_t> idx,
                const MapStore& maps, const NetworkConfig& net, int pool, const AugmentConfig* aug,
                std::uint64_t aug_seed, int epoch) {
  batch.resize(static_cast<int>(idx.size()), net);
  const std::size_t in_size = static_cast<std::size_t>(net.in_channels) * net.input_size * net.input_size;
  const std::size_t an_size = kAnchorGrid * kAnchorGrid * kAnchorFeatures;
  const auto n = static_cast<std::ptrdiff_t>(idx.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const SceneFrame& f = frames[idx[s]];
    Rng rng(derive_seed(derive_seed(aug_seed, frame_key(f)), static_cast<std::uint64_t>(epoch)));
    prepare_sample(f, map_for(maps, f), pool, aug, aug ? &rng : nullptr, batch.input.data() + s * in_size,
                   batch.wp.data() + s * kWaypointOutputs, batch.anchors.data() + s * an_size);
  }
}

// network anchors are [B][5][S][S]; labels are [B][S][S][5]
LossTerms batch_loss(Network<float>& net, const Batch& b, int count, const LossConfig& loss, bool grads,
                     std::vector<float>& d_wp, std::vector<float>& d_an) {
  net.forward(count, b.input.data());
  if (grads) {
    d_wp.resize(net.waypoints().size());
    d_an.resize(net.anchors().size());
  }
  return compute_loss(count, kAnchorGrid, net.waypoints().data(), net.anchors().data(), b.wp.data(), b.anchors.data(),
                      loss, grads ? d_wp.data() : nullptr, grads ? d_an.data() : nullptr);
}

bool finite(const LossTerms& l) { return std::isfinite(l.total); }

}  // namespace

LossTerms evaluate_loss(Network<float>& net, std::span<const SceneFrame> frames, const MapStore& maps,
                        const LossConfig& loss, int pool, int batch) {
  LossTerms sum;
  if (frames.empty()) return sum;
  std::vector<std::size_t> idx(frames.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Batch b;
  std::vector<float> unused_wp, unused_an;
  for (std::size_t start = 0; start < frames.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t count = std::min(static_cast<std::size_t>(batch), frames.size() - start);
    const std::span<const std::size_t> part(idx.data() + start, count);
    fill_batch(b, frames, part, maps, net.config(), pool, nullptr, 0, 0);
    sum += batch_loss(net, b, static_cast<int>(count), loss, false, unused_wp, unused_an)
               .scaled(static_cast<double>(count));
  }
  return sum.scaled(1.0 / static_cast<double>(frames.size()));
}

TrainResult train(std::span<const SceneFrame> train_frames, std::span<const SceneFrame> dev_frames,
                  const MapStore& maps, const NetworkConfig& net_cfg, const LossConfig& loss_cfg,
                  const TrainConfig& cfg, const AugmentConfig& aug,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (net_cfg.latent_size() != kAnchorGrid)
    throw ShapeError("latent grid " + std::to_string(net_cfg.latent_size()) + " does not match the anchor grid");
  if (net_cfg.input_size * cfg.pool != kGridSize) throw ShapeError("input size times pool factor must equal the grid");
  if (train_frames.empty()) throw std::runtime_error("no training frames");

  TrainResult res{Network<float>(net_cfg), {}, false, Network<float>(net_cfg)};
  Network<float>& net = res.net;
  net.init(cfg.seed);
  if (cfg.mean_plan_bias) {
    std::vector<double> mean(kWaypointOutputs, 0.0);
    for (const SceneFrame& f : train_frames) {
      const WaypointPlan p = waypoint_label(f);
      for (int k = 0; k < kWaypointCount; ++k) {
        mean[static_cast<std::size_t>(2 * k)] += p.points[static_cast<std::size_t>(k)].x;
        mean[static_cast<std::size_t>(2 * k + 1)] += p.points[static_cast<std::size_t>(k)].y;
      }
    }
    Param<float>& bias = net.param("wp_fc2.b");
    for (int i = 0; i < kWaypointOutputs; ++i)
      bias.value[static_cast<std::size_t>(i)] =
          static_cast<float>(mean[static_cast<std::size_t>(i)] / static_cast<double>(train_frames.size()));
  }

  res.initial = net;

  const std::span<const SceneFrame> dev =
      cfg.dev_limit > 0 && static_cast<std::size_t>(cfg.dev_limit) < dev_frames.size()
          ? dev_frames.first(static_cast<std::size_t>(cfg.dev_limit))
          : dev_frames;
  const int eval_batch = std::max(cfg.batch, 64);

  EpochLog initial;
  initial.epoch = 0;
  initial.lr = cfg.lr;
  initial.dev = evaluate_loss(net, dev, maps, loss_cfg, cfg.pool, eval_batch);
  res.log.push_back(initial);
  if (on_epoch) on_epoch(initial);

  Adam<float> adam(net.params());
  AdamConfig acfg;
  acfg.weight_decay = cfg.weight_decay;
  const std::uint64_t aug_seed = derive_seed(cfg.seed, "augment");
  std::vector<std::size_t> order(train_frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Batch b;
  std::vector<float> d_wp, d_an;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg.lr, cfg.lr_decay, epoch - 1);
    Rng shuffle(derive_seed(derive_seed(cfg.seed, "shuffle"), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1))]);
    const std::vector<Param<float>> last_good = net.params();

    LossTerms sum;
    std::size_t seen = 0;
    bool bad = false;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t count = std::min(static_cast<std::size_t>(cfg.batch), order.size() - start);
      fill_batch(b, train_frames, std::span<const std::size_t>(order.data() + start, count), maps, net_cfg, cfg.pool,
                 &aug, aug_seed, epoch);
      const LossTerms l = batch_loss(net, b, static_cast<int>(count), loss_cfg, true, d_wp, d_an);
      if (!finite(l)) {
        std::fprintf(stderr, "error: non-finite loss in epoch %d at frame %zu; restoring the last good weights\n",
                     epoch, start);
        bad = true;
        break;
      }
      net.backward(d_wp.data(), d_an.data());
      adam.step(net.params(), acfg, lr);
      sum += l.scaled(static_cast<double>(count));
      seen += count;
    }
    if (bad) {
      net.params() = last_good;
      res.diverged = true;
      break;
    }
    EpochLog e;
    e.epoch = epoch;
    e.lr = lr;
    e.train = sum.scaled(1.0 / static_cast<double>(seen));
    e.dev = evaluate_loss(net, dev, maps, loss_cfg, cfg.pool, eval_batch);
    res.log.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return res;
}

void write_training_csv(std::ostream& os, std::span<const EpochLog> log) {
  os << "epoch,lr,train_pos,train_vel,train_class,train_reg,train_total,dev_pos,dev_vel,dev_class,dev_reg,dev_total\n";
  char buf[512];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.8g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.lr,
                  e.train.pos, e.train.vel, e.train.cls, e.train.reg, e.train.total, e.dev.pos, e.dev.vel, e.dev.cls,
                  e.dev.reg, e.dev.total);
    os << buf;
  }
}

}  // namespace rondo::nn
