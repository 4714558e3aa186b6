// Serial reference against OpenMP kernels: convolution, batch rasterization
// and closed-loop episodes. Prints one row per kernel.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>

#include "rondo/dataset.hpp"
#include "rondo/metrics.hpp"
#include "rondo/nn/kernels.hpp"
#include "rondo/raster.hpp"
#include "rondo/rng.hpp"
#include "rondo/sim.hpp"

using namespace rondo;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  f();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel, same ? "match" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  {
    Rng rng(1);
    const nn::ConvShape s{8, 16, 3, 2, 1, 64, 64};
    const int B = 32;
    std::vector<float> x(static_cast<std::size_t>(B * s.in_c * s.in_h * s.in_w)), w(static_cast<std::size_t>(s.weight_count())),
        b(static_cast<std::size_t>(s.out_c));
    for (auto& v : x) v = static_cast<float>(rng.uniform());
    for (auto& v : w) v = static_cast<float>(rng.uniform(-1, 1));
    const std::size_t ny = static_cast<std::size_t>(B * s.out_c * s.out_h() * s.out_w());
    std::vector<float> y1(ny), y2(ny), cols;
    const double ts = seconds([&] { nn::conv_forward_direct(s, B, x.data(), w.data(), b.data(), y1.data()); }, 3);
    const double tp = seconds([&] { nn::conv_forward(s, B, x.data(), w.data(), b.data(), y2.data(), cols); }, 3);
    double err = 0.0;
    for (std::size_t i = 0; i < ny; ++i) err = std::max(err, static_cast<double>(std::abs(y1[i] - y2[i])));
    row("conv forward 8->16 s2 64x64", ts, tp, err < 1e-3);

    std::vector<float> dy(ny, 0.01f), dx1(x.size()), dx2(x.size()), dw1(w.size()), dw2(w.size()), db1(b.size()), db2(b.size());
    const double bs = seconds([&] { nn::conv_backward_direct(s, B, x.data(), w.data(), dy.data(), dx1.data(), dw1.data(), db1.data()); }, 3);
    const double bp = seconds([&] { nn::conv_backward(s, B, x.data(), w.data(), dy.data(), dx2.data(), dw2.data(), db2.data(), cols); }, 3);
    err = 0.0;
    for (std::size_t i = 0; i < dw1.size(); ++i) err = std::max(err, static_cast<double>(std::abs(dw1[i] - dw2[i]) / (1 + std::abs(dw1[i]))));
    row("conv backward", bs, bp, err < 1e-3);
  }

  {
    const auto map = std::make_shared<const RoadMap>(synthesize_roundabout(RoundaboutParams{}));
    ExpertPolicy expert;
    SimConfig sim;
    sim.extra_time = 3.1;
    const EpisodeConfig ep = sample_scenario(ScenarioKind::RandomTraffic, map, 4);
    const EpisodeResult r = run_episode(ep, expert, {}, sim);
    const auto frames = frames_from_log(r.state_log, ep.agents[0].route->route, map->id, 0);
    std::vector<BevGrid> g1, g2;
    const double ts = seconds([&] { g1 = rasterize_batch_serial(frames, *map); }, 2);
    const double tp = seconds([&] { g2 = rasterize_batch(frames, *map); }, 2);
    row("rasterize batch", ts, tp, g1 == g2);
  }

  {
    const ScenarioMaps maps{std::make_shared<const RoadMap>(synthesize_roundabout(RoundaboutParams{})),
                            std::make_shared<const RoadMap>(synthesize_rural_road(600.0, {0.0, 0.004, -0.003, 0.0}, "rural"))};
    const std::vector<ScenarioKind> kinds{ScenarioKind::RandomTraffic, ScenarioKind::Yield};
    const PolicyFactory f = [] { return std::make_unique<ExpertPolicy>(); };
    ClosedLoopOptions o;
    o.episodes = 8;
    o.seed = 2;
    std::vector<ClosedLoopRow> a, b;
    o.parallel = false;
    const double ts = seconds([&] { a = eval_closed_loop(f, kinds, maps, o); }, 1);
    o.parallel = true;
    const double tp = seconds([&] { b = eval_closed_loop(f, kinds, maps, o); }, 1);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].success == b[i].success && a[i].avg_speed == b[i].avg_speed;
    row("closed-loop episodes", ts, tp, same);
  }
  return 0;
}
