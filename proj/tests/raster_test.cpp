#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rondo/augment.hpp"
#include "rondo/raster.hpp"

using namespace rondo;

namespace {

// star-shaped random polygon around (cr, cc) in pixel units
Polygon random_polygon(Rng& rng, double cr, double cc) {
  const int n = rng.uniform_int(3, 9);
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * (i + rng.uniform(0.1, 0.9)) / n;
    const double r = rng.uniform(5.0, 40.0);
    p.push_back({cr + r * std::cos(a), cc + r * std::sin(a)});
  }
  return p;
}

SceneFrame frame_with(double ahead, double left, double heading) {
  SceneFrame f;
  f.sdv.id = 0;
  f.sdv.dims = {4.0, 2.0};
  f.sdv.present = {true, true, true};
  f.sdv.history[0] = {0.0, 0.0, 0.0, 5.0};
  f.sdv.history[1] = {-1.0, 0.0, 0.0, 5.0};
  f.sdv.history[2] = {-2.0, 0.0, 0.0, 5.0};
  TrackedObject t;
  t.id = 1;
  t.dims = {4.0, 2.0};
  t.present = {true, false, false};
  t.history[0] = {ahead, left, heading, 0.0};
  f.traffic.push_back(t);
  f.map_id = "rural";
  return f;
}

}  // namespace

TEST_CASE("pixel convention: anchor row 84, col 128, 0.25 m per pixel") {
  const Vec2 p = to_pixel({10.0, 0.0});
  CHECK(p.x == doctest::Approx(124.0));
  CHECK(p.y == doctest::Approx(128.0));
  const Vec2 q = to_pixel({0.0, -2.0});
  CHECK(q.x == doctest::Approx(84.0));
  CHECK(q.y == doctest::Approx(120.0));
  const Vec2 m = from_pixel(q.x, q.y);
  CHECK(m.y == doctest::Approx(-2.0));
}

TEST_CASE("scanline fill agrees with point-in-polygon away from edges") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Polygon poly = random_polygon(rng, rng.uniform(20, 236), rng.uniform(20, 236));
    BevGrid g;
    fill_polygon_px(g, 8, poly);
    int checked = 0;
    for (int r = 0; r < kGridSize; ++r)
      for (int c = 0; c < kGridSize; ++c) {
        const Vec2 p{double(r), double(c)};
        if (distance_to_polygon_boundary(poly, p) < 1e-6) continue;
        ++checked;
        REQUIRE(g.get(8, r, c) == point_in_polygon(poly, p));
      }
    CHECK(checked > 60000);
  }
}

TEST_CASE("a vehicle 10 m ahead lands on row 124") {
  const RoadMap map = synthesize_rural_road(200.0, {0.0}, "rural");
  const BevGrid g = rasterize(frame_with(10.0, 0.0, 0.0), map);
  // SDV centre and the three history slots
  CHECK(g.get(channel::sdv, 84, 128));
  CHECK(g.get(channel::sdv + 1, 80, 128));
  CHECK_FALSE(g.get(channel::sdv + 1, 84, 128 + 12));
  // traffic footprint: rows 116..132, cols 124..132
  CHECK(g.get(channel::traffic, 124, 128));
  CHECK(g.get(channel::traffic, 117, 125));
  CHECK_FALSE(g.get(channel::traffic, 114, 128));
  CHECK_FALSE(g.get(channel::traffic, 124, 134));
  CHECK(g.count(channel::traffic + 1) == 0);  // not present at t - 0.2
}

TEST_CASE("max-pool oracle") {
  Rng rng(3);
  BevGrid g;
  for (int i = 0; i < 3000; ++i) g.set(rng.uniform_int(0, kChannels - 1), rng.uniform_int(0, 255), rng.uniform_int(0, 255));
  for (int f : {1, 2, 4}) {
    const int n = kGridSize / f;
    std::vector<float> out(static_cast<std::size_t>(kChannels * n * n));
    pool_grid(g, f, out);
    for (int ch = 0; ch < kChannels; ++ch)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          bool any = false;
          for (int i = 0; i < f; ++i)
            for (int j = 0; j < f; ++j) any = any || g.get(ch, r * f + i, c * f + j);
          REQUIRE(out[static_cast<std::size_t>((ch * n + r) * n + c)] == (any ? 1.0f : 0.0f));
        }
  }
}

TEST_CASE("rotation by zero is the identity and by 2 pi nearly so") {
  const RoadMap map = synthesize_roundabout(RoundaboutParams{});
  SceneFrame f = frame_with(8.0, 3.0, 0.5);
  f.map_id = "roundabout";
  f.sdv.history[0] = {map.roundabout->centre.x + 25.0, map.roundabout->centre.y, kPi / 2, 3.0};
  const BevGrid g = rasterize(f, map);
  CHECK(rotate_grid(g, 0.0) == g);
}

TEST_CASE("translation shifts pixels and labels together") {
  const RoadMap map = synthesize_rural_road(200.0, {0.0}, "rural");
  SceneFrame f = frame_with(10.0, 0.0, 0.0);
  BevGrid g = rasterize(f, map);
  FrameLabels labels;
  labels.objects.push_back({{10.0, 0.0}, 0.0});
  labels.refresh_anchors();
  const BevGrid before = g;
  aug_translate(g, labels, {1.0, -0.5});  // 4 rows forward, 2 columns right
  CHECK(labels.objects[0].position.x == doctest::Approx(11.0));
  CHECK(labels.objects[0].position.y == doctest::Approx(-0.5));
  for (int r = 10; r < 240; ++r)
    for (int c = 10; c < 240; ++c) CHECK(g.get(channel::traffic, r + 4, c - 2) == before.get(channel::traffic, r, c));
  // the SDV channels stay put
  for (int ch = 0; ch < 3; ++ch) CHECK(g.count(ch) == before.count(ch));
}

TEST_CASE("bit-flip rate matches p") {
  Rng rng(11);
  const double p = 0.01;
  std::size_t flipped = 0;
  const int reps = 20;
  for (int i = 0; i < reps; ++i) {
    BevGrid g;
    aug_bitflip(g, p, rng);
    flipped += g.count();
  }
  const double n = double(reps) * kChannels * kGridSize * kGridSize;
  CHECK(std::abs(flipped - n * p) < 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("anchor targets: one object, one positive cell") {
  FrameLabels l;
  const Vec2 c = anchor_centre(9, 8);
  l.objects.push_back({c + Vec2{1.0, -0.5}, 0.3});
  l.refresh_anchors();
  int positives = 0;
  for (int r = 0; r < kAnchorGrid; ++r)
    for (int cc = 0; cc < kAnchorGrid; ++cc) positives += l.anchors.at(r, cc, 0) > 0.5f;
  CHECK(positives == 1);
  CHECK(l.anchors.at(9, 8, 0) == 1.0f);
  CHECK(l.anchors.at(9, 8, 3) == doctest::Approx(std::sin(0.3)));
  CHECK(l.anchors.at(9, 8, 4) == doctest::Approx(std::cos(0.3)));
}

TEST_CASE("OpenMP batch rasterization equals the serial reference") {
  const RoadMap map = synthesize_rural_road(300.0, {0.0, 0.004}, "rural");
  std::vector<SceneFrame> frames;
  for (int i = 0; i < 12; ++i) {
    SceneFrame f = frame_with(5.0 + i, 0.3 * i - 2, 0.1 * i);
    const Vec2 p = map.lanes[0].path.point(10.0 + 15.0 * i);
    for (auto& h : f.sdv.history) h.x += p.x, h.y += p.y;
    f.traffic[0].history[0].x += p.x;
    f.traffic[0].history[0].y += p.y;
    frames.push_back(f);
  }
  CHECK(rasterize_batch(frames, map) == rasterize_batch_serial(frames, map));
}

TEST_CASE("PGM output") {
  BevGrid g;
  g.set(4, 0, 1);
  std::ostringstream os;
  write_pgm(os, g, 4);
  const std::string s = os.str();
  const std::string header = "P5\n256 256\n255\n";
  REQUIRE(s.size() == header.size() + 256 * 256);
  CHECK(s.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(s[header.size() + 1]) == 255);
  CHECK(s[header.size()] == 0);
}

TEST_CASE("dims augmentation stays inside its ranges") {
  Rng rng(5);
  Agent a;
  for (int i = 0; i < 2000; ++i) {
    const Agent b = aug_dims(a, rng);
    CHECK(b.dims.length >= 4.0);
    CHECK(b.dims.length <= 6.0);
    CHECK(b.dims.width >= 1.0);
    CHECK(b.dims.width <= 3.0);
  }
  a.role = AgentRole::sdv;
  CHECK(aug_dims(a, rng).dims == a.dims);
}
