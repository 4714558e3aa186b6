#include "rondo/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

namespace rondo {

void BevGrid::fill_span(int ch, int row, int c0, int c1) {
  if (row < 0 || row >= kGridSize) return;
  c0 = std::max(c0, 0);
  c1 = std::min(c1, kGridSize - 1);
  if (c0 > c1) return;
  std::uint64_t* r = bits_.data() + index(ch, row, 0);
  for (int w = c0 >> 6; w <= c1 >> 6; ++w) {
    const int lo = std::max(c0, w * 64) - w * 64, hi = std::min(c1, w * 64 + 63) - w * 64;
    const std::uint64_t upper = hi == 63 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (hi + 1)) - 1);
    const std::uint64_t lower = (std::uint64_t{1} << lo) - 1;
    r[w] |= upper & ~lower;
  }
}

void BevGrid::clear_channel(int ch) {
  std::fill_n(bits_.begin() + static_cast<std::ptrdiff_t>(ch) * kWordsPerChannel, kWordsPerChannel, 0);
}

std::size_t BevGrid::count(int ch) const {
  std::size_t n = 0;
  for (const std::uint64_t w : channel_words(ch)) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t BevGrid::count() const {
  std::size_t n = 0;
  for (const std::uint64_t w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void fill_polygon_px(BevGrid& grid, int ch, std::span<const Vec2> poly) {
  if (poly.size() < 3) return;
  double rmin = poly[0].x, rmax = poly[0].x, cmin = poly[0].y, cmax = poly[0].y;
  for (const Vec2 p : poly) {
    rmin = std::min(rmin, p.x);
    rmax = std::max(rmax, p.x);
    cmin = std::min(cmin, p.y);
    cmax = std::max(cmax, p.y);
  }
  if (rmax < 0.0 || rmin > kGridSize - 1 || cmax < 0.0 || cmin > kGridSize - 1) return;
  const int r0 = std::max(0, static_cast<int>(std::ceil(rmin)));
  const int r1 = std::min(kGridSize - 1, static_cast<int>(std::floor(rmax)));
  std::vector<double> xs;
  xs.reserve(8);
  const std::size_t n = poly.size();
  for (int r = r0; r <= r1; ++r) {
    xs.clear();
    const double y = r;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 a = poly[j], b = poly[i];
      if ((a.x <= y) != (b.x <= y)) xs.push_back(a.y + (y - a.x) * (b.y - a.y) / (b.x - a.x));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = static_cast<int>(std::ceil(xs[k]));
      const int c1 = static_cast<int>(std::ceil(xs[k + 1])) - 1;
      grid.fill_span(ch, r, c0, c1);
    }
  }
}

void draw_line_px(BevGrid& grid, int ch, Vec2 a, Vec2 b) {
  const double lo = -1.0, hi = kGridSize;
  if (std::max(a.x, b.x) < lo || std::min(a.x, b.x) > hi || std::max(a.y, b.y) < lo || std::min(a.y, b.y) > hi) return;
  // cell traversal with cells centred on integer coordinates
  a = a + Vec2{0.5, 0.5};
  b = b + Vec2{0.5, 0.5};
  int r = static_cast<int>(std::floor(a.x)), c = static_cast<int>(std::floor(a.y));
  const int r_end = static_cast<int>(std::floor(b.x)), c_end = static_cast<int>(std::floor(b.y));
  const Vec2 d = b - a;
  const int sr = d.x > 0 ? 1 : -1, sc = d.y > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  const double tdr = d.x != 0.0 ? std::abs(1.0 / d.x) : inf;
  const double tdc = d.y != 0.0 ? std::abs(1.0 / d.y) : inf;
  double tr = d.x != 0.0 ? ((sr > 0 ? std::floor(a.x) + 1.0 - a.x : a.x - std::floor(a.x)) * tdr) : inf;
  double tc = d.y != 0.0 ? ((sc > 0 ? std::floor(a.y) + 1.0 - a.y : a.y - std::floor(a.y)) * tdc) : inf;
  const int max_steps = std::abs(r_end - r) + std::abs(c_end - c) + 2;
  for (int step = 0; step <= max_steps; ++step) {
    if (r >= 0 && r < kGridSize && c >= 0 && c < kGridSize) grid.set(ch, r, c);
    if (r == r_end && c == c_end) break;
    if (tr < tc) {
      r += sr;
      tr += tdr;
    } else {
      c += sc;
      tc += tdc;
    }
  }
}

std::vector<Polygon> route_corridor(const RoadMap& map, const Route& route) {
  const RoutePath rp = build_route_path(map, route);
  const Polyline& pts = rp.path.points();
  const auto cum = cumulative_length(pts);
  std::vector<Polygon> out;
  constexpr double kChunk = 8.0;
  std::size_t start = 0;
  while (start + 1 < pts.size()) {
    std::size_t end = start + 1;
    while (end + 1 < pts.size() && cum[end] - cum[start] < kChunk) ++end;
    const Polyline piece(pts.begin() + static_cast<std::ptrdiff_t>(start), pts.begin() + static_cast<std::ptrdiff_t>(end) + 1);
    const double half = 0.5 * map.lane(rp.span_at(cum[start]).lane_id).width;
    out.push_back(offset_strip(piece, half));
    start = end;
  }
  return out;
}

namespace {

struct Projector {
  Pose2 pose;
  double c, s;
  Projector(const Pose2& p, double rotation) : pose(p), c(std::cos(rotation)), s(std::sin(rotation)) {}
  Vec2 operator()(Vec2 world) const {
    const Vec2 l = pose.to_local(world);
    return to_pixel({c * l.x - s * l.y, s * l.x + c * l.y});
  }
};

void draw_box(BevGrid& grid, int ch, const Projector& proj, const VehicleState& st, const VehicleDims& dims) {
  const auto corners = footprint(st, dims).corners();
  std::array<Vec2, 4> px;
  for (std::size_t i = 0; i < 4; ++i) px[i] = proj(corners[i]);
  fill_polygon_px(grid, ch, px);
}

void draw_polygon(BevGrid& grid, int ch, const Projector& proj, const Polygon& poly, std::vector<Vec2>& scratch) {
  scratch.clear();
  for (const Vec2 p : poly) scratch.push_back(proj(p));
  fill_polygon_px(grid, ch, scratch);
}

struct CorridorCache {
  std::string map_id;
  const RoadMap* map = nullptr;
  Route route;
  std::vector<Polygon> polys;
};

const std::vector<Polygon>& cached_corridor(const RoadMap& map, const Route& route) {
  thread_local CorridorCache cache;
  if (cache.map != &map || cache.map_id != map.id || !(cache.route == route)) {
    cache.polys = route_corridor(map, route);
    cache.map = &map;
    cache.map_id = map.id;
    cache.route = route;
  }
  return cache.polys;
}

}  // namespace

BevGrid rasterize(const SceneFrame& frame, const RoadMap& map, const Route& route, const RasterOptions& opts) {
  BevGrid grid;
  const Projector proj(frame.sdv_pose(), opts.view_rotation);
  for (int k = 0; k < kHistorySlots; ++k) {
    const auto slot = static_cast<std::size_t>(k);
    if (frame.sdv.present[slot]) draw_box(grid, channel::sdv + k, proj, frame.sdv.history[slot], frame.sdv.dims);
    for (const TrackedObject& obj : frame.traffic)
      if (obj.present[slot]) draw_box(grid, channel::traffic + k, proj, obj.history[slot], obj.dims);
  }
  for (const Boundary& b : map.boundaries) {
    const int ch = b.kind == BoundaryKind::solid ? channel::solid : channel::broken;
    for (std::size_t i = 1; i < b.line.size(); ++i) draw_line_px(grid, ch, proj(b.line[i - 1]), proj(b.line[i]));
  }
  std::vector<Vec2> scratch;
  for (const Polygon& poly : map.drivable) draw_polygon(grid, channel::drivable, proj, poly, scratch);
  for (const SpeedZone& z : map.speed_zones) draw_polygon(grid, channel::speed + static_cast<int>(z.cls), proj, z.polygon, scratch);
  if (!route.lane_sequence.empty())
    for (const Polygon& poly : cached_corridor(map, route)) draw_polygon(grid, channel::route, proj, poly, scratch);
  return grid;
}

BevGrid rasterize(const SceneFrame& frame, const RoadMap& map, const RasterOptions& opts) {
  return rasterize(frame, map, frame.route, opts);
}

std::vector<BevGrid> rasterize_batch_serial(std::span<const SceneFrame> frames, const RoadMap& map) {
  std::vector<BevGrid> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out[i] = rasterize(frames[i], map);
  return out;
}

std::vector<BevGrid> rasterize_batch(std::span<const SceneFrame> frames, const RoadMap& map) {
  std::vector<BevGrid> out(frames.size());
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = rasterize(frames[static_cast<std::size_t>(i)], map);
  return out;
}

// ---------------------------------------------------------------------------

Vec2 anchor_centre(int row, int col) {
  const double half = 0.5 * (kAnchorCell - 1);
  return from_pixel(row * kAnchorCell + half, col * kAnchorCell + half);
}

void FrameLabels::refresh_anchors() {
  anchors.values.fill(0.0f);
  std::array<double, kAnchorGrid * kAnchorGrid> best;
  best.fill(std::numeric_limits<double>::infinity());
  for (const LabelObject& o : objects) {
    const Vec2 px = to_pixel(o.position);
    const int r = static_cast<int>(std::floor((px.x + 0.5) / kAnchorCell));
    const int c = static_cast<int>(std::floor((px.y + 0.5) / kAnchorCell));
    if (r < 0 || r >= kAnchorGrid || c < 0 || c >= kAnchorGrid) continue;
    const Vec2 off = o.position - anchor_centre(r, c);
    const double d = norm(off);
    double& b = best[static_cast<std::size_t>(r * kAnchorGrid + c)];
    if (d >= b) continue;
    b = d;
    anchors.at(r, c, 0) = 1.0f;
    anchors.at(r, c, 1) = static_cast<float>(off.x);
    anchors.at(r, c, 2) = static_cast<float>(off.y);
    anchors.at(r, c, 3) = static_cast<float>(std::sin(o.heading));
    anchors.at(r, c, 4) = static_cast<float>(std::cos(o.heading));
  }
}

FrameLabels make_labels(const SceneFrame& frame) {
  FrameLabels l;
  l.waypoints = waypoint_label(frame);
  const Pose2 pose = frame.sdv_pose();
  for (const FutureObject& f : frame.traffic_future)
    l.objects.push_back({pose.to_local(f.state.position()), normalize_angle(f.state.heading - pose.heading)});
  l.refresh_anchors();
  return l;
}

BevGrid rotate_grid(const BevGrid& grid, double angle) {
  BevGrid out;
  const double c = std::cos(angle), s = std::sin(angle);
  const auto in = grid.words();
  auto dst = out.words();
  for (int r = 0; r < kGridSize; ++r) {
    const double dr = r - kAnchorRow;
    // source = R(-angle) * (dr, dc)
    double sr = c * dr + s * (0 - kAnchorCol) + kAnchorRow;
    double sc = -s * dr + c * (0 - kAnchorCol) + kAnchorCol;
    for (int col = 0; col < kGridSize; ++col, sr += s, sc += c) {
      const int ir = static_cast<int>(std::lround(sr)), ic = static_cast<int>(std::lround(sc));
      if (ir < 0 || ir >= kGridSize || ic < 0 || ic >= kGridSize) continue;
      const std::size_t src_off = static_cast<std::size_t>(ir) * BevGrid::kWordsPerRow + static_cast<std::size_t>(ic >> 6);
      const std::size_t dst_off = static_cast<std::size_t>(r) * BevGrid::kWordsPerRow + static_cast<std::size_t>(col >> 6);
      const int sbit = ic & 63;
      const std::uint64_t dmask = std::uint64_t{1} << (col & 63);
      for (int ch = 0; ch < kChannels; ++ch) {
        const std::size_t base = static_cast<std::size_t>(ch) * BevGrid::kWordsPerChannel;
        if ((in[base + src_off] >> sbit) & 1u) dst[base + dst_off] |= dmask;
      }
    }
  }
  return out;
}

void aug_rotate(BevGrid& grid, FrameLabels& labels, double angle) {
  if (angle == 0.0) return;
  grid = rotate_grid(grid, angle);
  for (Vec2& p : labels.waypoints.points) p = rotate(p, angle);
  for (LabelObject& o : labels.objects) {
    o.position = rotate(o.position, angle);
    o.heading = normalize_angle(o.heading + angle);
  }
  labels.refresh_anchors();
}

namespace {

/// new[col] = old[col - shift] over a 256-bit row.
void shift_row(const std::uint64_t* src, std::uint64_t* dst, int shift) {
  constexpr int W = BevGrid::kWordsPerRow;
  for (int w = 0; w < W; ++w) dst[w] = 0;
  if (shift >= kGridSize || shift <= -kGridSize) return;
  if (shift >= 0) {
    const int ws = shift >> 6, bs = shift & 63;
    for (int w = W - 1; w >= ws; --w) {
      std::uint64_t v = src[w - ws] << bs;
      if (bs && w - ws - 1 >= 0) v |= src[w - ws - 1] >> (64 - bs);
      dst[w] = v;
    }
  } else {
    const int sh = -shift, ws = sh >> 6, bs = sh & 63;
    for (int w = 0; w + ws < W; ++w) {
      std::uint64_t v = src[w + ws] >> bs;
      if (bs && w + ws + 1 < W) v |= src[w + ws + 1] << (64 - bs);
      dst[w] = v;
    }
  }
}

}  // namespace

void aug_translate(BevGrid& grid, FrameLabels& labels, Vec2 offset) {
  const int dr = static_cast<int>(std::lround(offset.x / kCellSize));
  const int dc = static_cast<int>(std::lround(offset.y / kCellSize));
  if (dr != 0 || dc != 0) {
    auto words = grid.words();
    std::vector<std::uint64_t> tmp(BevGrid::kWordsPerChannel);
    for (int ch = channel::traffic; ch < kChannels; ++ch) {
      std::uint64_t* base = words.data() + static_cast<std::size_t>(ch) * BevGrid::kWordsPerChannel;
      std::fill(tmp.begin(), tmp.end(), 0);
      for (int r = 0; r < kGridSize; ++r) {
        const int sr = r - dr;
        if (sr < 0 || sr >= kGridSize) continue;
        shift_row(base + sr * BevGrid::kWordsPerRow, tmp.data() + r * BevGrid::kWordsPerRow, dc);
      }
      std::copy(tmp.begin(), tmp.end(), base);
    }
  }
  for (Vec2& p : labels.waypoints.points) p += offset;
  for (LabelObject& o : labels.objects) o.position += offset;
  labels.refresh_anchors();
}

void aug_bitflip(BevGrid& grid, double p_flip, Rng& rng) {
  auto words = grid.words();
  if (p_flip <= 0.0) return;
  if (p_flip >= 1.0) {
    for (std::uint64_t& w : words) w = ~w;
    return;
  }
  // geometric gaps between flipped bits
  const double log_q = std::log1p(-p_flip);
  const std::uint64_t total = static_cast<std::uint64_t>(words.size()) * 64;
  std::uint64_t pos = 0;
  while (true) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double gap = std::floor(std::log(u) / log_q);
    if (gap >= static_cast<double>(total - pos)) break;
    pos += static_cast<std::uint64_t>(gap);
    words[pos >> 6] ^= std::uint64_t{1} << (pos & 63);
    ++pos;
    if (pos >= total) break;
  }
}

void augment_sample(BevGrid& grid, FrameLabels& labels, const AugmentConfig& cfg, Rng& rng) {
  // draw every random number regardless of toggles so streams stay aligned
  const bool do_rot = rng.bernoulli(cfg.p_rotate);
  const double angle = rng.uniform(-cfg.rot_range_deg, cfg.rot_range_deg) * kPi / 180.0;
  const bool do_trans = rng.bernoulli(cfg.p_translate);
  const int max_px = static_cast<int>(std::floor(cfg.trans_range / kCellSize + 1e-9));
  const int pr = rng.uniform_int(-max_px, max_px), pc = rng.uniform_int(-max_px, max_px);
  if (cfg.rotate && do_rot) aug_rotate(grid, labels, angle);
  if (cfg.translate && do_trans) aug_translate(grid, labels, {pr * kCellSize, pc * kCellSize});
  if (cfg.bitflip) aug_bitflip(grid, cfg.p_flip, rng);
}

void pool_grid(const BevGrid& grid, int factor, std::span<float> out) {
  const int n = kGridSize / factor;
  const auto words = grid.words();
  for (int ch = 0; ch < kChannels; ++ch) {
    const std::size_t base = static_cast<std::size_t>(ch) * BevGrid::kWordsPerChannel;
    for (int orow = 0; orow < n; ++orow) {
      std::uint64_t acc[BevGrid::kWordsPerRow] = {};
      for (int k = 0; k < factor; ++k) {
        const std::size_t row = base + static_cast<std::size_t>(orow * factor + k) * BevGrid::kWordsPerRow;
        for (int w = 0; w < BevGrid::kWordsPerRow; ++w) acc[w] |= words[row + static_cast<std::size_t>(w)];
      }
      float* dst = out.data() + (static_cast<std::size_t>(ch) * n + static_cast<std::size_t>(orow)) * n;
      const std::uint64_t block = (std::uint64_t{1} << factor) - 1;
      for (int oc = 0; oc < n; ++oc) {
        const int col = oc * factor;
        dst[oc] = (acc[col >> 6] >> (col & 63)) & block ? 1.0f : 0.0f;
      }
    }
  }
}

void write_pgm(std::ostream& os, const BevGrid& grid, int ch) {
  os << "P5\n" << kGridSize << ' ' << kGridSize << "\n255\n";
  std::string row(kGridSize, '\0');
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) row[static_cast<std::size_t>(c)] = grid.get(ch, r, c) ? '\xff' : '\0';
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

}  // namespace rondo
