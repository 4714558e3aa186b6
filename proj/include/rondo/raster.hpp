#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rondo/augment.hpp"
#include "rondo/frame.hpp"
#include "rondo/map.hpp"
#include "rondo/rng.hpp"

namespace rondo {

inline constexpr int kGridSize = 256;
inline constexpr int kChannels = 13;
inline constexpr double kCellSize = 0.25;  // m per pixel
inline constexpr int kAnchorRow = 84;
inline constexpr int kAnchorCol = 128;
inline constexpr int kAnchorGrid = 16;
inline constexpr int kAnchorCell = kGridSize / kAnchorGrid;  // pixels per anchor cell
inline constexpr int kAnchorFeatures = 5;                     // existence, dx, dy, sin, cos

namespace channel {
inline constexpr int sdv = 0;       // 0..2: t, t-0.2, t-0.4
inline constexpr int traffic = 3;   // 3..5
inline constexpr int solid = 6;
inline constexpr int broken = 7;
inline constexpr int drivable = 8;
inline constexpr int speed = 9;     // 9..11: low, mid, high
inline constexpr int route = 12;
}  // namespace channel

/// SDV-frame metres to continuous pixel coordinates; pixel (r, c) has its centre
/// at row r, column c. x (forward) runs down the rows, y (left) along the columns.
inline Vec2 to_pixel(Vec2 local) { return {kAnchorRow + local.x / kCellSize, kAnchorCol + local.y / kCellSize}; }
inline Vec2 from_pixel(double row, double col) { return {(row - kAnchorRow) * kCellSize, (col - kAnchorCol) * kCellSize}; }

/// Bit-packed binary tensor [256, 256, 13], stored channel-major.
class BevGrid {
 public:
  static constexpr int kWordsPerRow = kGridSize / 64;
  static constexpr int kWordsPerChannel = kGridSize * kWordsPerRow;

  BevGrid() : bits_(static_cast<std::size_t>(kChannels) * kWordsPerChannel, 0) {}

  bool get(int ch, int row, int col) const {
    return (word(ch, row, col) >> (col & 63)) & 1u;
  }
  void set(int ch, int row, int col, bool v = true) {
    std::uint64_t& w = bits_[index(ch, row, col)];
    const std::uint64_t m = std::uint64_t{1} << (col & 63);
    w = v ? (w | m) : (w & ~m);
  }
  void flip(int ch, int row, int col) { bits_[index(ch, row, col)] ^= std::uint64_t{1} << (col & 63); }
  /// Sets columns [c0, c1] of a row (clipped to the grid).
  void fill_span(int ch, int row, int c0, int c1);
  void clear_channel(int ch);

  std::size_t count(int ch) const;
  std::size_t count() const;
  std::span<std::uint64_t> words() { return bits_; }
  std::span<const std::uint64_t> words() const { return bits_; }
  std::span<const std::uint64_t> channel_words(int ch) const {
    return std::span<const std::uint64_t>(bits_).subspan(static_cast<std::size_t>(ch) * kWordsPerChannel, kWordsPerChannel);
  }
  bool operator==(const BevGrid&) const = default;

 private:
  static std::size_t index(int ch, int row, int col) {
    return static_cast<std::size_t>(ch) * kWordsPerChannel + static_cast<std::size_t>(row) * kWordsPerRow +
           static_cast<std::size_t>(col >> 6);
  }
  std::uint64_t word(int ch, int row, int col) const { return bits_[index(ch, row, col)]; }

  std::vector<std::uint64_t> bits_;
};

/// Scanline fill of a polygon given in pixel coordinates (pixel centres tested).
void fill_polygon_px(BevGrid& grid, int ch, std::span<const Vec2> poly_px);
/// 1-pixel line through every cell the segment passes (supercover).
void draw_line_px(BevGrid& grid, int ch, Vec2 a_px, Vec2 b_px);

/// Strip polygons covering the route, used for the navigation channel.
std::vector<Polygon> route_corridor(const RoadMap& map, const Route& route);

struct RasterOptions {
  double view_rotation = 0.0;  // extra rotation of the scene about the SDV, rad
};

/// Static map geometry rendered in the SDV frame.
BevGrid rasterize(const SceneFrame& frame, const RoadMap& map, const Route& route, const RasterOptions& opts = {});
BevGrid rasterize(const SceneFrame& frame, const RoadMap& map, const RasterOptions& opts = {});

/// Serial reference and OpenMP variants for batches.
std::vector<BevGrid> rasterize_batch_serial(std::span<const SceneFrame> frames, const RoadMap& map);
std::vector<BevGrid> rasterize_batch(std::span<const SceneFrame> frames, const RoadMap& map);

/// Targets for the prediction head, one entry per anchor cell.
struct AnchorTargets {
  std::array<float, kAnchorGrid * kAnchorGrid * kAnchorFeatures> values{};

  float& at(int row, int col, int f) { return values[static_cast<std::size_t>((row * kAnchorGrid + col) * kAnchorFeatures + f)]; }
  float at(int row, int col, int f) const {
    return values[static_cast<std::size_t>((row * kAnchorGrid + col) * kAnchorFeatures + f)];
  }
};

struct LabelObject {
  Vec2 position;  // SDV frame, m
  double heading = 0.0;
};

struct FrameLabels {
  WaypointPlan waypoints;
  std::vector<LabelObject> objects;  // traffic at the prediction horizon
  AnchorTargets anchors;

  /// Recomputes `anchors` from `objects`.
  void refresh_anchors();
};

FrameLabels make_labels(const SceneFrame& frame);

/// Anchor cell centre in SDV-frame metres.
Vec2 anchor_centre(int row, int col);

/// Rotates all channels about the SDV anchor (nearest neighbour) and the labels by `angle`.
void aug_rotate(BevGrid& grid, FrameLabels& labels, double angle);
BevGrid rotate_grid(const BevGrid& grid, double angle);
/// Shifts channels 3-12 by whole pixels and the labels by the same offset (m).
void aug_translate(BevGrid& grid, FrameLabels& labels, Vec2 offset);
void aug_bitflip(BevGrid& grid, double p_flip, Rng& rng);

/// Applies the configured online augmentations; `rng` should be keyed by frame.
void augment_sample(BevGrid& grid, FrameLabels& labels, const AugmentConfig& cfg, Rng& rng);

/// 4x4 max-pool to 64x64x13 floats in [channel][row][col] order.
void pool_grid(const BevGrid& grid, int factor, std::span<float> out);

/// Binary PGM of one channel (0 / 255).
void write_pgm(std::ostream& os, const BevGrid& grid, int ch);

}  // namespace rondo
