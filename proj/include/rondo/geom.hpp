#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace rondo {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }
/// Left-hand normal (rotated +90 degrees).
constexpr Vec2 left_normal(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Rigid 2D pose. `to_local` / `to_world` map points between the map frame and
/// the frame attached to the pose (x forward, y left).
struct Pose2 {
  Vec2 position;
  double heading = 0.0;

  Vec2 to_local(Vec2 p) const { return rotate(p - position, -heading); }
  Vec2 to_world(Vec2 p) const { return rotate(p, heading) + position; }
  Pose2 to_local(const Pose2& other) const {
    return {to_local(other.position), normalize_angle(other.heading - heading)};
  }
  Pose2 to_world(const Pose2& other) const {
    return {to_world(other.position), normalize_angle(other.heading + heading)};
  }
};

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;

/// Cumulative arc length, same size as the polyline, starting at 0.
std::vector<double> cumulative_length(std::span<const Vec2> line);
double polyline_length(std::span<const Vec2> line);

/// Resamples so no segment is longer than `max_spacing`; original vertices are kept.
Polyline densify(std::span<const Vec2> line, double max_spacing);

/// Result of projecting a point onto a polyline.
struct Projection {
  double s = 0.0;        // arc length of the foot point
  double d = 0.0;        // signed lateral offset, left positive
  double distance = 0.0; // Euclidean distance to the foot point
  std::size_t segment = 0;
};

/// Nearest-segment projection. `cumulative` must come from `cumulative_length(line)`.
Projection project(std::span<const Vec2> line, std::span<const double> cumulative, Vec2 p);

/// Point and unit tangent at arc length s (clamped to [0, length]).
Vec2 point_at(std::span<const Vec2> line, std::span<const double> cumulative, double s);
Vec2 tangent_at(std::span<const Vec2> line, std::span<const double> cumulative, double s);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Crossing-number test. Points exactly on a left/bottom edge count as inside,
/// on a right/top edge as outside (half-open, consistent across adjacent polygons).
bool point_in_polygon(std::span<const Vec2> poly, Vec2 p);
double distance_to_polygon_boundary(std::span<const Vec2> poly, Vec2 p);
bool polygon_is_simple(std::span<const Vec2> poly);

/// Strip polygon around a centreline: left offsets forward, right offsets backward.
Polygon offset_strip(std::span<const Vec2> centreline, double half_width);
/// Offsets a polyline laterally (left positive) using averaged vertex normals.
Polyline offset_polyline(std::span<const Vec2> line, double offset);

/// Oriented rectangle footprint.
struct OrientedBox {
  Vec2 centre;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::array<Vec2, 4> corners() const;
  bool contains(Vec2 p) const;
};

/// Separating-axis overlap test. Touching boxes count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Polyline with arc-length parametrisation and a continuous lateral frame.
///
/// Offsets are measured along interpolated miter vectors, so every point in the
/// band |d| < (local radius of curvature) has a unique (s, d) and
/// `point(s, d)` is the exact inverse of `project`.
class Path {
 public:
  Path() = default;
  /// For closed paths the first vertex must not be repeated at the end.
  explicit Path(Polyline points, bool closed = false);

  const Polyline& points() const { return points_; }
  bool closed() const { return closed_; }
  bool empty() const { return points_.size() < 2; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  Vec2 point(double s, double d = 0.0) const;
  Vec2 tangent(double s) const;
  double heading(double s) const;

  struct Frenet {
    double s = 0.0;
    double d = 0.0;
    bool inside = true;  // false when the point lies beyond an open end
  };
  Frenet project(Vec2 p) const;
  /// Restricts the search to segments overlapping [s_lo, s_hi].
  Frenet project_near(Vec2 p, double s_lo, double s_hi) const;

  /// Wraps s for closed paths; clamps for open ones.
  double wrap(double s) const;

 private:
  std::size_t segment_at(double s) const;
  Frenet project_range(Vec2 p, std::size_t first, std::size_t last) const;

  Polyline points_;  // closed paths store the first vertex again at the end
  std::vector<double> cumulative_;
  std::vector<Vec2> miters_;
  bool closed_ = false;
};

}  // namespace rondo
