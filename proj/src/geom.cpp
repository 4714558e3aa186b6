#include "rondo/geom.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace rondo {

double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

std::vector<double> cumulative_length(std::span<const Vec2> line) {
  std::vector<double> out(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) out[i] = out[i - 1] + norm(line[i] - line[i - 1]);
  return out;
}

double polyline_length(std::span<const Vec2> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += norm(line[i] - line[i - 1]);
  return total;
}

Polyline densify(std::span<const Vec2> line, double max_spacing) {
  Polyline out;
  if (line.empty()) return out;
  out.push_back(line[0]);
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1], b = line[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(norm(b - a) / max_spacing)));
    for (int k = 1; k <= pieces; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
  }
  return out;
}

Projection project(std::span<const Vec2> line, std::span<const double> cumulative, Vec2 p) {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i], ab = line[i + 1] - line[i];
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 foot = a + ab * t;
    const double dist = norm(p - foot);
    if (dist < best.distance) {
      const double len = std::sqrt(len2);
      best.distance = dist;
      best.s = cumulative[i] + t * len;
      best.d = len > 0.0 ? cross(ab, p - a) / len : 0.0;
      best.segment = i;
    }
  }
  return best;
}

namespace {
std::size_t find_segment(std::span<const double> cumulative, double s) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, cumulative.size() - 2);
}
}  // namespace

Vec2 point_at(std::span<const Vec2> line, std::span<const double> cumulative, double s) {
  if (line.size() == 1) return line[0];
  s = std::clamp(s, 0.0, cumulative.back());
  const std::size_t i = find_segment(cumulative, s);
  const double len = cumulative[i + 1] - cumulative[i];
  const double t = len > 0.0 ? (s - cumulative[i]) / len : 0.0;
  return line[i] + (line[i + 1] - line[i]) * t;
}

Vec2 tangent_at(std::span<const Vec2> line, std::span<const double> cumulative, double s) {
  s = std::clamp(s, 0.0, cumulative.back());
  const std::size_t i = find_segment(cumulative, s);
  const Vec2 ab = line[i + 1] - line[i];
  const double len = norm(ab);
  return len > 0.0 ? ab * (1.0 / len) : Vec2{1.0, 0.0};
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + ab * t));
}

bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon_boundary(std::span<const Vec2> poly, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  return best;
}

namespace {
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}
}  // namespace

bool polygon_is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

Polyline offset_polyline(std::span<const Vec2> line, double offset) {
  Polyline out;
  out.reserve(line.size());
  const std::size_t n = line.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 normal_sum{};
    double scale = 1.0;
    if (i > 0) normal_sum += left_normal((line[i] - line[i - 1]) * (1.0 / norm(line[i] - line[i - 1])));
    if (i + 1 < n) normal_sum += left_normal((line[i + 1] - line[i]) * (1.0 / norm(line[i + 1] - line[i])));
    const double len = norm(normal_sum);
    Vec2 miter = normal_sum * (1.0 / len);
    if (i > 0 && i + 1 < n) {
      // keep the offset edges parallel to the original segments
      const Vec2 n1 = left_normal((line[i] - line[i - 1]) * (1.0 / norm(line[i] - line[i - 1])));
      scale = 1.0 / std::max(0.2, dot(miter, n1));
    }
    out.push_back(line[i] + miter * (offset * scale));
  }
  return out;
}

Polygon offset_strip(std::span<const Vec2> centreline, double half_width) {
  Polygon poly = offset_polyline(centreline, half_width);
  const Polyline right = offset_polyline(centreline, -half_width);
  poly.insert(poly.end(), right.rbegin(), right.rend());
  return poly;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit(heading) * (0.5 * length);
  const Vec2 l = left_normal(unit(heading)) * (0.5 * width);
  return {centre + f + l, centre - f + l, centre - f - l, centre + f - l};
}

bool OrientedBox::contains(Vec2 p) const {
  const Vec2 local = rotate(p - centre, -heading);
  return std::abs(local.x) <= 0.5 * length && std::abs(local.y) <= 0.5 * width;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners(), cb = b.corners();
  const Vec2 axes[4] = {unit(a.heading), left_normal(unit(a.heading)), unit(b.heading), left_normal(unit(b.heading))};
  for (const Vec2 axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const Vec2 c : ca) {
      const double v = dot(c, axis);
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const Vec2 c : cb) {
      const double v = dot(c, axis);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Path::Path(Polyline points, bool closed) : points_(std::move(points)), closed_(closed) {
  if (points_.size() < 2) throw std::invalid_argument("Path needs at least two points");
  if (closed_) points_.push_back(points_.front());
  cumulative_ = cumulative_length(points_);
  const std::size_t n = points_.size();
  std::vector<Vec2> normals(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec2 ab = points_[i + 1] - points_[i];
    normals[i] = left_normal(ab * (1.0 / norm(ab)));
  }
  auto miter = [](Vec2 n1, Vec2 n2) {
    const double denom = std::max(0.2, 1.0 + dot(n1, n2));
    return (n1 + n2) * (1.0 / denom);
  };
  miters_.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) miters_[i] = miter(normals[i - 1], normals[i]);
  if (closed_) {
    miters_[0] = miter(normals[n - 2], normals[0]);
    miters_[n - 1] = miters_[0];
  } else {
    miters_[0] = normals[0];
    miters_[n - 1] = normals[n - 2];
  }
}

double Path::wrap(double s) const {
  const double len = length();
  if (closed_) {
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
    return s;
  }
  return std::clamp(s, 0.0, len);
}

std::size_t Path::segment_at(double s) const { return find_segment(cumulative_, s); }

Vec2 Path::point(double s, double d) const {
  s = wrap(s);
  const std::size_t i = segment_at(s);
  const double len = cumulative_[i + 1] - cumulative_[i];
  const double t = len > 0.0 ? (s - cumulative_[i]) / len : 0.0;
  const Vec2 base = points_[i] + (points_[i + 1] - points_[i]) * t;
  const Vec2 m = miters_[i] + (miters_[i + 1] - miters_[i]) * t;
  return base + m * d;
}

Vec2 Path::tangent(double s) const {
  const std::size_t i = segment_at(wrap(s));
  const Vec2 ab = points_[i + 1] - points_[i];
  return ab * (1.0 / norm(ab));
}

double Path::heading(double s) const {
  const Vec2 t = tangent(s);
  return std::atan2(t.y, t.x);
}

Path::Frenet Path::project_range(Vec2 p, std::size_t first, std::size_t last) const {
  const std::size_t segments = points_.size() - 1;
  Frenet best;
  double best_abs = std::numeric_limits<double>::infinity();
  constexpr double kSlack = 1e-9;
  for (std::size_t k = first; k <= last; ++k) {
    const std::size_t i = k % segments;
    const Vec2 a = points_[i], b = points_[i + 1];
    const double len = cumulative_[i + 1] - cumulative_[i];
    const Vec2 dir = (b - a) * (1.0 / len);
    const double d = cross(dir, p - a);
    if (std::abs(d) >= best_abs) continue;
    const Vec2 ma = miters_[i], mb = miters_[i + 1];
    const double denom = len + d * dot(mb - ma, dir);
    if (denom <= 0.0) continue;
    const double t = dot(p - a - ma * d, dir) / denom;
    if (t < -kSlack || t > 1.0 + kSlack) continue;
    best_abs = std::abs(d);
    best.s = cumulative_[i] + std::clamp(t, 0.0, 1.0) * len;
    best.d = d;
    best.inside = true;
  }
  if (std::isfinite(best_abs)) return best;

  // Beyond the ends (or in a fold): fall back to the nearest segment, clamped.
  const Projection nearest = rondo::project(points_, cumulative_, p);
  best.s = nearest.s;
  best.d = nearest.d;
  best.inside = closed_;
  return best;
}

Path::Frenet Path::project(Vec2 p) const { return project_range(p, 0, points_.size() - 2); }

Path::Frenet Path::project_near(Vec2 p, double s_lo, double s_hi) const {
  const std::size_t segments = points_.size() - 1;
  if (!closed_) {
    const std::size_t first = segment_at(std::clamp(s_lo, 0.0, length()));
    const std::size_t last = segment_at(std::clamp(s_hi, 0.0, length()));
    const Frenet f = project_range(p, first, last);
    return f;
  }
  if (s_hi - s_lo >= length()) return project(p);
  const std::size_t first = segment_at(wrap(s_lo));
  std::size_t last = segment_at(wrap(s_hi));
  if (last < first) last += segments;
  return project_range(p, first, last);
}

}  // namespace rondo
