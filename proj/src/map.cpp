#include "rondo/map.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace rondo {

namespace {

constexpr double kSampleSpacing = 0.5;
constexpr double kChunkLength = 8.0;
constexpr double kFlare = 6.0;

Polyline bezier(Vec2 p0, Vec2 c0, Vec2 c1, Vec2 p1, int samples) {
  Polyline out;
  out.reserve(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples, u = 1.0 - t;
    out.push_back(p0 * (u * u * u) + c0 * (3 * u * u * t) + c1 * (3 * u * t * t) + p1 * (t * t * t));
  }
  return out;
}

void append(Polyline& dst, const Polyline& src) {
  for (const Vec2 p : src) {
    if (!dst.empty() && norm(p - dst.back()) < 1e-9) continue;
    dst.push_back(p);
  }
}

/// Splits a centreline into overlapping chunks and returns their strip polygons.
std::vector<Polygon> strip_chunks(const Polyline& line, double half_width, bool closed) {
  Polyline pts = line;
  if (closed) pts.push_back(line.front());
  const auto cum = cumulative_length(pts);
  const double total = cum.back();
  const int chunks = std::max(1, static_cast<int>(std::ceil(total / kChunkLength)));
  std::vector<Polygon> out;
  std::size_t start = 0;
  for (int c = 1; c <= chunks; ++c) {
    const double target = total * c / chunks;
    std::size_t end = start + 1;
    while (end + 1 < pts.size() && cum[end] < target - 1e-9) ++end;
    if (c == chunks) end = pts.size() - 1;
    Polyline piece(pts.begin() + static_cast<std::ptrdiff_t>(start), pts.begin() + static_cast<std::ptrdiff_t>(end) + 1);
    if (closed) {
      // extend one vertex on each side so the miter at the seam matches the loop
      const std::size_t n = pts.size() - 1;
      piece.insert(piece.begin(), pts[(start + n - 1) % n]);
      piece.push_back(pts[(end + 1) % n]);
      Polygon strip = offset_strip(piece, half_width);
      // drop the helper vertices again: first/last of left side and of right side
      const std::size_t m = piece.size();
      Polygon trimmed;
      for (std::size_t i = 1; i + 1 < m; ++i) trimmed.push_back(strip[i]);
      for (std::size_t i = m + 1; i + 1 < 2 * m; ++i) trimmed.push_back(strip[i]);
      out.push_back(std::move(trimmed));
    } else {
      out.push_back(offset_strip(piece, half_width));
    }
    start = end;
  }
  return out;
}

Polyline circle(Vec2 centre, double radius, double a0, double a1) {
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(a1 - a0) * radius / kSampleSpacing)));
  Polyline out;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * i / n;
    out.push_back(centre + unit(a) * radius);
  }
  return out;
}

}  // namespace

double speed_limit_mps(SpeedClass c) {
  switch (c) {
    case SpeedClass::low: return 30.0 / 3.6;
    case SpeedClass::mid: return 50.0 / 3.6;
    case SpeedClass::high: return 70.0 / 3.6;
  }
  return 50.0 / 3.6;
}

const Lane& RoadMap::lane(int lane_id) const {
  if (lane_id < 0 || lane_id >= static_cast<int>(lanes.size())) throw MapError("unknown lane id " + std::to_string(lane_id));
  return lanes[static_cast<std::size_t>(lane_id)];
}

void RoadMap::finalize() {
  for (Lane& l : lanes) {
    Polyline pts = l.centreline;
    l.path = Path(std::move(pts), l.closed);
  }
  drivable_bounds.clear();
  for (const Polygon& poly : drivable) {
    Box b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
          {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
    for (const Vec2 p : poly) {
      b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y)};
      b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y)};
    }
    drivable_bounds.push_back(b);
  }
}

RoadMap synthesize_roundabout(const RoundaboutParams& params, const std::string& id) {
  if (params.arm_count < 3 || params.arm_count > 4) throw MapError("arm_count must be 3 or 4");
  if (!(params.lane_width > 0.0)) throw MapError("lane_width must be positive");
  if (!(params.ring_radius > params.lane_width)) throw MapError("ring_radius must exceed lane_width");
  if (!(params.arm_length > 0.0)) throw MapError("arm_length must be positive");

  std::vector<double> headings = params.arm_headings;
  if (headings.empty()) {
    for (int k = 0; k < params.arm_count; ++k) headings.push_back(2.0 * kPi * k / params.arm_count);
  }
  if (static_cast<int>(headings.size()) != params.arm_count) throw MapError("arm_headings size must equal arm_count");
  for (double& h : headings) {
    h = std::fmod(h, 2.0 * kPi);
    if (h < 0) h += 2.0 * kPi;
  }
  std::sort(headings.begin(), headings.end());

  const double R = params.ring_radius, w = params.lane_width;
  const double r_near = R + 0.5 * w + kFlare;
  const double r_far = r_near + params.arm_length;
  const double delta = std::min(0.55, (kFlare + w) / R);
  for (std::size_t k = 0; k < headings.size(); ++k) {
    const double next = k + 1 < headings.size() ? headings[k + 1] : headings[0] + 2.0 * kPi;
    if (next - headings[k] < 2.0 * delta + 0.3) throw MapError("arm headings too close for ring radius");
  }

  RoadMap map;
  map.id = id;
  RoundaboutInfo info;
  info.ring_radius = R;
  info.lane_width = w;

  // ring lane, counter-clockwise
  const int ring_points = static_cast<int>(std::ceil(2.0 * kPi * R / kSampleSpacing));
  Lane ring;
  ring.kind = LaneKind::ring;
  ring.width = w;
  ring.closed = true;
  ring.limit_class = SpeedClass::low;
  for (int i = 0; i < ring_points; ++i) ring.centreline.push_back(unit(2.0 * kPi * i / ring_points) * R);

  std::vector<Lane> arm_lanes;
  for (std::size_t k = 0; k < headings.size(); ++k) {
    const double th = headings[k];
    const Vec2 u = unit(th), t = left_normal(u);

    Lane entry;
    entry.kind = LaneKind::entry;
    entry.arm = static_cast<int>(k);
    entry.width = w;
    entry.limit_class = SpeedClass::mid;
    {
      const Vec2 far = u * r_far + t * (0.5 * w), near = u * r_near + t * (0.5 * w);
      Polyline line = densify(Polyline{far, near}, kSampleSpacing);
      const Vec2 p1 = unit(th + delta) * R;
      const Vec2 tan1 = left_normal(unit(th + delta));
      const double c = 0.45 * norm(p1 - near);
      append(line, densify(bezier(near, near - u * c, p1 - tan1 * c, p1, 48), kSampleSpacing));
      entry.centreline = std::move(line);
    }
    Lane exit;
    exit.kind = LaneKind::exit;
    exit.arm = static_cast<int>(k);
    exit.width = w;
    exit.limit_class = SpeedClass::mid;
    {
      const Vec2 q0 = unit(th - delta) * R;
      const Vec2 tan0 = left_normal(unit(th - delta));
      const Vec2 near = u * r_near - t * (0.5 * w), far = u * r_far - t * (0.5 * w);
      const double c = 0.45 * norm(near - q0);
      Polyline line = densify(bezier(q0, q0 + tan0 * c, near - u * c, near, 48), kSampleSpacing);
      append(line, densify(Polyline{near, far}, kSampleSpacing));
      exit.centreline = std::move(line);
    }
    arm_lanes.push_back(std::move(entry));
    arm_lanes.push_back(std::move(exit));
  }

  // lane ids: 0 = ring, then entry/exit per arm
  map.lanes.push_back(std::move(ring));
  for (Lane& l : arm_lanes) map.lanes.push_back(std::move(l));
  for (std::size_t i = 0; i < map.lanes.size(); ++i) map.lanes[i].id = static_cast<int>(i);
  info.ring_lane = 0;
  map.lanes[0].successors.push_back(0);
  for (std::size_t k = 0; k < headings.size(); ++k) {
    const int entry_id = static_cast<int>(1 + 2 * k), exit_id = entry_id + 1;
    map.lanes[static_cast<std::size_t>(entry_id)].successors = {0};
    map.lanes[static_cast<std::size_t>(entry_id)].yield_to = {0};
    map.lanes[0].successors.push_back(exit_id);
  }
  map.finalize();

  const Lane& ring_lane = map.lanes[0];
  for (std::size_t k = 0; k < headings.size(); ++k) {
    ArmInfo arm;
    arm.heading = headings[k];
    arm.entry_lane = static_cast<int>(1 + 2 * k);
    arm.exit_lane = arm.entry_lane + 1;
    const Lane& entry = map.lanes[static_cast<std::size_t>(arm.entry_lane)];
    const Lane& exit = map.lanes[static_cast<std::size_t>(arm.exit_lane)];
    arm.merge_s = ring_lane.path.project(entry.centreline.back()).s;
    arm.diverge_s = ring_lane.path.project(exit.centreline.front()).s;
    // stop line where the entry reaches the ring's outer edge
    const auto cum = cumulative_length(entry.centreline);
    arm.yield_s = cum.back();
    for (std::size_t i = 0; i < entry.centreline.size(); ++i) {
      if (norm(entry.centreline[i]) <= R + 0.5 * w + 0.5) {
        arm.yield_s = cum[i];
        break;
      }
    }
    info.arms.push_back(arm);
  }

  // drivable surface and speed zones, chunked so every polygon stays simple
  const double low_zone_radius = r_near + 15.0;
  for (const Lane& l : map.lanes) {
    for (Polygon& poly : strip_chunks(l.centreline, 0.5 * w, l.closed)) {
      SpeedClass cls = l.limit_class;
      if (l.kind != LaneKind::ring) {
        double min_r = std::numeric_limits<double>::infinity();
        for (const Vec2 p : poly) min_r = std::min(min_r, norm(p));
        cls = min_r < low_zone_radius ? SpeedClass::low : SpeedClass::mid;
      }
      map.speed_zones.push_back({poly, cls});
      map.drivable.push_back(std::move(poly));
    }
  }

  // boundaries
  map.boundaries.push_back({circle({}, R - 0.5 * w, 0.0, 2.0 * kPi), BoundaryKind::solid});
  const double open = delta + 0.15;
  for (std::size_t k = 0; k < headings.size(); ++k) {
    const double a0 = headings[k] + open;
    const double a1 = (k + 1 < headings.size() ? headings[k + 1] : headings[0] + 2.0 * kPi) - open;
    map.boundaries.push_back({circle({}, R + 0.5 * w, a0, a1), BoundaryKind::solid});
  }
  for (const ArmInfo& arm : info.arms) {
    const Vec2 u = unit(arm.heading);
    auto outside_ring = [&](const Polyline& line) {
      Polyline kept;
      for (const Vec2 p : line)
        if (norm(p) >= R + 0.5 * w) kept.push_back(p);
      return kept;
    };
    const Lane& entry = map.lane(arm.entry_lane);
    const Lane& exit = map.lane(arm.exit_lane);
    map.boundaries.push_back({outside_ring(offset_polyline(entry.centreline, -0.5 * w)), BoundaryKind::solid});
    map.boundaries.push_back({outside_ring(offset_polyline(exit.centreline, -0.5 * w)), BoundaryKind::solid});
    map.boundaries.push_back({densify(Polyline{u * r_near, u * r_far}, kSampleSpacing), BoundaryKind::broken});
  }

  map.roundabout = std::move(info);
  map.finalize();
  return map;
}

RoadMap synthesize_rural_road(double length, const std::vector<double>& curvature_profile, const std::string& id,
                              double lane_width) {
  if (!(length > 0.0)) throw MapError("road length must be positive");
  auto curvature_at = [&](double s) {
    if (curvature_profile.empty()) return 0.0;
    if (curvature_profile.size() == 1) return curvature_profile[0];
    const double pos = s / length * static_cast<double>(curvature_profile.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(pos), curvature_profile.size() - 2);
    const double f = pos - static_cast<double>(i);
    return curvature_profile[i] * (1.0 - f) + curvature_profile[i + 1] * f;
  };

  // integrate heading with the midpoint rule at fine steps
  const int steps = static_cast<int>(std::ceil(length / kSampleSpacing));
  const double ds = length / steps;
  Polyline ref{{0.0, 0.0}};
  double heading = 0.0;
  Vec2 p{};
  for (int i = 0; i < steps; ++i) {
    const double s = i * ds;
    const double k0 = curvature_at(s), k1 = curvature_at(s + ds);
    const double mid_heading = heading + 0.5 * ds * (0.75 * k0 + 0.25 * k1);
    p += unit(mid_heading) * ds;
    heading += 0.5 * ds * (k0 + k1);
    ref.push_back(p);
  }

  RoadMap map;
  map.id = id;
  Lane forward;
  forward.id = 0;
  forward.kind = LaneKind::road;
  forward.width = lane_width;
  forward.limit_class = SpeedClass::high;
  forward.centreline = offset_polyline(ref, -0.5 * lane_width);
  Lane backward = forward;
  backward.id = 1;
  Polyline back_line = offset_polyline(ref, 0.5 * lane_width);
  std::reverse(back_line.begin(), back_line.end());
  backward.centreline = std::move(back_line);
  map.lanes = {forward, backward};

  for (const Lane& l : map.lanes) {
    for (Polygon& poly : strip_chunks(l.centreline, 0.5 * lane_width, false)) {
      map.speed_zones.push_back({poly, SpeedClass::high});
      map.drivable.push_back(std::move(poly));
    }
  }
  map.boundaries.push_back({offset_polyline(ref, -lane_width), BoundaryKind::solid});
  map.boundaries.push_back({offset_polyline(ref, lane_width), BoundaryKind::solid});
  map.boundaries.push_back({ref, BoundaryKind::broken});
  map.finalize();
  return map;
}

LaneCoord project_to_lane(const RoadMap& map, int lane_id, Vec2 point) {
  const Path::Frenet f = map.lane(lane_id).path.project(point);
  return {f.s, f.d};
}

Vec2 lane_point(const RoadMap& map, int lane_id, LaneCoord coord) { return map.lane(lane_id).path.point(coord.s, coord.d); }

bool inside_drivable(const RoadMap& map, Vec2 point) {
  for (std::size_t i = 0; i < map.drivable.size(); ++i) {
    const auto& b = map.drivable_bounds[i];
    if (point.x < b.lo.x || point.x > b.hi.x || point.y < b.lo.y || point.y > b.hi.y) continue;
    if (point_in_polygon(map.drivable[i], point)) return true;
  }
  return false;
}

double distance_to_drivable(const RoadMap& map, Vec2 point) {
  if (map.drivable.empty()) throw MapError("map has no drivable area");
  if (inside_drivable(map, point)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.drivable.size(); ++i) {
    const auto& b = map.drivable_bounds[i];
    const double dx = std::max({b.lo.x - point.x, 0.0, point.x - b.hi.x});
    const double dy = std::max({b.lo.y - point.y, 0.0, point.y - b.hi.y});
    if (std::hypot(dx, dy) >= best) continue;
    best = std::min(best, distance_to_polygon_boundary(map.drivable[i], point));
  }
  return best;
}

std::optional<SpeedClass> speed_class_at(const RoadMap& map, Vec2 point) {
  for (const SpeedZone& z : map.speed_zones)
    if (point_in_polygon(z.polygon, point)) return z.cls;
  return std::nullopt;
}

bool check_connectivity(const RoadMap& map) {
  if (!map.roundabout) return true;
  const int ring = map.roundabout->ring_lane;
  auto reachable_from = [&](int start) {
    std::set<int> seen{start};
    std::queue<int> q;
    q.push(start);
    while (!q.empty()) {
      const int cur = q.front();
      q.pop();
      for (const int next : map.lane(cur).successors)
        if (seen.insert(next).second) q.push(next);
    }
    return seen;
  };
  const auto from_ring = reachable_from(ring);
  for (const ArmInfo& arm : map.roundabout->arms) {
    if (!reachable_from(arm.entry_lane).contains(ring)) return false;
    if (!from_ring.contains(arm.exit_lane)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

const RoutePath::Span& RoutePath::span_at(double path_s) const {
  for (const Span& sp : spans)
    if (path_s < sp.path_end) return sp;
  return spans.back();
}

std::optional<double> RoutePath::path_s_of(int lane_id, double lane_s) const {
  for (const Span& sp : spans) {
    if (sp.lane_id != lane_id) continue;
    double offset = lane_s - sp.lane_start;
    if (sp.lane_period > 0.0) {
      offset = std::fmod(offset, sp.lane_period);
      if (offset < -1e-6) offset += sp.lane_period;
    }
    if (offset >= -1e-6 && offset <= sp.path_end - sp.path_start + 1e-6) return sp.path_start + offset;
  }
  return std::nullopt;
}

RoutePath build_route_path(const RoadMap& map, const Route& route) {
  if (route.lane_sequence.empty()) throw MapError("empty route");
  for (std::size_t i = 1; i < route.lane_sequence.size(); ++i) {
    const auto& succ = map.lane(route.lane_sequence[i - 1]).successors;
    if (std::find(succ.begin(), succ.end(), route.lane_sequence[i]) == succ.end())
      throw MapError("route lanes are not connected");
  }

  Polyline pts;
  RoutePath out;
  double path_len = 0.0;
  auto push = [&](Vec2 p) {
    if (!pts.empty()) {
      const double step = norm(p - pts.back());
      if (step < 1e-6) return;
      path_len += step;
    }
    pts.push_back(p);
  };

  const std::size_t n = route.lane_sequence.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Lane& lane = map.lane(route.lane_sequence[i]);
    double lane_from = 0.0, lane_to = lane.path.length();
    if (lane.closed) {
      lane_from = i > 0 ? lane.path.project(map.lane(route.lane_sequence[i - 1]).centreline.back()).s : route.start_s;
      lane_to = i + 1 < n ? lane.path.project(map.lane(route.lane_sequence[i + 1]).centreline.front()).s
                          : lane_from + std::max(route.goal_s, 0.0);
      if (i + 1 < n) {
        while (lane_to <= lane_from + 1.0) lane_to += lane.path.length();
      }
    }
    RoutePath::Span span;
    span.lane_id = lane.id;
    span.path_start = path_len;
    span.lane_start = lane_from;
    if (lane.closed) span.lane_period = lane.path.length();
    if (lane.closed) {
      const int steps = std::max(1, static_cast<int>(std::ceil((lane_to - lane_from) / kSampleSpacing)));
      for (int k = 0; k <= steps; ++k) push(lane.path.point(lane_from + (lane_to - lane_from) * k / steps));
    } else {
      for (const Vec2 p : lane.centreline) push(p);
    }
    span.path_end = path_len;
    out.spans.push_back(span);
  }
  out.path = Path(std::move(pts));
  const RoutePath::Span& last = out.spans.back();
  const Lane& last_lane = map.lane(last.lane_id);
  out.goal_s = last_lane.closed ? last.path_end : std::min(last.path_start + route.goal_s, last.path_end);
  return out;
}

Route roundabout_route(const RoadMap& map, int from_arm, int to_arm, double goal_s) {
  if (!map.roundabout) throw MapError("map is not a roundabout");
  const auto& arms = map.roundabout->arms;
  if (from_arm < 0 || to_arm < 0 || from_arm >= static_cast<int>(arms.size()) || to_arm >= static_cast<int>(arms.size()))
    throw MapError("arm index out of range");
  return Route{{arms[static_cast<std::size_t>(from_arm)].entry_lane, map.roundabout->ring_lane,
                arms[static_cast<std::size_t>(to_arm)].exit_lane},
               goal_s};
}

// ---------------------------------------------------------------------------
// Line-based text container. Doubles use %.17g so a round trip is exact.

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_points(std::ostringstream& os, const Polyline& pts) {
  os << pts.size();
  for (const Vec2 p : pts) os << ' ' << fmt(p.x) << ' ' << fmt(p.y);
  os << '\n';
}

const char* kind_name(LaneKind k) {
  switch (k) {
    case LaneKind::entry: return "entry";
    case LaneKind::exit: return "exit";
    case LaneKind::ring: return "ring";
    case LaneKind::road: return "road";
  }
  return "road";
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}
  std::istringstream next(const std::string& expected_tag) {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file, expected '" + expected_tag + "'");
    ++line_no_;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != expected_tag) fail("expected '" + expected_tag + "', found '" + tag + "'");
    return ls;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw MapError("map format error at line " + std::to_string(line_no_) + ": " + msg);
  }
  template <typename T>
  T read(std::istringstream& ls, const char* what) {
    T v{};
    if (!(ls >> v)) fail(std::string("cannot read ") + what);
    return v;
  }
  Polyline read_points(std::istringstream& ls) {
    const auto n = read<std::size_t>(ls, "point count");
    Polyline pts(n);
    for (auto& p : pts) {
      p.x = read<double>(ls, "x");
      p.y = read<double>(ls, "y");
    }
    return pts;
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

}  // namespace

std::string serialize_map(const RoadMap& map) {
  std::ostringstream os;
  os << "RONDOMAP1\n";
  os << "id " << map.id << '\n';
  os << "lanes " << map.lanes.size() << '\n';
  for (const Lane& l : map.lanes) {
    os << "lane " << l.id << ' ' << kind_name(l.kind) << ' ' << l.arm << ' ' << fmt(l.width) << ' '
       << static_cast<int>(l.limit_class) << ' ' << (l.closed ? 1 : 0) << ' ' << l.successors.size();
    for (int s : l.successors) os << ' ' << s;
    os << ' ' << l.yield_to.size();
    for (int y : l.yield_to) os << ' ' << y;
    os << '\n';
    os << "points ";
    write_points(os, l.centreline);
  }
  os << "boundaries " << map.boundaries.size() << '\n';
  for (const Boundary& b : map.boundaries) {
    os << "boundary " << (b.kind == BoundaryKind::solid ? "solid" : "broken") << ' ';
    write_points(os, b.line);
  }
  os << "drivable " << map.drivable.size() << '\n';
  for (const Polygon& p : map.drivable) {
    os << "polygon ";
    write_points(os, p);
  }
  os << "zones " << map.speed_zones.size() << '\n';
  for (const SpeedZone& z : map.speed_zones) {
    os << "zone " << static_cast<int>(z.cls) << ' ';
    write_points(os, z.polygon);
  }
  if (map.roundabout) {
    const auto& r = *map.roundabout;
    os << "roundabout " << fmt(r.centre.x) << ' ' << fmt(r.centre.y) << ' ' << fmt(r.ring_radius) << ' '
       << fmt(r.lane_width) << ' ' << r.ring_lane << ' ' << r.arms.size() << '\n';
    for (const ArmInfo& a : r.arms) {
      os << "arm " << a.entry_lane << ' ' << a.exit_lane << ' ' << fmt(a.heading) << ' ' << fmt(a.yield_s) << ' '
         << fmt(a.merge_s) << ' ' << fmt(a.diverge_s) << '\n';
    }
  } else {
    os << "roundabout none\n";
  }
  os << "end\n";
  return os.str();
}

RoadMap deserialize_map(const std::string& text) {
  LineReader r(text);
  r.next("RONDOMAP1");
  RoadMap map;
  {
    auto ls = r.next("id");
    map.id = r.read<std::string>(ls, "id");
  }
  auto ls = r.next("lanes");
  const auto lane_count = r.read<std::size_t>(ls, "lane count");
  for (std::size_t i = 0; i < lane_count; ++i) {
    auto hdr = r.next("lane");
    Lane l;
    l.id = r.read<int>(hdr, "lane id");
    const auto kind = r.read<std::string>(hdr, "lane kind");
    if (kind == "entry") l.kind = LaneKind::entry;
    else if (kind == "exit") l.kind = LaneKind::exit;
    else if (kind == "ring") l.kind = LaneKind::ring;
    else if (kind == "road") l.kind = LaneKind::road;
    else r.fail("unknown lane kind '" + kind + "'");
    l.arm = r.read<int>(hdr, "arm");
    l.width = r.read<double>(hdr, "width");
    const int cls = r.read<int>(hdr, "limit class");
    if (cls < 0 || cls > 2) r.fail("limit class out of range");
    l.limit_class = static_cast<SpeedClass>(cls);
    l.closed = r.read<int>(hdr, "closed flag") != 0;
    const auto ns = r.read<std::size_t>(hdr, "successor count");
    for (std::size_t k = 0; k < ns; ++k) l.successors.push_back(r.read<int>(hdr, "successor"));
    const auto ny = r.read<std::size_t>(hdr, "yield count");
    for (std::size_t k = 0; k < ny; ++k) l.yield_to.push_back(r.read<int>(hdr, "yield lane"));
    auto pts = r.next("points");
    l.centreline = r.read_points(pts);
    if (l.centreline.size() < 2) r.fail("lane centreline needs at least two points");
    if (!(l.width > 0.0)) r.fail("lane width must be positive");
    map.lanes.push_back(std::move(l));
  }
  ls = r.next("boundaries");
  const auto nb = r.read<std::size_t>(ls, "boundary count");
  for (std::size_t i = 0; i < nb; ++i) {
    auto bl = r.next("boundary");
    Boundary b;
    const auto kind = r.read<std::string>(bl, "boundary kind");
    if (kind == "solid") b.kind = BoundaryKind::solid;
    else if (kind == "broken") b.kind = BoundaryKind::broken;
    else r.fail("unknown boundary kind '" + kind + "'");
    b.line = r.read_points(bl);
    map.boundaries.push_back(std::move(b));
  }
  ls = r.next("drivable");
  const auto np = r.read<std::size_t>(ls, "polygon count");
  for (std::size_t i = 0; i < np; ++i) {
    auto pl = r.next("polygon");
    map.drivable.push_back(r.read_points(pl));
  }
  ls = r.next("zones");
  const auto nz = r.read<std::size_t>(ls, "zone count");
  for (std::size_t i = 0; i < nz; ++i) {
    auto zl = r.next("zone");
    SpeedZone z;
    const int cls = r.read<int>(zl, "zone class");
    if (cls < 0 || cls > 2) r.fail("zone class out of range");
    z.cls = static_cast<SpeedClass>(cls);
    z.polygon = r.read_points(zl);
    map.speed_zones.push_back(std::move(z));
  }
  auto rl = r.next("roundabout");
  std::string first;
  rl >> first;
  if (first != "none") {
    RoundaboutInfo info;
    std::istringstream rest(first + " " + std::string(std::istreambuf_iterator<char>(rl), {}));
    info.centre.x = r.read<double>(rest, "centre x");
    info.centre.y = r.read<double>(rest, "centre y");
    info.ring_radius = r.read<double>(rest, "ring radius");
    info.lane_width = r.read<double>(rest, "lane width");
    info.ring_lane = r.read<int>(rest, "ring lane");
    const auto na = r.read<std::size_t>(rest, "arm count");
    for (std::size_t i = 0; i < na; ++i) {
      auto al = r.next("arm");
      ArmInfo a;
      a.entry_lane = r.read<int>(al, "entry lane");
      a.exit_lane = r.read<int>(al, "exit lane");
      a.heading = r.read<double>(al, "heading");
      a.yield_s = r.read<double>(al, "yield s");
      a.merge_s = r.read<double>(al, "merge s");
      a.diverge_s = r.read<double>(al, "diverge s");
      info.arms.push_back(a);
    }
    map.roundabout = std::move(info);
  }
  r.next("end");
  map.finalize();
  return map;
}

void save_map(const RoadMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapError("cannot open " + path + " for writing");
  out << serialize_map(map);
}

RoadMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_map(ss.str());
}

}  // namespace rondo
