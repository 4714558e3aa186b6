#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rondo/geom.hpp"

namespace rondo {

/// Categorical speed limit. Absolute values only steer the expert's set speed.
enum class SpeedClass { low = 0, mid = 1, high = 2 };
double speed_limit_mps(SpeedClass c);

enum class BoundaryKind { solid, broken };
enum class LaneKind { entry, exit, ring, road };

struct Lane {
  int id = 0;
  LaneKind kind = LaneKind::road;
  int arm = -1;  // roundabout arm index, -1 for ring/road lanes
  Polyline centreline;
  double width = 3.5;
  std::vector<int> successors;
  std::vector<int> yield_to;
  SpeedClass limit_class = SpeedClass::mid;
  bool closed = false;
  Path path;  // derived from centreline
};

struct Boundary {
  Polyline line;
  BoundaryKind kind = BoundaryKind::solid;
};

struct SpeedZone {
  Polygon polygon;
  SpeedClass cls = SpeedClass::mid;
};

struct Route {
  std::vector<int> lane_sequence;
  double goal_s = 0.0;   // arc length on the final lane
  double start_s = 0.0;  // where a route starting on the ring joins it

  bool operator==(const Route&) const = default;
};

struct RoundaboutParams {
  double ring_radius = 15.0;
  int arm_count = 4;
  double arm_length = 60.0;
  double lane_width = 4.0;
  std::vector<double> arm_headings;  // outward directions; empty -> evenly spaced
};

/// Per-arm topology of a synthesized roundabout, in lane coordinates.
struct ArmInfo {
  int entry_lane = -1;
  int exit_lane = -1;
  double heading = 0.0;
  double yield_s = 0.0;    // stop line on the entry lane
  double merge_s = 0.0;    // where the entry joins the ring (ring arc length)
  double diverge_s = 0.0;  // where the exit leaves the ring (ring arc length)
};

struct RoundaboutInfo {
  Vec2 centre;
  double ring_radius = 0.0;
  double lane_width = 0.0;
  int ring_lane = -1;
  std::vector<ArmInfo> arms;
};

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RoadMap {
  std::string id;
  std::vector<Lane> lanes;
  std::vector<Boundary> boundaries;
  std::vector<Polygon> drivable;
  std::vector<SpeedZone> speed_zones;
  std::optional<RoundaboutInfo> roundabout;

  const Lane& lane(int lane_id) const;
  bool is_roundabout() const { return roundabout.has_value(); }
  /// Builds lane paths and bounding boxes; call after filling the raw fields.
  void finalize();

  struct Box {
    Vec2 lo, hi;
  };
  std::vector<Box> drivable_bounds;
};

RoadMap synthesize_roundabout(const RoundaboutParams& params, const std::string& id = "roundabout");
/// Curvature samples are spread evenly over [0, length] and linearly interpolated.
RoadMap synthesize_rural_road(double length, const std::vector<double>& curvature_profile,
                              const std::string& id = "rural", double lane_width = 3.75);

struct LaneCoord {
  double s = 0.0;
  double d = 0.0;
};
LaneCoord project_to_lane(const RoadMap& map, int lane_id, Vec2 point);
Vec2 lane_point(const RoadMap& map, int lane_id, LaneCoord coord);

double distance_to_drivable(const RoadMap& map, Vec2 point);
bool inside_drivable(const RoadMap& map, Vec2 point);
std::optional<SpeedClass> speed_class_at(const RoadMap& map, Vec2 point);

/// Ring -> exits and entry -> ring reachability for roundabouts; trivially true otherwise.
bool check_connectivity(const RoadMap& map);

/// A route unrolled into one open path, with the lane each stretch belongs to.
struct RoutePath {
  struct Span {
    int lane_id = 0;
    double path_start = 0.0;
    double path_end = 0.0;
    double lane_start = 0.0;  // lane arc length at path_start (ring lanes start mid-loop)
    double lane_period = 0.0; // length of a closed lane, 0 for open ones
  };
  Path path;
  std::vector<Span> spans;
  double goal_s = 0.0;  // path arc length of the goal

  const Span& span_at(double path_s) const;
  /// Path arc length of a lane coordinate; nullopt when the lane is not on the route.
  std::optional<double> path_s_of(int lane_id, double lane_s) const;
};

RoutePath build_route_path(const RoadMap& map, const Route& route);

/// Routes through a roundabout: entry `from_arm` -> ring -> exit `to_arm`.
Route roundabout_route(const RoadMap& map, int from_arm, int to_arm, double goal_s = 30.0);

std::string serialize_map(const RoadMap& map);
RoadMap deserialize_map(const std::string& text);
void save_map(const RoadMap& map, const std::string& path);
RoadMap load_map(const std::string& path);

}  // namespace rondo
