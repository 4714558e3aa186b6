#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rondo/plan.hpp"
#include "rondo/policy.hpp"
#include "rondo/scenario.hpp"
#include "rondo/sim.hpp"

namespace rondo {

inline constexpr double kStandstillGap = 0.1;  // m between consecutive waypoints

struct PlanLogEntry {
  double time = 0.0;
  WaypointPlan plan;
  std::optional<Pose2> sdv_pose;
};
using PlanLog = std::vector<PlanLogEntry>;

/// Plan log of an episode: plan k was produced at state-log tick k.
PlanLog plan_log_of(const EpisodeResult& result);

struct TpiResult {
  std::vector<double> values;
  double mean = 0.0;
  int skipped = 0;
};

/// Distance between the horizon point of the plan at tau and the point 0.2 s
/// short of the horizon of the plan issued 0.2 s later, both in world frame.
TpiResult temporal_plan_instability(std::span<const PlanLogEntry> log);

/// 1 / (k * 0.2) for the first waypoint k whose SDV footprint overlaps frozen
/// traffic; 0 when the plan stays clear.
double waypoints_inverse_ttc(const WaypointPlan& plan, const VehicleState& sdv, const VehicleDims& sdv_dims,
                             std::span<const OrientedBox> traffic);
double waypoints_inverse_ttc(const WaypointPlan& plan, std::span<const Agent> world);

bool classify_standstill(const WaypointPlan& plan);
bool classify_stopping(const WaypointPlan& plan);

// ---------------------------------------------------------------------------
// Labelled snippets of expert driving.

enum class SnippetKind { stopping_behind, keep_standing, drive_off, following, yielding };
inline constexpr SnippetKind kAllSnippetKinds[] = {SnippetKind::stopping_behind, SnippetKind::keep_standing,
                                                   SnippetKind::drive_off, SnippetKind::following,
                                                   SnippetKind::yielding};
std::string_view snippet_name(SnippetKind k);

struct SnippetTick {
  double time = 0.0;
  std::vector<Agent> world;
  std::vector<TickRecord> history;  // recent state-log records up to and including `time`
  WaypointPlan truth;               // logged SDV future in the SDV frame
};

struct Snippet {
  SnippetKind kind = SnippetKind::following;
  std::uint64_t sequence_id = 0;
  ScenarioKind scenario = ScenarioKind::RandomTraffic;
  std::shared_ptr<const RoadMap> map;
  std::vector<SnippetTick> ticks;
};

struct SnippetOptions {
  double window = 2.0;  // s
  double history_keep = 1.0;
  SimConfig sim;
};

/// Runs the expert on `config` and cuts labelled, non-overlapping windows.
std::vector<Snippet> extract_snippets(const EpisodeConfig& config, std::uint64_t sequence_id,
                                      const SnippetOptions& opts = {});

struct OpenLoopRow {
  SnippetKind kind = SnippetKind::following;
  int snippets = 0;
  int plans = 0;
  double tpi = 0.0;
  double inverse_ttc = 0.0;
  double standstill = 0.0;
  double stopping = 0.0;
  double ade = 0.0;
  double fde = 0.0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

std::vector<OpenLoopRow> eval_open_loop(const PolicyFactory& make_policy, std::span<const Snippet> snippets);

// ---------------------------------------------------------------------------

struct ScenarioMaps {
  std::shared_ptr<const RoadMap> roundabout;
  std::shared_ptr<const RoadMap> rural;

  std::shared_ptr<const RoadMap> for_kind(ScenarioKind k) const { return needs_roundabout(k) ? roundabout : rural; }
};

struct ClosedLoopRow {
  ScenarioKind kind = ScenarioKind::RandomTraffic;
  int episodes = 0;
  int success = 0;
  int collision = 0;
  int offroad = 0;
  int other = 0;  // timeout, infraction, fault
  double avg_speed = 0.0;

  double rate(int count) const { return episodes > 0 ? static_cast<double>(count) / episodes : 0.0; }
};

struct ClosedLoopOptions {
  int episodes = 100;
  std::uint64_t seed = 0;
  ScenarioParams params;
  SimConfig sim;
  bool parallel = true;  // episodes over OpenMP threads; results do not depend on it
};

/// Episode seed i of a kind; shared by every policy evaluated with the same seed.
std::uint64_t episode_seed(std::uint64_t seed, ScenarioKind kind, int index);

std::vector<ClosedLoopRow> eval_closed_loop(const PolicyFactory& make_policy, std::span<const ScenarioKind> kinds,
                                            const ScenarioMaps& maps, const ClosedLoopOptions& opts);

struct ProportionTest {
  double z = 0.0;
  double p_value = 1.0;  // one-sided, H1: p2 > p1
};

/// Pooled two-proportion z-test of x2/n2 against x1/n1.
ProportionTest proportion_increase_test(int x1, int n1, int x2, int n2);

// ---------------------------------------------------------------------------

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

std::string format_number(double v, int precision = 3);
void write_csv(std::ostream& os, const Table& t);
void write_text(std::ostream& os, const Table& t);

Table open_loop_table(std::span<const OpenLoopRow> rows);
Table closed_loop_table(std::span<const ClosedLoopRow> rows);

}  // namespace rondo
