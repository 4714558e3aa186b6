#include "rondo/metrics.hpp"

#include "rondo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace rondo {

PlanLog plan_log_of(const EpisodeResult& result) {
  PlanLog log;
  const std::size_t n = std::min(result.plan_log.size(), result.state_log.size());
  log.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    PlanLogEntry e;
    e.time = result.state_log[k].time;
    e.plan = result.plan_log[k];
    for (const AgentSnapshot& a : result.state_log[k].agents)
      if (a.role == AgentRole::sdv) e.sdv_pose = a.state.pose();
    log.push_back(e);
  }
  return log;
}

TpiResult temporal_plan_instability(std::span<const PlanLogEntry> log) {
  constexpr double kEps = 1e-6;
  TpiResult out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double want = log[i].time + kWaypointDt;
    j = std::max(j, i + 1);
    while (j < log.size() && log[j].time < want - kEps) ++j;
    if (j >= log.size()) break;
    if (std::abs(log[j].time - want) > kEps) continue;
    if (!log[i].sdv_pose || !log[j].sdv_pose) {
      ++out.skipped;
      continue;
    }
    const Vec2 end = log[i].sdv_pose->to_world(log[i].plan.points[kWaypointCount - 1]);
    const Vec2 next = log[j].sdv_pose->to_world(log[j].plan.points[kWaypointCount - 2]);
    out.values.push_back(norm(end - next));
  }
  if (!out.values.empty()) {
    double sum = 0.0;
    for (const double v : out.values) sum += v;
    out.mean = sum / static_cast<double>(out.values.size());
  }
  return out;
}

double waypoints_inverse_ttc(const WaypointPlan& plan, const VehicleState& sdv, const VehicleDims& sdv_dims,
                             std::span<const OrientedBox> traffic) {
  const Pose2 pose = sdv.pose();
  Vec2 prev{};
  double heading = 0.0;
  for (int k = 0; k < kWaypointCount; ++k) {
    const Vec2 p = plan.points[static_cast<std::size_t>(k)];
    const Vec2 step = p - prev;
    if (norm(step) > 1e-3) heading = std::atan2(step.y, step.x);
    prev = p;
    const OrientedBox box{pose.to_world(p), normalize_angle(pose.heading + heading), sdv_dims.length, sdv_dims.width};
    for (const OrientedBox& other : traffic)
      if (boxes_overlap(box, other)) return 1.0 / ((k + 1) * kWaypointDt);
  }
  return 0.0;
}

double waypoints_inverse_ttc(const WaypointPlan& plan, std::span<const Agent> world) {
  std::vector<OrientedBox> boxes;
  for (std::size_t i = 1; i < world.size(); ++i)
    if (world[i].active) boxes.push_back(world[i].box());
  return waypoints_inverse_ttc(plan, world[0].state, world[0].dims, boxes);
}

bool classify_standstill(const WaypointPlan& plan) { return norm(plan.points[0]) < kStandstillGap; }

bool classify_stopping(const WaypointPlan& plan) {
  if (classify_standstill(plan)) return false;
  for (int k = 1; k < kWaypointCount; ++k)
    if (norm(plan.points[static_cast<std::size_t>(k)] - plan.points[static_cast<std::size_t>(k - 1)]) < kStandstillGap)
      return true;
  return false;
}

// ---------------------------------------------------------------------------

std::string_view snippet_name(SnippetKind k) {
  switch (k) {
    case SnippetKind::stopping_behind: return "stopping-behind";
    case SnippetKind::keep_standing: return "keep-standing";
    case SnippetKind::drive_off: return "drive-off";
    case SnippetKind::following: return "following";
    case SnippetKind::yielding: return "yielding";
  }
  return "?";
}

namespace {

constexpr int kStepTicks = 2;
constexpr int kFutureTicks = kStepTicks * kWaypointCount;

struct TickFeatures {
  double speed = 0.0;
  std::optional<double> gap;
  bool yielding = false;
};

std::optional<SnippetKind> label_window(std::span<const TickFeatures> w) {
  const auto any_yield = std::any_of(w.begin(), w.end(), [](const TickFeatures& f) { return f.yielding; });
  double v_min = w[0].speed, v_max = w[0].speed;
  for (const TickFeatures& f : w) {
    v_min = std::min(v_min, f.speed);
    v_max = std::max(v_max, f.speed);
  }
  const TickFeatures& first = w.front();
  const TickFeatures& last = w.back();
  if (any_yield && v_min < 3.0) return SnippetKind::yielding;
  if (v_max < 0.1) return SnippetKind::keep_standing;
  if (first.speed < 0.1 && last.speed > 1.0) return SnippetKind::drive_off;
  if (first.speed > 2.0 && last.speed < 0.5 && last.gap && *last.gap < 15.0) return SnippetKind::stopping_behind;
  const bool following = std::all_of(w.begin(), w.end(),
                                     [](const TickFeatures& f) { return f.gap && *f.gap < 30.0 && f.speed > 2.0; });
  if (following) return SnippetKind::following;
  return std::nullopt;
}

}  // namespace

std::vector<Snippet> extract_snippets(const EpisodeConfig& config, std::uint64_t sequence_id,
                                      const SnippetOptions& opts) {
  SimConfig sim = opts.sim;
  sim.extra_time = std::max(sim.extra_time, kPlanHorizon + 0.05);
  const GateConfig gate = ExpertPolicyConfig{}.expert.gate;

  std::vector<std::vector<Agent>> worlds;
  std::vector<TickFeatures> features;
  TickHooks hooks;
  hooks.on_tick = [&](const TickView& v) {
    worlds.emplace_back(v.world.begin(), v.world.end());
    TickFeatures f;
    f.speed = v.sdv->speed;
    f.gap = v.sdv->gap;
    f.yielding = !v.world[0].committed && conflict_gate(0, v.world, *v.map, gate) == GateDecision::yield;
    features.push_back(f);
  };
  ExpertPolicy expert;
  const EpisodeResult res = run_episode(config, expert, hooks, sim);
  std::vector<Snippet> out;
  if (res.termination == Termination::collision || res.termination == Termination::offroad ||
      res.termination == Termination::fault)
    return out;

  const int n = static_cast<int>(std::min(worlds.size(), res.state_log.size()));
  const int w = static_cast<int>(std::lround(opts.window / kTickSeconds));
  const int first = kStepTicks * 2;
  for (int k = first; k + w - 1 + kFutureTicks < n;) {
    const auto kind = label_window(std::span<const TickFeatures>(features).subspan(static_cast<std::size_t>(k),
                                                                                 static_cast<std::size_t>(w)));
    if (!kind) {
      k += w / 4;
      continue;
    }
    Snippet s;
    s.kind = *kind;
    s.sequence_id = sequence_id;
    s.scenario = config.kind;
    s.map = config.map;
    for (int t = k; t < k + w; ++t) {
      SnippetTick st;
      st.time = res.state_log[static_cast<std::size_t>(t)].time;
      st.world = worlds[static_cast<std::size_t>(t)];
      for (int h = t; h >= 0 && res.state_log[static_cast<std::size_t>(h)].time >= st.time - opts.history_keep - 1e-9; --h)
        st.history.insert(st.history.begin(), res.state_log[static_cast<std::size_t>(h)]);
      const Pose2 pose = st.world[0].state.pose();
      for (int j = 1; j <= kWaypointCount; ++j)
        st.truth.points[static_cast<std::size_t>(j - 1)] =
            pose.to_local(worlds[static_cast<std::size_t>(t + kStepTicks * j)][0].state.position());
      s.ticks.push_back(std::move(st));
    }
    out.push_back(std::move(s));
    k += w;
  }
  return out;
}

namespace {

struct SnippetScore {
  std::vector<double> tpi;
  double inverse_ttc = 0.0;
  int standstill = 0;
  int stopping = 0;
  double ade = 0.0;
  double fde = 0.0;
  int plans = 0;
};

SnippetScore score_snippet(Policy& policy, const Snippet& s) {
  policy.reset();
  SnippetScore sc;
  PlanLog log;
  for (const SnippetTick& t : s.ticks) {
    const Observation obs{t.time, s.map.get(), t.world, t.history};
    const WaypointPlan plan = policy.act(obs);
    log.push_back({t.time, plan, t.world[0].state.pose()});
    sc.inverse_ttc += waypoints_inverse_ttc(plan, t.world);
    sc.standstill += classify_standstill(plan) ? 1 : 0;
    sc.stopping += classify_stopping(plan) ? 1 : 0;
    double err = 0.0;
    for (int k = 0; k < kWaypointCount; ++k)
      err += norm(plan.points[static_cast<std::size_t>(k)] - t.truth.points[static_cast<std::size_t>(k)]);
    sc.ade += err / kWaypointCount;
    sc.fde += norm(plan.points[kWaypointCount - 1] - t.truth.points[kWaypointCount - 1]);
    ++sc.plans;
  }
  sc.tpi = temporal_plan_instability(log).values;
  return sc;
}

}  // namespace

std::vector<OpenLoopRow> eval_open_loop(const PolicyFactory& make_policy, std::span<const Snippet> snippets) {
  std::vector<SnippetScore> scores(snippets.size());
  const auto n = static_cast<std::int64_t>(snippets.size());
#pragma omp parallel
  {
    std::unique_ptr<Policy> policy = make_policy();
#pragma omp for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
      scores[static_cast<std::size_t>(i)] = score_snippet(*policy, snippets[static_cast<std::size_t>(i)]);
  }

  std::vector<OpenLoopRow> rows;
  for (const SnippetKind kind : kAllSnippetKinds) {
    OpenLoopRow row;
    row.kind = kind;
    double tpi_sum = 0.0;
    std::size_t tpi_n = 0;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
      if (snippets[i].kind != kind) continue;
      const SnippetScore& sc = scores[i];
      ++row.snippets;
      row.plans += sc.plans;
      for (const double v : sc.tpi) tpi_sum += v;
      tpi_n += sc.tpi.size();
      row.inverse_ttc += sc.inverse_ttc;
      row.standstill += sc.standstill;
      row.stopping += sc.stopping;
      row.ade += sc.ade;
      row.fde += sc.fde;
    }
    if (row.plans > 0) {
      const double p = row.plans;
      row.inverse_ttc /= p;
      row.standstill /= p;
      row.stopping /= p;
      row.ade /= p;
      row.fde /= p;
    }
    row.tpi = tpi_n > 0 ? tpi_sum / static_cast<double>(tpi_n) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::uint64_t episode_seed(std::uint64_t seed, ScenarioKind kind, int index) {
  return derive_seed(derive_seed(seed, scenario_name(kind)), static_cast<std::uint64_t>(index));
}

std::vector<ClosedLoopRow> eval_closed_loop(const PolicyFactory& make_policy, std::span<const ScenarioKind> kinds,
                                            const ScenarioMaps& maps, const ClosedLoopOptions& opts) {
  const int per_kind = opts.episodes;
  const auto total = static_cast<std::int64_t>(kinds.size()) * per_kind;
  std::vector<Termination> terms(static_cast<std::size_t>(total));
  std::vector<double> speeds(static_cast<std::size_t>(total));
#pragma omp parallel if (opts.parallel)
  {
    std::unique_ptr<Policy> policy = make_policy();
#pragma omp for schedule(dynamic)
    for (std::int64_t e = 0; e < total; ++e) {
      const ScenarioKind kind = kinds[static_cast<std::size_t>(e / per_kind)];
      const int index = static_cast<int>(e % per_kind);
      const EpisodeConfig cfg =
          sample_scenario(kind, maps.for_kind(kind), episode_seed(opts.seed, kind, index), opts.params);
      const EpisodeResult r = run_episode(cfg, *policy, {}, opts.sim);
      terms[static_cast<std::size_t>(e)] = r.termination;
      speeds[static_cast<std::size_t>(e)] = r.avg_speed;
    }
  }

  std::vector<ClosedLoopRow> rows;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ClosedLoopRow row;
    row.kind = kinds[k];
    double speed_sum = 0.0;
    for (int i = 0; i < per_kind; ++i) {
      const std::size_t e = k * static_cast<std::size_t>(per_kind) + static_cast<std::size_t>(i);
      ++row.episodes;
      speed_sum += speeds[e];
      switch (terms[e]) {
        case Termination::success: ++row.success; break;
        case Termination::collision: ++row.collision; break;
        case Termination::offroad: ++row.offroad; break;
        default: ++row.other; break;
      }
    }
    row.avg_speed = row.episodes > 0 ? speed_sum / row.episodes : 0.0;
    rows.push_back(row);
  }
  return rows;
}

ProportionTest proportion_increase_test(int x1, int n1, int x2, int n2) {
  ProportionTest t;
  if (n1 <= 0 || n2 <= 0) return t;
  const double p1 = static_cast<double>(x1) / n1, p2 = static_cast<double>(x2) / n2;
  const double pooled = static_cast<double>(x1 + x2) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se <= 0.0) return t;
  t.z = (p2 - p1) / se;
  t.p_value = 0.5 * std::erfc(t.z / std::sqrt(2.0));
  return t;
}

// ---------------------------------------------------------------------------

std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
    os << '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
}

void write_text(std::ostream& os, const Table& t) {
  std::vector<std::size_t> width(t.columns.size(), 0);
  for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string& c = i < cells.size() ? cells[i] : std::string();
      if (i) os << "  ";
      // first column left-aligned, numbers right-aligned
      if (i == 0) os << c << std::string(width[i] - c.size(), ' ');
      else os << std::string(width[i] - c.size(), ' ') << c;
    }
    os << '\n';
  };
  if (!t.title.empty()) os << t.title << '\n';
  line(t.columns);
  std::size_t total = 0;
  for (const std::size_t w : width) total += w;
  os << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& r : t.rows) line(r);
}

Table open_loop_table(std::span<const OpenLoopRow> rows) {
  Table t;
  t.title = "open-loop evaluation";
  t.columns = {"snippet",
               "snippets",
               "plans",
               "temporal plan instability",
               "waypoints inverse TTC",
               "waypoints standstill",
               "waypoints stopping",
               "ADE",
               "FDE"};
  for (const OpenLoopRow& r : rows)
    t.add_row({std::string(snippet_name(r.kind)), std::to_string(r.snippets), std::to_string(r.plans),
               format_number(r.tpi), format_number(r.inverse_ttc), format_number(r.standstill),
               format_number(r.stopping), format_number(r.ade), format_number(r.fde)});
  return t;
}

Table closed_loop_table(std::span<const ClosedLoopRow> rows) {
  Table t;
  t.title = "closed-loop evaluation";
  t.columns = {"scenario", "episodes", "success", "collisions", "off-road", "other", "avg speed"};
  for (const ClosedLoopRow& r : rows)
    t.add_row({std::string(scenario_name(r.kind)), std::to_string(r.episodes), format_number(r.rate(r.success), 2),
               format_number(r.rate(r.collision), 2), format_number(r.rate(r.offroad), 2),
               format_number(r.rate(r.other), 2), format_number(r.avg_speed, 2)});
  return t;
}

}  // namespace rondo
