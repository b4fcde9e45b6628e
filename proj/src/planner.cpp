#include "oros/planner.hpp"

#include <algorithm>
#include <cmath>

#include "oros/energy.hpp"
#include "oros/log.hpp"

namespace oros {

namespace {

// Stay-in-place fallback: sensors off, no charging, batteries replayed with
// simulator-side clamping so predictions stay meaningful.
Plan fallback_plan(const MissionState& state, const Scenario& scenario, int window,
                   DynamicsVariant variant) {
  const int R = static_cast<int>(scenario.robots.size());
  Plan plan;
  plan.window = window;
  plan.fallback = true;
  plan.steps.assign(R, std::vector<RobotPlanStep>(window + 1));
  GridMap grid = scenario.grid;
  for (Cell c : state.known_obstacles) grid.obstacles.insert(c);
  for (int r = 0; r < R; ++r) {
    plan.robot_ids.push_back(scenario.robots[r].id);
    double level = state.batteries[r];
    Cell pos = state.positions[r];
    plan.steps[r][0] = RobotPlanStep{pos, false, false, level};
    for (int t = 1; t <= window; ++t) {
      if (!state.frozen[r]) {
        BatteryState bs{level, scenario.robots[r].battery_capacity};
        BatteryStep st = variant == DynamicsVariant::A
                             ? battery_step_a(bs, false, pos, pos, true, 0.0, scenario.energy, grid)
                             : battery_step_b(bs, false, pos, pos, 0.0, scenario.energy, grid);
        level = st.level;
      }
      plan.steps[r][t] = RobotPlanStep{pos, false, false, level};
    }
  }
  return plan;
}

Scenario active_subscenario(const Scenario& scenario, const MissionState& state,
                            std::vector<int>& active_idx) {
  Scenario sub = scenario;
  sub.robots.clear();
  active_idx.clear();
  for (size_t r = 0; r < scenario.robots.size(); ++r) {
    if (state.frozen[r]) continue;
    active_idx.push_back(static_cast<int>(r));
    sub.robots.push_back(scenario.robots[r]);
  }
  return sub;
}

}  // namespace

MissionState initial_mission_state(const Scenario& scenario) {
  MissionState st;
  for (const auto& r : scenario.robots) {
    st.positions.push_back(r.start);
    st.batteries.push_back(r.initial_battery);
    st.frozen.push_back(false);
    st.explored.insert(r.start);  // a robot has sensed the cell it stands on
  }
  st.known_obstacles = scenario.grid.obstacles;
  return st;
}

Plan plan_window(const MissionState& state, const Scenario& scenario, const PlannerConfig& cfg,
                 SolveStats* stats_out) {
  int w_cfg = cfg.window_w > 0 ? cfg.window_w : scenario.mission.window_w;
  int window = std::min(w_cfg, scenario.mission.horizon_t - state.t_now);
  if (window < 1) throw ValidationError("plan_window: no steps left before the horizon");
  DynamicsVariant variant = cfg.variant.value_or(scenario.mission.variant);

  std::vector<int> active_idx;
  Scenario sub = active_subscenario(scenario, state, active_idx);
  if (active_idx.empty()) return fallback_plan(state, scenario, window, variant);

  WindowState ws;
  for (int r : active_idx) {
    ws.positions.push_back(state.positions[r]);
    ws.batteries.push_back(state.batteries[r]);
  }
  ws.explored = state.explored;
  for (Cell c : state.known_obstacles)
    if (!scenario.grid.blocked(c)) ws.extra_obstacles.insert(c);
  ws.terrain_overrides = state.terrain_estimate;

  BuildOptions opts;
  opts.variant = variant;
  opts.relax_e = cfg.relax_e;
  opts.prune_upsilon = cfg.prune_upsilon;

  WindowSolve solve = solve_window(sub, window, ws, opts, cfg.solver);
  if (stats_out) *stats_out = solve.solution.stats;

  if (solve.solution.values.empty()) {
    log::warn("plan_window: solver returned no incumbent (" +
              std::string(solve.solution.status == SolveStatus::Infeasible ? "infeasible"
                                                                           : "time limit") +
              "), using stay-in-place fallback");
    return fallback_plan(state, scenario, window, variant);
  }

  // Re-assemble over the full robot set; frozen robots stay in place.
  Plan full = fallback_plan(state, scenario, window, variant);
  full.fallback = false;
  for (size_t i = 0; i < active_idx.size(); ++i)
    full.steps[active_idx[i]] = solve.plan.steps[i];
  return full;
}

EventAction handle_event(MissionState& state, const Event& ev, const Scenario& scenario,
                         const PlannerConfig& cfg) {
  switch (ev.kind) {
    case EventKind::ObstacleDetected:
      state.known_obstacles.insert(ev.cell);
      return EventAction::Replan;
    case EventKind::BatteryDiscrepancy: {
      double threshold = cfg.discrepancy_threshold >= 0 ? cfg.discrepancy_threshold
                                                        : 2.0 * scenario.energy.p_rx;
      if (std::fabs(ev.predicted - ev.reported) <= threshold) return EventAction::Continue;
      if (ev.robot >= 0) {
        state.batteries[ev.robot] = ev.reported;
        // An unexpected extra drain reads as unmodeled terrain (a slope) on
        // the cell the robot is on: factor *= reported/predicted drain.
        double reported_drain = ev.prior - ev.reported;
        double predicted_drain = ev.prior - ev.predicted;
        if (predicted_drain > 1e-9 && reported_drain > 0) {
          Cell c = state.positions[ev.robot];
          double factor = state.terrain_estimate.count(c) ? state.terrain_estimate[c]
                                                          : scenario.grid.terrain_factor(c);
          factor = std::clamp(factor * (reported_drain / predicted_drain), 1.0, 5.0);
          state.terrain_estimate[c] = factor;
        }
      }
      return EventAction::Replan;
    }
    case EventKind::TargetFound:
    case EventKind::AreaComplete:
    case EventKind::HorizonReached:
      return EventAction::Terminate;
    case EventKind::PlanExhausted:
    case EventKind::BatteryDepleted:
      return EventAction::Replan;
  }
  return EventAction::Continue;
}

SimTrace run_mission(const Scenario& scenario, const GroundTruth& truth,
                     const PlannerConfig& cfg) {
  MissionState state = initial_mission_state(scenario);
  SimTrace trace;
  for (const auto& r : scenario.robots) trace.robot_ids.push_back(r.id);
  trace.per_robot.resize(scenario.robots.size());
  SimConfig sim_cfg{cfg.discrepancy_threshold};

  std::vector<Cell> starts;
  for (const auto& r : scenario.robots) starts.push_back(r.start);
  trace.reachable_cells = reachable_count(truth.grid, starts);

  auto unexplored_remaining = [&]() {
    GridMap known = scenario.grid;
    for (Cell c : state.known_obstacles) known.obstacles.insert(c);
    for (int b = 1; b <= known.height_b; ++b)
      for (int a = 1; a <= known.width_a; ++a) {
        Cell c{a, b};
        if (known.free_cell(c) && !state.explored.count(c)) return true;
      }
    return false;
  };

  bool done = false;
  while (!done) {
    if (state.t_now >= scenario.mission.horizon_t) {
      trace.termination = event_kind_str(EventKind::HorizonReached);
      break;
    }
    if (!unexplored_remaining()) {
      trace.termination = event_kind_str(EventKind::AreaComplete);
      break;
    }
    SolveStats stats;
    Plan plan = plan_window(state, scenario, cfg, &stats);
    ++trace.solver_invocations;
    trace.solve_wall_ms.push_back(stats.wall_ms);
    state.active_plan = plan;
    state.plan_cursor = 1;

    bool replan = false;
    while (!replan && !done && state.plan_cursor <= plan.window) {
      if (state.t_now >= scenario.mission.horizon_t) {
        trace.termination = event_kind_str(EventKind::HorizonReached);
        done = true;
        break;
      }
      std::vector<RobotPlanStep> step;
      for (size_t r = 0; r < scenario.robots.size(); ++r)
        step.push_back(plan.steps[r][state.plan_cursor]);
      auto events = sim_step(state, step, truth, scenario, sim_cfg, trace);
      ++state.plan_cursor;
      for (const Event& ev : events) {
        switch (handle_event(state, ev, scenario, cfg)) {
          case EventAction::Terminate:
            trace.termination = event_kind_str(ev.kind);
            done = true;
            break;
          case EventAction::Replan:
            replan = true;
            break;
          case EventAction::Continue:
            break;
        }
        if (done) break;
      }
    }
  }

  trace.explored_cells = static_cast<int>(state.explored.size());
  trace.mission_steps = state.t_now;
  if (trace.termination.empty()) trace.termination = event_kind_str(EventKind::HorizonReached);
  return trace;
}

}  // namespace oros
