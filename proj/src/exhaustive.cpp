#include <algorithm>
#include <cmath>

#include "oros/energy.hpp"
#include "oros/solver.hpp"

namespace oros {

namespace {

// DFS over joint adjacent paths and per-step charging choices, batteries
// stepped with the variant dynamics under planner-side bounds. The best
// assignment found in canonical enumeration order is the exact optimum.
struct Enumerator {
  const Scenario& scn;
  GridMap grid;
  int window;
  int n_robots;
  DynamicsVariant variant;
  double lambda_e, lambda_b;
  double charge_rate;
  bool exclusive;

  std::vector<std::vector<Cell>> nbrs_cache{};  // [cell idx] -> list
  std::vector<char> explored{};                 // flat by cell idx
  int explored_count{0};
  std::vector<std::vector<Cell>> pos{};        // [robot][t]
  std::vector<std::vector<char>> charging{};   // [robot][t]
  std::vector<std::vector<char>> sensing{};    // [robot][t]
  std::vector<std::vector<double>> level{};    // [robot][t]

  bool have_best{false};
  double best_obj{0.0};
  std::vector<std::vector<Cell>> best_pos{};
  std::vector<std::vector<char>> best_charging{};
  std::vector<std::vector<char>> best_sensing{};
  std::vector<std::vector<double>> best_level{};
  long leaves{0};

  int cell_index(Cell c) const { return (c.b - 1) * grid.width_a + (c.a - 1); }

  void consider_leaf() {
    ++leaves;
    double bat = 0.0;
    for (int r = 0; r < n_robots; ++r) bat += level[r][window];
    double obj = lambda_e * static_cast<double>(explored_count) + lambda_b * bat;
    if (!have_best || obj > best_obj) {
      have_best = true;
      best_obj = obj;
      best_pos = pos;
      best_charging = charging;
      best_sensing = sensing;
      best_level = level;
    }
  }

  // Choose the charging flag for robots [r..) at step t, then recurse.
  void charge_step(int t, int r) {
    if (r == n_robots) {
      std::vector<int> newly;
      for (int i = 0; i < n_robots; ++i) {
        int ci = cell_index(pos[i][t]);
        if (!explored[ci]) {
          explored[ci] = 1;
          ++explored_count;
          newly.push_back(ci);
        }
      }
      if (t == window) consider_leaf();
      else move_step(t + 1, 0);
      for (int ci : newly) {
        explored[ci] = 0;
        --explored_count;
      }
      return;
    }
    Cell from = pos[r][t - 1], to = pos[r][t];
    bool fresh = !explored[cell_index(to)];
    sensing[r][t] = fresh ? 1 : 0;
    BatteryState bs{level[r][t - 1], scn.robots[r].battery_capacity};
    bool at_station = scn.station_at(to) != nullptr;
    for (int u = at_station ? 1 : 0; u >= 0; --u) {
      BatteryStep step;
      if (variant == DynamicsVariant::A)
        step = battery_step_a(bs, u != 0, from, to, !fresh, charge_rate, scn.energy, grid);
      else
        step = battery_step_b(bs, u != 0, from, to, charge_rate, scn.energy, grid);
      if (step.raw < -1e-7 || step.raw > bs.capacity + 1e-7) continue;
      charging[r][t] = static_cast<char>(u);
      level[r][t] = step.raw;
      charge_step(t, r + 1);
    }
  }

  // Choose the destination for robots [r..) at step t.
  void move_step(int t, int r) {
    if (r == n_robots) {
      charge_step(t, 0);
      return;
    }
    for (Cell to : nbrs_cache[cell_index(pos[r][t - 1])]) {
      if (exclusive) {
        bool clash = false;
        for (int i = 0; i < r && !clash; ++i) clash = pos[i][t] == to;
        if (clash) continue;
      }
      pos[r][t] = to;
      move_step(t, r + 1);
    }
  }
};

}  // namespace

OracleResult solve_exhaustive(const Scenario& scenario, int window, const WindowState& state,
                              const BuildOptions& opts) {
  const int R = static_cast<int>(scenario.robots.size());
  double combos = std::pow(9.0, static_cast<double>(R) * window);
  if (combos > 1e7)
    throw OracleGuardError("exhaustive oracle refused: 9^(R*W) = " + std::to_string(combos) +
                           " exceeds 1e7 (R=" + std::to_string(R) +
                           ", W=" + std::to_string(window) + ")");

  Enumerator en{
      .scn = scenario,
      .grid = scenario.grid,
      .window = window,
      .n_robots = R,
      .variant = opts.variant.value_or(scenario.mission.variant),
      .lambda_e = opts.weights ? opts.weights->first : scenario.lambda_explore_effective(),
      .lambda_b = opts.weights ? opts.weights->second : scenario.mission.lambda_battery,
      .charge_rate = scenario.uniform_charge_rate(),
      .exclusive = scenario.mission.collision_exclusive && R > 1};
  for (Cell c : state.extra_obstacles) en.grid.obstacles.insert(c);
  for (const auto& [c, f] : state.terrain_overrides) en.grid.terrain[c] = f;

  auto t0 = std::chrono::steady_clock::now();
  int n_cells = en.grid.cell_count();
  en.nbrs_cache.resize(n_cells);
  for (int b = 1; b <= en.grid.height_b; ++b)
    for (int a = 1; a <= en.grid.width_a; ++a) {
      Cell c{a, b};
      if (en.grid.free_cell(c)) en.nbrs_cache[en.cell_index(c)] = neighbors(en.grid, c);
    }
  en.explored.assign(n_cells, 0);
  CellSet e0 = state.explored;
  if (opts.normalize_start_explored)
    for (Cell c : state.positions) e0.insert(c);
  for (Cell c : e0)
    if (en.grid.free_cell(c)) {
      en.explored[en.cell_index(c)] = 1;
      ++en.explored_count;
    }
  en.pos.assign(R, std::vector<Cell>(window + 1));
  en.charging.assign(R, std::vector<char>(window + 1, 0));
  en.sensing.assign(R, std::vector<char>(window + 1, 0));
  en.level.assign(R, std::vector<double>(window + 1, 0.0));
  for (int r = 0; r < R; ++r) {
    en.pos[r][0] = state.positions[r];
    en.level[r][0] = state.batteries[r];
  }

  if (window == 0) {
    en.consider_leaf();
  } else {
    en.move_step(1, 0);
  }

  OracleResult out;
  out.solution.stats.nodes = en.leaves;
  out.solution.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!en.have_best) {
    out.solution.status = SolveStatus::Infeasible;
    return out;
  }
  out.solution.status = SolveStatus::Optimal;
  out.solution.objective = en.best_obj;
  out.plan.window = window;
  out.plan.steps.assign(R, std::vector<RobotPlanStep>(window + 1));
  for (int r = 0; r < R; ++r) {
    out.plan.robot_ids.push_back(scenario.robots[r].id);
    for (int t = 0; t <= window; ++t) {
      RobotPlanStep st;
      st.cell = en.best_pos[r][t];
      st.charging = en.best_charging[r][t] != 0;
      st.sensors_on = t > 0 && en.best_sensing[r][t] != 0;
      st.battery_pred = en.best_level[r][t];
      out.plan.steps[r][t] = st;
    }
  }
  return out;
}

}  // namespace oros
