#include "oros/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "oros/energy.hpp"
#include "oros/log.hpp"
#include "simplex.hpp"

namespace oros {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

SolveStatus map_lp_status(lp::LpStatus s) {
  switch (s) {
    case lp::LpStatus::Optimal: return SolveStatus::Optimal;
    case lp::LpStatus::Infeasible: return SolveStatus::Infeasible;
    case lp::LpStatus::TimeLimit: return SolveStatus::TimeLimit;
    default: return SolveStatus::NumericFailure;
  }
}

constexpr double kIntTol = 1e-7;
constexpr double kRowTol = 1e-6;
constexpr double kImproveTol = 1e-9;

}  // namespace

nlohmann::ordered_json Plan::to_json() const {
  nlohmann::ordered_json j;
  j["window"] = window;
  j["fallback"] = fallback;
  j["robots"] = nlohmann::ordered_json::array();
  for (size_t r = 0; r < robot_ids.size(); ++r) {
    nlohmann::ordered_json jr;
    jr["id"] = robot_ids[r];
    jr["steps"] = nlohmann::ordered_json::array();
    for (int t = 0; t <= window; ++t) {
      const RobotPlanStep& st = steps[r][t];
      jr["steps"].push_back({{"t", t},
                             {"cell", {st.cell.a, st.cell.b}},
                             {"charging", st.charging},
                             {"sensors_on", st.sensors_on},
                             {"battery_pred", st.battery_pred}});
    }
    j["robots"].push_back(jr);
  }
  return j;
}

Solution solve_lp(const MilpModel& model) {
  if (model.cols.empty()) throw ValidationError("solve_lp: model has no columns");
  auto t0 = Clock::now();
  Presolved pre = presolve_fixed(model);
  Solution sol;
  if (pre.infeasible) {
    sol.status = SolveStatus::Infeasible;
    sol.stats.wall_ms = elapsed_ms(t0);
    return sol;
  }
  if (pre.compact.cols.empty()) {
    sol.status = SolveStatus::Optimal;
    sol.objective = pre.obj_offset;
    sol.values = pre.expand({}, model);
    sol.stats.wall_ms = elapsed_ms(t0);
    return sol;
  }
  lp::DualSimplex ds(pre.compact);
  auto res = ds.solve();
  sol.status = map_lp_status(res.status);
  sol.objective = res.obj + pre.obj_offset;
  sol.stats.lp_iterations = res.iters;
  if (sol.status == SolveStatus::Optimal) {
    std::vector<double> x(pre.compact.cols.size());
    for (size_t j = 0; j < x.size(); ++j) x[j] = ds.value(static_cast<int>(j));
    sol.values = pre.expand(x, model);
  }
  sol.stats.wall_ms = elapsed_ms(t0);
  return sol;
}

namespace {

// Fixed-column elimination: the window models fix large index ranges (start
// positions, obstacles, unreachable cells), so the working LP keeps only free
// columns and the rows that touch them. Values are expanded back afterwards.
struct Presolved {
  MilpModel compact;
  std::vector<int> col_map;  // compact j -> original j
  double obj_offset{0.0};
  bool infeasible{false};
  size_t orig_cols{0};

  std::vector<double> expand(const std::vector<double>& x,
                             const MilpModel& original) const {
    std::vector<double> full(orig_cols);
    for (size_t j = 0; j < orig_cols; ++j) full[j] = original.cols[j].lb;  // fixed value
    for (size_t j = 0; j < col_map.size(); ++j) full[col_map[j]] = x[j];
    return full;
  }
};

Presolved presolve_fixed(const MilpModel& m) {
  Presolved p;
  p.orig_cols = m.cols.size();
  std::vector<int> fwd(m.cols.size(), -1);
  for (size_t j = 0; j < m.cols.size(); ++j) {
    const Column& c = m.cols[j];
    if (c.fixed()) {
      p.obj_offset += c.obj * c.lb;
      continue;
    }
    fwd[j] = static_cast<int>(p.compact.cols.size());
    p.col_map.push_back(static_cast<int>(j));
    p.compact.cols.push_back(c);
  }
  p.compact.maximize = m.maximize;
  for (const Row& row : m.rows) {
    double shift = 0.0;
    Row out;
    out.kind = row.kind;
    out.r = row.r;
    out.t = row.t;
    out.c = row.c;
    out.c2 = row.c2;
    for (const auto& [j, a] : row.terms) {
      if (fwd[j] >= 0) out.terms.push_back({fwd[j], a});
      else shift += a * m.cols[j].lb;
    }
    double lo = row.lo <= -kInf ? -kInf : row.lo - shift;
    double hi = row.hi >= kInf ? kInf : row.hi - shift;
    if (out.terms.empty()) {
      if (0.0 < lo - 1e-7 || 0.0 > hi + 1e-7) p.infeasible = true;
      continue;
    }
    out.lo = lo;
    out.hi = hi;
    p.compact.rows.push_back(std::move(out));
  }
  return p;
}

// Validates a proposed integral candidate against the original model and
// returns its objective, or nullopt when it is not feasible.
std::optional<double> candidate_objective(const MilpModel& model, const std::vector<double>& x) {
  if (x.size() != model.cols.size()) return std::nullopt;
  for (size_t j = 0; j < model.cols.size(); ++j) {
    const Column& c = model.cols[j];
    if (x[j] < c.lb - kIntTol || x[j] > c.ub + kIntTol) return std::nullopt;
    if (c.integral && std::fabs(x[j] - std::round(x[j])) > kIntTol) return std::nullopt;
  }
  for (const Row& row : model.rows) {
    double act = 0.0;
    for (const auto& [j, a] : row.terms) act += a * x[j];
    if (act < row.lo - kRowTol || act > row.hi + kRowTol) return std::nullopt;
  }
  double obj = 0.0;
  for (size_t j = 0; j < model.cols.size(); ++j) obj += model.cols[j].obj * x[j];
  return obj;
}

struct BnbNode {
  long id{0};
  int parent{-1};
  double bound{0.0};
  int fix_col{-1};
  double fix_val{0.0};
};

}  // namespace

Solution solve_bnb(const MilpModel& model, const SolveLimits& limits,
                   const PrimalHeuristic& heuristic) {
  model.check_valid();
  auto t0 = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (limits.time_limit_s > 0)
    deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                        std::chrono::duration<double>(limits.time_limit_s));

  Presolved pre = presolve_fixed(model);
  if (pre.infeasible) {
    Solution sol;
    sol.status = SolveStatus::Infeasible;
    sol.stats.wall_ms = elapsed_ms(t0);
    return sol;
  }
  if (pre.compact.cols.empty()) {
    Solution sol;
    sol.status = SolveStatus::Optimal;
    sol.objective = pre.obj_offset;
    sol.values = pre.expand({}, model);
    sol.stats.nodes = 1;
    sol.stats.wall_ms = elapsed_ms(t0);
    return sol;
  }

  lp::DualSimplex ds(pre.compact);
  const double sense = model.maximize ? 1.0 : -1.0;  // work in max space

  std::vector<BnbNode> arena;
  arena.push_back(BnbNode{0, -1, kInf, -1, 0.0});
  std::vector<long> open{0};

  Solution best;
  best.status = SolveStatus::Infeasible;
  bool have_inc = false;
  double inc_obj = -kInf;

  Solution out;
  out.stats.nodes = 0;
  out.stats.lp_iterations = 0;
  bool hit_limit = false;

  std::vector<int> chain;
  while (!open.empty()) {
    if (deadline && Clock::now() > *deadline) {
      hit_limit = true;
      break;
    }
    if (limits.node_limit > 0 && out.stats.nodes >= limits.node_limit) {
      hit_limit = true;
      break;
    }

    // Node selection: dive (LIFO) until an incumbent exists, then best bound
    // with ties toward the lowest node id.
    size_t pick = open.size() - 1;
    if (have_inc) {
      double bb = -kInf;
      long bid = 0;
      for (size_t i = 0; i < open.size(); ++i) {
        const BnbNode& nd = arena[open[i]];
        if (i == 0 || nd.bound > bb || (nd.bound == bb && nd.id < bid)) {
          bb = nd.bound;
          bid = nd.id;
          pick = i;
        }
      }
    }
    long nid = open[pick];
    open.erase(open.begin() + pick);
    double node_bound = arena[nid].bound;
    if (have_inc && node_bound <= inc_obj + kImproveTol) continue;

    // Apply the node's cumulative fixes over fresh bounds.
    ds.reset_bounds();
    chain.clear();
    for (int a = static_cast<int>(nid); a > 0; a = arena[a].parent) chain.push_back(a);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      ds.set_bounds(arena[*it].fix_col, arena[*it].fix_val, arena[*it].fix_val);

    auto res = ds.solve(0, deadline ? &*deadline : nullptr);
    ++out.stats.nodes;
    out.stats.lp_iterations += res.iters;
    if (res.status == lp::LpStatus::TimeLimit) {
      hit_limit = true;
      break;
    }
    if (res.status == lp::LpStatus::NumFail || res.status == lp::LpStatus::IterLimit) {
      ds.reset_basis();
      res = ds.solve(0, deadline ? &*deadline : nullptr);
      out.stats.lp_iterations += res.iters;
      if (res.status != lp::LpStatus::Optimal && res.status != lp::LpStatus::Infeasible) {
        log::warn("bnb: node LP failed, aborting with status time_limit");
        hit_limit = true;
        break;
      }
    }
    if (res.status == lp::LpStatus::Infeasible) continue;

    double node_obj = sense * (res.obj + pre.obj_offset);  // max-space objective
    if (have_inc && node_obj <= inc_obj + kImproveTol) continue;

    const size_t nc = pre.compact.cols.size();
    std::vector<double> x(nc);
    for (size_t j = 0; j < nc; ++j) x[j] = ds.value(static_cast<int>(j));

    // Fractional binary with the largest distance to integrality.
    int branch_col = -1;
    double branch_frac = kIntTol, branch_val = 0.0;
    for (size_t j = 0; j < nc; ++j) {
      if (!pre.compact.cols[j].integral) continue;
      double f = std::fabs(x[j] - std::round(x[j]));
      if (f > branch_frac + 1e-12) {
        branch_frac = f;
        branch_col = static_cast<int>(j);
        branch_val = x[j];
      }
    }

    if (branch_col < 0) {
      for (size_t j = 0; j < nc; ++j)
        if (pre.compact.cols[j].integral) x[j] = std::round(x[j]);
      if (!have_inc || node_obj > inc_obj + kImproveTol) {
        have_inc = true;
        inc_obj = node_obj;
        best.values = pre.expand(x, model);
        best.objective = model.maximize ? node_obj : -node_obj;
      }
      continue;
    }

    if (heuristic && (!have_inc || out.stats.nodes % 16 == 1)) {
      if (auto cand = heuristic(pre.expand(x, model))) {
        if (auto cobj = candidate_objective(model, *cand)) {
          double cmax = sense * *cobj;
          if (!have_inc || cmax > inc_obj + kImproveTol) {
            have_inc = true;
            inc_obj = cmax;
            best.values = *cand;
            best.objective = *cobj;
          }
        }
      }
    }
    if (have_inc && node_obj <= inc_obj + kImproveTol) continue;

    long id_away = static_cast<long>(arena.size());
    double toward = branch_val >= 0.5 ? 1.0 : 0.0;
    arena.push_back(BnbNode{id_away, static_cast<int>(nid), node_obj, branch_col, 1.0 - toward});
    long id_near = static_cast<long>(arena.size());
    arena.push_back(BnbNode{id_near, static_cast<int>(nid), node_obj, branch_col, toward});
    open.push_back(id_away);
    open.push_back(id_near);  // LIFO dives toward the rounded value
  }

  out.values = best.values;
  out.objective = best.objective;
  if (hit_limit) out.status = SolveStatus::TimeLimit;
  else if (have_inc) out.status = SolveStatus::Optimal;
  else out.status = SolveStatus::Infeasible;
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

PlanPaths decode_paths(const Solution& sol, const BuiltModel& built) {
  const VarSpace& sp = built.space;
  const int R = sp.robots(), W = sp.window();
  if (sol.values.empty()) throw IntegrityError("decode: solution has no values");
  PlanPaths out;
  out.pos.assign(R, std::vector<Cell>(W + 1));
  out.charging.assign(R, std::vector<bool>(W + 1, false));
  for (int r = 0; r < R; ++r)
    for (int t = 0; t <= W; ++t) {
      int found = -1;
      for (int idx = 0; idx < sp.cells(); ++idx) {
        double v = sol.values[sp.l(r, t, sp.cell_at(idx))];
        if (std::fabs(v - 1.0) <= kIntTol) {
          if (found >= 0) throw IntegrityError("decode: robot in two cells at t=" + std::to_string(t));
          found = idx;
        } else if (std::fabs(v) > kIntTol) {
          throw IntegrityError("decode: fractional occupancy at t=" + std::to_string(t));
        }
      }
      if (found < 0) throw IntegrityError("decode: no cell assigned at t=" + std::to_string(t));
      out.pos[r][t] = sp.cell_at(found);
    }
  for (int r = 0; r < R; ++r)
    for (int t = 1; t <= W; ++t) out.charging[r][t] = sol.values[sp.u(r, t)] > 0.5;
  return out;
}

Plan extract_plan(const Solution& sol, const BuiltModel& built, const Scenario& scenario) {
  PlanPaths paths = decode_paths(sol, built);
  const VarSpace& sp = built.space;
  const int R = sp.robots(), W = sp.window();
  Plan plan;
  plan.window = W;
  plan.steps.assign(R, std::vector<RobotPlanStep>(W + 1));
  for (int r = 0; r < R; ++r) {
    plan.robot_ids.push_back(scenario.robots[r].id);
    for (int t = 0; t <= W; ++t) {
      RobotPlanStep st;
      st.cell = paths.pos[r][t];
      st.charging = paths.charging[r][t];
      st.battery_pred = sol.values[sp.bat(r, t)];
      // Sensors run when the destination cell was unexplored before arrival.
      st.sensors_on = t > 0 && sol.values[sp.e(t - 1, st.cell)] < 0.5;
      plan.steps[r][t] = st;
    }
  }
  return plan;
}

ReplayResult replay_paths(const Scenario& scenario, const GridMap& grid,
                          const CellSet& explored0, const std::vector<double>& batteries0,
                          DynamicsVariant variant, const PlanPaths& paths,
                          double lambda_explore, double lambda_battery) {
  ReplayResult out;
  const int R = static_cast<int>(paths.pos.size());
  const int W = R > 0 ? static_cast<int>(paths.pos[0].size()) - 1 : 0;
  out.batteries.assign(R, std::vector<double>(W + 1, 0.0));
  CellSet explored = explored0;
  std::vector<double> level = batteries0;
  for (int r = 0; r < R; ++r) out.batteries[r][0] = level[r];
  double cr = scenario.uniform_charge_rate();
  for (int t = 1; t <= W && out.feasible; ++t) {
    std::vector<Cell> dests(R);
    for (int r = 0; r < R; ++r) {
      Cell from = paths.pos[r][t - 1], to = paths.pos[r][t];
      dests[r] = to;
      if (chebyshev(from, to) > 1) {
        out.feasible = false;
        out.why = "non-adjacent move";
        break;
      }
      bool charging = paths.charging[r][t];
      if (charging && !scenario.station_at(to)) {
        out.feasible = false;
        out.why = "charging away from a station";
        break;
      }
      BatteryState bs{level[r], scenario.robots[r].battery_capacity};
      BatteryStep step;
      if (variant == DynamicsVariant::A)
        step = battery_step_a(bs, charging, from, to, explored.count(to) > 0, cr,
                              scenario.energy, grid);
      else
        step = battery_step_b(bs, charging, from, to, cr, scenario.energy, grid);
      if (step.raw < -lp::DualSimplex::kFeasTol) {
        out.feasible = false;
        out.why = "battery depleted";
        break;
      }
      if (step.raw > bs.capacity + lp::DualSimplex::kFeasTol) {
        out.feasible = false;
        out.why = "battery over capacity";
        break;
      }
      level[r] = step.raw;
      out.batteries[r][t] = step.raw;
    }
    if (!out.feasible) break;
    if (scenario.mission.collision_exclusive) {
      for (int i = 0; i < R && out.feasible; ++i)
        for (int k = i + 1; k < R; ++k)
          if (dests[i] == dests[k]) {
            out.feasible = false;
            out.why = "collision";
          }
    }
    for (Cell c : dests) explored.insert(c);
  }
  out.explored_final = explored;
  if (out.feasible) {
    double bat_sum = 0.0;
    for (int r = 0; r < R; ++r) bat_sum += level[r];
    out.objective = lambda_explore * static_cast<double>(explored.size()) +
                    lambda_battery * bat_sum;
  }
  return out;
}

int count_linearization_violations(const Solution& sol, const BuiltModel& built, double tol) {
  const VarSpace& sp = built.space;
  int bad = 0;
  for (int r = 0; r < sp.robots(); ++r)
    for (int t = 0; t < sp.window(); ++t) {
      for (const auto& [from, to] : sp.pairs()) {
        double y = sol.values[sp.ups(r, t, from, to)];
        double l1 = sol.values[sp.l(r, t, from)];
        double l2 = sol.values[sp.l(r, t + 1, to)];
        if (std::fabs(y - l1 * l2) > tol) ++bad;
      }
      for (int idx = 0; idx < sp.cells(); ++idx) {
        Cell c = sp.cell_at(idx);
        if (sp.variant() == DynamicsVariant::A) {
          double al = sol.values[sp.alpha(r, t, c)];
          double e = sol.values[sp.e(t, c)];
          double l2 = sol.values[sp.l(r, t + 1, c)];
          if (std::fabs(al - e * l2) > tol) ++bad;
        } else {
          double de = sol.values[sp.delta(r, t + 1, c)];
          double u = sol.values[sp.u(r, t + 1)];
          double l = sol.values[sp.l(r, t + 1, c)];
          if (std::fabs(de - u * l) > tol) ++bad;
        }
      }
    }
  return bad;
}

namespace {

// Greedy LP rounding: walk each robot along argmax occupancy values, charge
// whenever it fits, and encode the replayed assignment as a full column
// vector. Used as the branch-and-bound primal heuristic.
std::optional<std::vector<double>> greedy_candidate(const std::vector<double>& x,
                                                    const BuiltModel& built,
                                                    const Scenario& scenario) {
  const VarSpace& sp = built.space;
  const int R = sp.robots(), W = sp.window();
  const GridMap& grid = built.grid;
  PlanPaths paths;
  paths.pos.assign(R, std::vector<Cell>(W + 1));
  paths.charging.assign(R, std::vector<bool>(W + 1, false));
  for (int r = 0; r < R; ++r) paths.pos[r][0] = built.state0.positions[r];

  for (int t = 1; t <= W; ++t) {
    CellSet taken;
    for (int r = 0; r < R; ++r) {
      Cell from = paths.pos[r][t - 1];
      Cell pick{0, 0};
      double best = -1.0;
      for (Cell c : neighbors(grid, from)) {
        if (scenario.mission.collision_exclusive && taken.count(c)) continue;
        double v = x[sp.l(r, t, c)];
        if (v > best + 1e-12) {
          best = v;
          pick = c;
        }
      }
      if (best < 0.0) return std::nullopt;  // boxed in
      paths.pos[r][t] = pick;
      taken.insert(pick);
    }
  }

  // Charge greedily when at a station and the capacity bound allows it.
  CellSet explored = built.explored0;
  std::vector<double> level = built.state0.batteries;
  double cr = scenario.uniform_charge_rate();
  for (int t = 1; t <= W; ++t) {
    std::vector<Cell> dests(R);
    for (int r = 0; r < R; ++r) {
      Cell from = paths.pos[r][t - 1], to = paths.pos[r][t];
      dests[r] = to;
      BatteryState bs{level[r], scenario.robots[r].battery_capacity};
      auto try_step = [&](bool charging) {
        if (built.variant == DynamicsVariant::A)
          return battery_step_a(bs, charging, from, to, explored.count(to) > 0, cr,
                                scenario.energy, grid);
        return battery_step_b(bs, charging, from, to, cr, scenario.energy, grid);
      };
      bool at_station = scenario.station_at(to) != nullptr;
      BatteryStep step{};
      bool ok = false;
      if (at_station) {
        step = try_step(true);
        if (step.raw >= 0.0 && step.raw <= bs.capacity) {
          paths.charging[r][t] = true;
          ok = true;
        }
      }
      if (!ok) {
        step = try_step(false);
        if (step.raw < 0.0 || step.raw > bs.capacity) return std::nullopt;
      }
      level[r] = step.raw;
    }
    for (Cell c : dests) explored.insert(c);
  }

  // Encode the assignment over the full column space.
  std::vector<double> cand(built.model.cols.size(), 0.0);
  CellSet exp = built.explored0;
  for (int t = 0; t <= W; ++t) {
    if (t > 0)
      for (int r = 0; r < R; ++r) exp.insert(paths.pos[r][t]);
    for (Cell c : exp) cand[sp.e(t, c)] = 1.0;
    for (int r = 0; r < R; ++r) {
      cand[sp.l(r, t, paths.pos[r][t])] = 1.0;
      if (t > 0 && paths.charging[r][t]) cand[sp.u(r, t)] = 1.0;
    }
  }
  // Replay batteries to fill Bat and check planner feasibility once more.
  ReplayResult rep = replay_paths(scenario, grid, built.explored0, built.state0.batteries,
                                  built.variant, paths, built.lambda_explore,
                                  built.lambda_battery);
  if (!rep.feasible) return std::nullopt;
  for (int r = 0; r < R; ++r)
    for (int t = 0; t <= W; ++t) cand[sp.bat(r, t)] = rep.batteries[r][t];
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t) {
      int y = sp.ups(r, t, paths.pos[r][t], paths.pos[r][t + 1]);
      if (y >= 0) cand[y] = 1.0;
    }
  if (built.variant == DynamicsVariant::A) {
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < W; ++t)
        for (int idx = 0; idx < sp.cells(); ++idx) {
          Cell c = sp.cell_at(idx);
          cand[sp.alpha(r, t, c)] = cand[sp.e(t, c)] * cand[sp.l(r, t + 1, c)];
        }
  } else {
    for (int r = 0; r < R; ++r)
      for (int t = 1; t <= W; ++t)
        for (int idx = 0; idx < sp.cells(); ++idx) {
          Cell c = sp.cell_at(idx);
          cand[sp.delta(r, t, c)] = cand[sp.u(r, t)] * cand[sp.l(r, t, c)];
        }
  }
  return cand;
}

}  // namespace

WindowSolve solve_window(const Scenario& scenario, int window, const WindowState& state,
                         const BuildOptions& opts, const SolveLimits& limits) {
  WindowSolve ws;
  ws.built = build_model(scenario, window, state, opts);
  PrimalHeuristic heur = [&](const std::vector<double>& x) {
    return greedy_candidate(x, ws.built, scenario);
  };
  ws.solution = solve_bnb(ws.built.model, limits, heur);
  if (!ws.solution.values.empty()) ws.plan = extract_plan(ws.solution, ws.built, scenario);
  return ws;
}

}  // namespace oros
