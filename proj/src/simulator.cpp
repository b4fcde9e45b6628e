#include "oros/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "oros/energy.hpp"
#include "oros/log.hpp"

namespace oros {

std::string event_kind_str(EventKind k) {
  switch (k) {
    case EventKind::ObstacleDetected: return "obstacle_detected";
    case EventKind::BatteryDiscrepancy: return "battery_discrepancy";
    case EventKind::TargetFound: return "target_found";
    case EventKind::PlanExhausted: return "plan_exhausted";
    case EventKind::HorizonReached: return "horizon_reached";
    case EventKind::AreaComplete: return "area_complete";
    case EventKind::BatteryDepleted: return "battery_depleted";
  }
  return "?";
}

double effective_discrepancy_threshold(const SimConfig& cfg, const Scenario& scn) {
  return cfg.discrepancy_threshold >= 0 ? cfg.discrepancy_threshold : 2.0 * scn.energy.p_rx;
}

namespace {

std::string fmt_battery(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void account(EnergyLedger& led, const BatteryStep& step) {
  led.move += step.drain_move;
  led.tx += step.drain_tx;
  led.rx += step.drain_rx;
  led.sen += step.drain_sen;
  led.charge_gain += step.gain_charge;
  led.clamp_loss += step.clamp_loss;
}

}  // namespace

std::vector<Event> sim_step(MissionState& state, const std::vector<RobotPlanStep>& step,
                            const GroundTruth& truth, const Scenario& scenario,
                            const SimConfig& cfg, SimTrace& trace) {
  const int R = static_cast<int>(scenario.robots.size());
  if (static_cast<int>(step.size()) != R)
    throw ValidationError("sim_step: plan step does not cover every robot");
  std::vector<Event> events;
  const int t_next = state.t_now + 1;
  const double threshold = effective_discrepancy_threshold(cfg, scenario);
  if (trace.per_robot.empty()) trace.per_robot.resize(R);

  std::vector<bool> sensors(R, false), charging(R, false);
  std::vector<std::string> row_events(R);
  auto note = [&](int r, const Event& ev) {
    events.push_back(ev);
    std::string s = event_kind_str(ev.kind);
    if (ev.kind == EventKind::ObstacleDetected || ev.kind == EventKind::TargetFound)
      s += cell_str(ev.cell);
    if (r >= 0) {
      if (!row_events[r].empty()) row_events[r] += ";";
      row_events[r] += s;
    }
  };

  for (int r = 0; r < R; ++r) {
    if (state.frozen[r]) continue;
    Cell from = state.positions[r];
    Cell dest = step[r].cell;
    if (chebyshev(from, dest) > 1)
      throw ValidationError("sim_step: non-adjacent planned move for robot " +
                            scenario.robots[r].id);
    bool blocked = truth.grid.blocked(dest) && dest != from;
    if (blocked) {
      if (!state.known_obstacles.count(dest)) {
        state.known_obstacles.insert(dest);
        note(r, Event{EventKind::ObstacleDetected, t_next, r, dest, 0, 0});
      }
      dest = from;  // move refused, the robot holds its cell
    }
    sensors[r] = step[r].sensors_on;
    const ChargingStation* st = scenario.station_at(dest);
    charging[r] = step[r].charging && st != nullptr;
    double cr = charging[r] ? st->charge_rate : 0.0;

    BatteryState bs{state.batteries[r], scenario.robots[r].battery_capacity};
    BatteryStep bstep;
    if (scenario.mission.variant == DynamicsVariant::A) {
      // Physical semantics: the sensing/transmit drain follows the commanded
      // sensor state (the planner's explored-gating decided that state).
      bstep = battery_step_a(bs, charging[r], from, dest, /*dest_explored=*/!sensors[r], cr,
                             scenario.energy, truth.grid);
    } else {
      bstep = battery_step_b(bs, charging[r], from, dest, cr, scenario.energy, truth.grid);
    }
    if (bstep.depleted) {
      state.frozen[r] = true;
      sensors[r] = false;
      charging[r] = false;
      note(r, Event{EventKind::BatteryDepleted, t_next, r, from, 0, state.batteries[r]});
      continue;  // the move is not completed; the level stays as it was
    }
    double prior = state.batteries[r];
    state.positions[r] = dest;
    state.batteries[r] = bstep.level;
    account(trace.per_robot[r], bstep);
    account(trace.total, bstep);
    if (!blocked && std::fabs(step[r].battery_pred - bstep.level) > threshold) {
      Event ev{EventKind::BatteryDiscrepancy, t_next, r,    dest,
               step[r].battery_pred,          bstep.level,  prior};
      note(r, ev);
    }
  }

  // Sensing after all moves: mark explored cells, reveal nearby obstacles.
  for (int r = 0; r < R; ++r) {
    if (state.frozen[r] || !sensors[r]) continue;
    Cell pos = state.positions[r];
    state.explored.insert(pos);
    for (int db = -truth.sensing_range; db <= truth.sensing_range; ++db)
      for (int da = -truth.sensing_range; da <= truth.sensing_range; ++da) {
        Cell c{pos.a + da, pos.b + db};
        if (!truth.grid.in_bounds(c)) continue;
        if (truth.grid.blocked(c) && !state.known_obstacles.count(c)) {
          state.known_obstacles.insert(c);
          note(r, Event{EventKind::ObstacleDetected, t_next, r, c, 0, 0});
        }
      }
    if (truth.target && chebyshev(*truth.target, pos) <= truth.sensing_range)
      note(r, Event{EventKind::TargetFound, t_next, r, *truth.target, 0, 0});
  }

  state.t_now = t_next;
  for (int r = 0; r < R; ++r) {
    trace.rows.push_back(TraceRow{t_next, r, state.positions[r], state.batteries[r], sensors[r],
                                  charging[r], row_events[r]});
  }
  trace.explored_size_by_t.push_back(static_cast<int>(state.explored.size()));
  trace.mission_steps = t_next;
  return events;
}

SimTrace run_soa_baseline(const Scenario& scenario, const GroundTruth& truth,
                          const std::vector<std::vector<Cell>>& path) {
  const int R = static_cast<int>(scenario.robots.size());
  if (static_cast<int>(path.size()) != R)
    throw ValidationError("soa baseline: path does not cover every robot");
  SimTrace trace;
  trace.per_robot.resize(R);
  for (const auto& r : scenario.robots) trace.robot_ids.push_back(r.id);
  size_t len = path.empty() ? 1 : path[0].size();
  for (const auto& pr : path)
    if (pr.size() != len) throw ValidationError("soa baseline: ragged path");

  std::vector<double> level;
  std::vector<Cell> starts;
  std::vector<bool> frozen(R, false);
  for (const auto& r : scenario.robots) {
    level.push_back(r.initial_battery);
    starts.push_back(r.start);
  }
  CellSet explored;
  for (int r = 0; r < R; ++r) explored.insert(path[r][0]);

  for (size_t t = 1; t < len; ++t) {
    for (int r = 0; r < R; ++r) {
      if (frozen[r]) {
        trace.rows.push_back(TraceRow{static_cast<int>(t), r, path[r][t - 1], level[r], false,
                                      false, ""});
        continue;
      }
      Cell from = path[r][t - 1], to = path[r][t];
      if (chebyshev(from, to) > 1) throw ValidationError("soa baseline: non-adjacent path step");
      BatteryState bs{level[r], scenario.robots[r].battery_capacity};
      BatteryStep step;
      if (scenario.mission.variant == DynamicsVariant::A)
        step = battery_step_a(bs, false, from, to, /*dest_explored=*/false, 0.0, scenario.energy,
                              truth.grid);
      else
        step = battery_step_b(bs, false, from, to, 0.0, scenario.energy, truth.grid);
      double raw = step.raw - scenario.energy.p_local;
      std::string ev;
      if (raw < 0.0) {
        frozen[r] = true;
        ev = event_kind_str(EventKind::BatteryDepleted);
        trace.rows.push_back(TraceRow{static_cast<int>(t), r, from, level[r], false, false, ev});
        continue;
      }
      account(trace.per_robot[r], step);
      account(trace.total, step);
      trace.per_robot[r].local += scenario.energy.p_local;
      trace.total.local += scenario.energy.p_local;
      level[r] = std::min(raw, bs.capacity);
      explored.insert(to);
      trace.rows.push_back(TraceRow{static_cast<int>(t), r, to, level[r], true, false, ev});
    }
    trace.explored_size_by_t.push_back(static_cast<int>(explored.size()));
  }
  trace.mission_steps = static_cast<int>(len) - 1;
  trace.explored_cells = static_cast<int>(explored.size());
  trace.reachable_cells = reachable_count(truth.grid, starts);
  trace.termination = "path_replayed";
  return trace;
}

CompareReport compare_metrics(const SimTrace& oros, const SimTrace& soa) {
  if (oros.per_robot.size() != soa.per_robot.size())
    throw ValidationError("compare: traces cover different robot sets");
  CompareReport rep;
  rep.e_oros = oros.total.consumed();
  rep.e_soa = soa.total.consumed();
  rep.savings_pct = rep.e_soa > 0 ? 100.0 * (rep.e_soa - rep.e_oros) / rep.e_soa : 0.0;

  auto ledger_json = [](const EnergyLedger& l) {
    return nlohmann::ordered_json{{"move", l.move},   {"tx", l.tx},
                                  {"rx", l.rx},       {"sen", l.sen},
                                  {"local", l.local}, {"consumed", l.consumed()},
                                  {"charge_gain", l.charge_gain}};
  };
  auto side_json = [&](const SimTrace& t) {
    return nlohmann::ordered_json{{"energy", ledger_json(t.total)},
                                  {"explored_cells", t.explored_cells},
                                  {"reachable_cells", t.reachable_cells},
                                  {"coverage", t.coverage()},
                                  {"mission_steps", t.mission_steps},
                                  {"solver_invocations", t.solver_invocations}};
  };
  rep.json["savings_pct"] = rep.savings_pct;
  rep.json["oros"] = side_json(oros);
  rep.json["soa"] = side_json(soa);
  rep.json["per_robot"] = nlohmann::ordered_json::array();
  for (size_t r = 0; r < oros.per_robot.size(); ++r) {
    double eo = oros.per_robot[r].consumed();
    double es = soa.per_robot[r].consumed();
    rep.json["per_robot"].push_back(
        {{"robot", r < oros.robot_ids.size() ? oros.robot_ids[r] : std::to_string(r)},
         {"e_oros", eo},
         {"e_soa", es},
         {"savings_pct", es > 0 ? 100.0 * (es - eo) / es : 0.0}});
  }

  std::ostringstream csv;
  csv << "metric,oros,soa\n";
  csv << "energy_consumed," << rep.e_oros << "," << rep.e_soa << "\n";
  csv << "energy_move," << oros.total.move << "," << soa.total.move << "\n";
  csv << "energy_tx," << oros.total.tx << "," << soa.total.tx << "\n";
  csv << "energy_rx," << oros.total.rx << "," << soa.total.rx << "\n";
  csv << "energy_sen," << oros.total.sen << "," << soa.total.sen << "\n";
  csv << "energy_local," << oros.total.local << "," << soa.total.local << "\n";
  csv << "explored_cells," << oros.explored_cells << "," << soa.explored_cells << "\n";
  csv << "savings_pct," << rep.savings_pct << ",\n";
  rep.csv = csv.str();
  return rep;
}

std::string SimTrace::to_csv() const {
  std::ostringstream os;
  os << "t,robot,a,b,battery,sensors_on,charging,event\n";
  for (const TraceRow& r : rows) {
    std::string id = r.robot < static_cast<int>(robot_ids.size()) ? robot_ids[r.robot]
                                                                  : std::to_string(r.robot);
    os << r.t << "," << id << "," << r.cell.a << "," << r.cell.b << "," << fmt_battery(r.battery)
       << "," << (r.sensors_on ? 1 : 0) << "," << (r.charging ? 1 : 0) << "," << r.event << "\n";
  }
  return os.str();
}

int reachable_count(const GridMap& grid, const std::vector<Cell>& starts) {
  CellSet seen;
  std::deque<Cell> q;
  for (Cell s : starts)
    if (grid.free_cell(s) && seen.insert(s).second) q.push_back(s);
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    for (Cell n : neighbors(grid, c))
      if (seen.insert(n).second) q.push_back(n);
  }
  return static_cast<int>(seen.size());
}

GroundTruth ground_truth_from_scenario(const Scenario& scenario) {
  GroundTruth gt;
  gt.grid = scenario.grid;
  return gt;
}

GroundTruth load_ground_truth(const std::string& path, const Scenario& scenario) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed ground-truth file '" + path + "': " + e.what());
  }
  GroundTruth gt = ground_truth_from_scenario(scenario);
  if (j.contains("obstacles"))
    for (const auto& o : j["obstacles"]) gt.grid.obstacles.insert(Cell{o[0].get<int>(), o[1].get<int>()});
  if (j.contains("terrain"))
    for (const auto& t : j["terrain"])
      gt.grid.terrain[Cell{t[0].get<int>(), t[1].get<int>()}] = t[2].get<double>();
  if (j.contains("sensing_range")) gt.sensing_range = j["sensing_range"].get<int>();
  if (gt.sensing_range < 1) throw ValidationError("sensing_range must be >= 1");
  if (j.contains("target") && !j["target"].is_null())
    gt.target = Cell{j["target"][0].get<int>(), j["target"][1].get<int>()};
  for (Cell c : scenario.grid.obstacles)
    if (!gt.grid.obstacles.count(c))
      throw ValidationError("ground truth must contain every scenario obstacle");
  for (const auto& r : scenario.robots)
    if (gt.grid.blocked(r.start))
      throw ValidationError("ground truth blocks robot start " + cell_str(r.start));
  return gt;
}

GroundTruth randomized_ground_truth(const Scenario& scenario, int hidden_obstacles,
                                    std::uint64_t seed) {
  GroundTruth gt = ground_truth_from_scenario(scenario);
  if (hidden_obstacles <= 0) return gt;
  std::vector<Cell> candidates;
  for (int b = 1; b <= gt.grid.height_b; ++b)
    for (int a = 1; a <= gt.grid.width_a; ++a) {
      Cell c{a, b};
      if (!gt.grid.free_cell(c)) continue;
      bool excluded = scenario.station_at(c) != nullptr;
      for (const auto& r : scenario.robots)
        if (r.start == c) excluded = true;
      if (!excluded) candidates.push_back(c);
    }
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (int i = 0; i < hidden_obstacles && i < static_cast<int>(candidates.size()); ++i)
    gt.grid.obstacles.insert(candidates[i]);
  return gt;
}

}  // namespace oros
