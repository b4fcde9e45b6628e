#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oros/plan.hpp"
#include "oros/scenario.hpp"

namespace oros {

enum class EventKind {
  ObstacleDetected,
  BatteryDiscrepancy,
  TargetFound,
  PlanExhausted,
  HorizonReached,
  AreaComplete,
  BatteryDepleted,
};

std::string event_kind_str(EventKind k);

struct Event {
  EventKind kind{EventKind::PlanExhausted};
  int t{0};
  int robot{-1};
  Cell cell{0, 0};
  double predicted{0.0}, reported{0.0};
  double prior{0.0};  // battery level before the step (discrepancy events)
};

struct MissionState {
  int t_now{0};
  std::vector<Cell> positions;
  std::vector<double> batteries;
  std::vector<bool> frozen;
  CellSet explored;
  CellSet known_obstacles;
  std::map<Cell, double> terrain_estimate;
  Plan active_plan;
  int plan_cursor{0};  // next step index within active_plan
};

// True world: full obstacle set, true terrain, sensing model.
struct GroundTruth {
  GridMap grid;
  int sensing_range{1};
  std::optional<Cell> target;
};

struct EnergyLedger {
  double move{0}, tx{0}, rx{0}, sen{0}, local{0};
  double charge_gain{0}, clamp_loss{0};
  double consumed() const { return move + tx + rx + sen + local; }
};

struct TraceRow {
  int t{0};
  int robot{0};
  Cell cell{0, 0};
  double battery{0};
  bool sensors_on{false};
  bool charging{false};
  std::string event;
};

struct SimTrace {
  std::vector<std::string> robot_ids;
  std::vector<TraceRow> rows;
  std::vector<int> explored_size_by_t;
  EnergyLedger total;
  std::vector<EnergyLedger> per_robot;
  long solver_invocations{0};
  std::vector<double> solve_wall_ms;
  int mission_steps{0};
  int explored_cells{0};
  int reachable_cells{0};
  double coverage() const {
    return reachable_cells > 0 ? static_cast<double>(explored_cells) / reachable_cells : 0.0;
  }
  std::string termination;
  std::string to_csv() const;  // t,robot,a,b,battery,sensors_on,charging,event
};

struct SimConfig {
  double discrepancy_threshold{-1.0};  // < 0: defaults to 2 * p_rx
};

double effective_discrepancy_threshold(const SimConfig& cfg, const Scenario& scn);

// Executes one planned step for every robot against the ground truth.
// Appends trace rows, mutates the mission state, returns triggered events.
std::vector<Event> sim_step(MissionState& state, const std::vector<RobotPlanStep>& step,
                            const GroundTruth& truth, const Scenario& scenario,
                            const SimConfig& cfg, SimTrace& trace);

// Sensors-always-on replay of a fixed position sequence with local object
// detection running on the robot (adds p_local every step, never charges).
SimTrace run_soa_baseline(const Scenario& scenario, const GroundTruth& truth,
                          const std::vector<std::vector<Cell>>& path);

struct CompareReport {
  double e_oros{0}, e_soa{0};
  double savings_pct{0};
  nlohmann::ordered_json json;
  std::string csv;
};

CompareReport compare_metrics(const SimTrace& oros, const SimTrace& soa);

// Non-obstacle cells reachable from the given starts on this grid.
int reachable_count(const GridMap& grid, const std::vector<Cell>& starts);

GroundTruth ground_truth_from_scenario(const Scenario& scenario);
GroundTruth load_ground_truth(const std::string& path, const Scenario& scenario);
// Scatter `count` extra hidden obstacles on free non-start cells, seeded.
GroundTruth randomized_ground_truth(const Scenario& scenario, int hidden_obstacles,
                                    std::uint64_t seed);

}  // namespace oros
