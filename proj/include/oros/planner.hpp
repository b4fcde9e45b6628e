#pragma once
#include <optional>

#include "oros/simulator.hpp"
#include "oros/solver.hpp"

namespace oros {

struct PlannerConfig {
  int window_w{0};                     // 0: use scenario.mission.window_w
  double discrepancy_threshold{-1.0};  // < 0: 2 * p_rx
  std::optional<DynamicsVariant> variant;
  bool deterministic{true};
  SolveLimits solver;
  bool relax_e{true};
  bool prune_upsilon{true};
};

// One receding-horizon solve from the current mission state. Frozen robots
// are excluded from the model and kept in place. Falls back to a stay-in-
// place, sensors-off plan when the solver finds nothing usable.
Plan plan_window(const MissionState& state, const Scenario& scenario,
                 const PlannerConfig& cfg, SolveStats* stats_out = nullptr);

enum class EventAction { Replan, Continue, Terminate };

EventAction handle_event(MissionState& state, const Event& ev, const Scenario& scenario,
                         const PlannerConfig& cfg);

MissionState initial_mission_state(const Scenario& scenario);

// Full mission: plan, dispatch through the simulator, react to events,
// repeat until the area is explored, a target is found, or the horizon ends.
SimTrace run_mission(const Scenario& scenario, const GroundTruth& truth,
                     const PlannerConfig& cfg = {});

}  // namespace oros
