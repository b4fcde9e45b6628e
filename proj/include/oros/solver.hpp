#pragma once
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oros/milp.hpp"
#include "oros/plan.hpp"

namespace oros {

enum class SolveStatus { Optimal, Infeasible, TimeLimit, NumericFailure };

struct SolveStats {
  long nodes{0};
  long lp_iterations{0};
  double wall_ms{0.0};
};

struct Solution {
  SolveStatus status{SolveStatus::NumericFailure};
  double objective{0.0};
  std::vector<double> values;  // empty when no incumbent exists
  SolveStats stats;
};

struct SolveLimits {
  double time_limit_s{0.0};  // 0 = unlimited
  long node_limit{0};        // 0 = unlimited
  bool deterministic{true};  // single-threaded solves are always deterministic
};

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// LP relaxation of the model (integrality dropped).
Solution solve_lp(const MilpModel& model);

// Branch and bound: most-fractional branching (ties to the lowest column),
// depth-first dive until the first incumbent, then best-bound selection.
// `heuristic` may propose full candidate value vectors; they are validated
// against the original model before being accepted as incumbents.
using PrimalHeuristic =
    std::function<std::optional<std::vector<double>>(const std::vector<double>& lp_values)>;
Solution solve_bnb(const MilpModel& model, const SolveLimits& limits = {},
                   const PrimalHeuristic& heuristic = nullptr);

struct OracleResult {
  Solution solution;  // values left empty; objective/status/stats filled
  Plan plan;
};

// Exhaustive enumeration of joint adjacent paths and charging choices,
// batteries replayed with the variant battery step, exact optimum returned.
// Guard: refuses when 9^(|R|*W) exceeds 1e7.
OracleResult solve_exhaustive(const Scenario& scenario, int window, const WindowState& state,
                              const BuildOptions& opts = {});

// Decoded integral positions/charging of a solution.
struct PlanPaths {
  std::vector<std::vector<Cell>> pos;      // [robot][0..W]
  std::vector<std::vector<bool>> charging; // [robot][0..W], index 0 unused
};
PlanPaths decode_paths(const Solution& sol, const BuiltModel& built);

Plan extract_plan(const Solution& sol, const BuiltModel& built, const Scenario& scenario);

// Replay a window assignment under planner-side battery semantics (hard
// bounds, no clamping); infeasible when a level leaves [0, capacity].
struct ReplayResult {
  bool feasible{true};
  std::string why;
  std::vector<std::vector<double>> batteries;  // [robot][0..W]
  CellSet explored_final;
  double objective{0.0};
};
ReplayResult replay_paths(const Scenario& scenario, const GridMap& grid,
                          const CellSet& explored0, const std::vector<double>& batteries0,
                          DynamicsVariant variant, const PlanPaths& paths,
                          double lambda_explore, double lambda_battery);

// Count of linearization identities (Ups = l*l', alpha = e*l', delta = u*l)
// violated beyond `tol` in a solved model; 0 means exactness holds.
int count_linearization_violations(const Solution& sol, const BuiltModel& built, double tol);

// Build + solve one window and decode the result.
struct WindowSolve {
  BuiltModel built;
  Solution solution;
  Plan plan;  // valid when an incumbent exists
};
WindowSolve solve_window(const Scenario& scenario, int window, const WindowState& state,
                         const BuildOptions& opts = {}, const SolveLimits& limits = {});

}  // namespace oros
