#pragma once
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oros/cell.hpp"
#include "oros/scenario.hpp"

namespace oros {

enum class VarKind : std::uint8_t { L, E, U, Bat, Ups, Alpha, Delta };

struct VarRef {
  VarKind kind{VarKind::L};
  int r{-1};   // robot index, -1 when not applicable
  int t{0};
  Cell c{0, 0};
  Cell c2{0, 0};  // Ups destination
};

struct Column {
  VarRef ref;
  double lb{0.0}, ub{1.0};
  double obj{0.0};
  bool integral{false};
  bool fixed() const { return lb == ub; }
};

enum class RowKind : std::uint8_t {
  Position, Collision, Motion, UpsUb1, UpsUb2, UpsLb, AlphaUb1, AlphaUb2, AlphaLb,
  DeltaUb1, DeltaUb2, DeltaLb, Battery, ExploreMono, ExploreVisit, ExploreCap,
  Charging, FlowOut, FlowIn, Custom
};

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  double lo{-kInf}, hi{kInf};  // lo <= a.x <= hi; equality when lo == hi
  std::vector<std::pair<int, double>> terms;
  RowKind kind{RowKind::Custom};
  int r{-1}, t{0};
  Cell c{0, 0};
  Cell c2{0, 0};  // Upsilon pair destination (row naming)
};

// Generic bounded MILP container; the solver consumes it as-is.
struct MilpModel {
  std::vector<Column> cols;
  std::vector<Row> rows;
  bool maximize{true};

  int add_col(VarRef ref, double lb, double ub, bool integral, double obj = 0.0);
  int add_row(Row row);
  void fix(int col, double v) { cols[col].lb = cols[col].ub = v; }
  int n_binary() const;
  int n_free_cols() const;  // not bound-fixed
  std::string col_name(int j) const;
  std::string row_name(int i) const;
  std::string dump_lp() const;  // CPLEX LP text
  void check_valid() const;    // indices/bounds sanity, throws
};

// Dense id layout for every in-scope tuple of a window model.
class VarSpace {
 public:
  VarSpace() = default;
  VarSpace(const GridMap& grid, int n_robots, int window, DynamicsVariant variant,
           bool prune_upsilon);

  int robots() const { return R_; }
  int window() const { return W_; }
  int cells() const { return A_ * B_; }
  DynamicsVariant variant() const { return variant_; }

  int cell_index(Cell c) const { return (c.b - 1) * A_ + (c.a - 1); }
  Cell cell_at(int idx) const { return Cell{idx % A_ + 1, idx / A_ + 1}; }

  // Column ids; -1 when the tuple is out of scope.
  int l(int r, int t, Cell c) const { return l0_ + (r * (W_ + 1) + t) * cells() + cell_index(c); }
  int e(int t, Cell c) const { return e0_ + t * cells() + cell_index(c); }
  int u(int r, int t) const { return u0_ + r * W_ + (t - 1); }  // t in 1..W
  int bat(int r, int t) const { return bat0_ + r * (W_ + 1) + t; }
  int ups(int r, int t, Cell from, Cell to) const;  // t in 0..W-1
  int alpha(int r, int t, Cell c) const {           // t in 0..W-1, variant A
    return alpha0_ < 0 ? -1 : alpha0_ + (r * W_ + t) * cells() + cell_index(c);
  }
  int delta(int r, int t, Cell c) const {           // t in 1..W, variant B
    return delta0_ < 0 ? -1 : delta0_ + (r * W_ + (t - 1)) * cells() + cell_index(c);
  }

  const std::vector<std::pair<Cell, Cell>>& pairs() const { return pairs_; }
  int total_cols() const { return total_; }

 private:
  int R_{0}, W_{0}, A_{0}, B_{0};
  DynamicsVariant variant_{DynamicsVariant::A};
  int l0_{-1}, e0_{-1}, u0_{-1}, bat0_{-1}, ups0_{-1}, alpha0_{-1}, delta0_{-1};
  int total_{0};
  std::vector<std::pair<Cell, Cell>> pairs_;   // adjacency-pruned (or full) pair list
  std::map<std::pair<int, int>, int> pair_idx_;
};

// Planner-visible state a window model starts from.
struct WindowState {
  std::vector<Cell> positions;    // parallel to scenario.robots
  std::vector<double> batteries;
  CellSet explored;
  CellSet extra_obstacles;              // discovered on top of the scenario map
  std::map<Cell, double> terrain_overrides;  // learned terrain estimates
};

struct BuildOptions {
  std::optional<DynamicsVariant> variant;  // default: scenario.mission.variant
  bool relax_e{true};                      // e forced integral by L; relax for speed
  bool prune_upsilon{true};                // drop non-adjacent Upsilon columns
  bool reach_fixing{true};                 // fix vars unreachable within the window
  bool normalize_start_explored{true};     // robots have sensed the cell they stand on
  bool flow_tightening{true};              // implied Upsilon flow equalities (LP bound)
  std::optional<std::pair<double, double>> weights;  // lambda_explore, lambda_battery
};

class ModelBuilder {
 public:
  ModelBuilder(const Scenario& scenario, int window, const WindowState& state,
               BuildOptions opts = {});

  int emit_position_constraints();
  int emit_motion_constraints();
  int emit_upsilon_linearization();
  int emit_alpha_linearization();
  int emit_delta_linearization();
  int emit_battery_dynamics();       // variant-gated: const9 (A) or const22 (B)
  int emit_exploration_constraints();
  int emit_charging_constraints();
  // Valid equalities implied by position+motion+linearization: every robot's
  // Upsilon mass flows out of its current cell and into its next cell. They
  // change no integral solution but tighten the LP bound substantially.
  int emit_flow_tightening();
  void emit_objective();
  int propagate_reachability();      // bound fixing; returns #columns fixed

  const VarSpace& space() const { return space_; }
  const GridMap& grid() const { return grid_; }
  MilpModel& model() { return model_; }
  DynamicsVariant variant() const { return variant_; }
  const CellSet& explored0() const { return explored0_; }

 private:
  const Scenario& scn_;
  GridMap grid_;  // scenario grid + extra obstacles + terrain overrides
  int window_;
  WindowState state_;
  BuildOptions opts_;
  DynamicsVariant variant_;
  VarSpace space_;
  MilpModel model_;
  CellSet explored0_;
  double move_coeff(Cell from, Cell to) const;
};

// Self-contained solved-model context for decoding solutions.
struct BuiltModel {
  MilpModel model;
  VarSpace space;
  WindowState state0;
  CellSet explored0;
  DynamicsVariant variant;
  GridMap grid;          // the grid the model was built against
  double lambda_explore{0.0}, lambda_battery{0.0};
  int n_rows_by_emit[16] = {0};
};

BuiltModel build_model(const Scenario& scenario, int window, const WindowState& state,
                       BuildOptions opts = {});

WindowState initial_window_state(const Scenario& scenario);

}  // namespace oros
