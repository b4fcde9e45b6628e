#pragma once
#include <chrono>
#include <vector>

#include "oros/milp.hpp"

namespace oros::lp {

enum class LpStatus { Optimal, Infeasible, IterLimit, TimeLimit, NumFail };

// Bounded-variable revised dual simplex with a product-form inverse.
// Variables are the model's structural columns plus one logical per row
// ([A | I] v = 0 with logical bounds [-hi, -lo]); the all-logical basis is
// dual feasible by construction, so no phase-1 is needed and bound changes
// (branching) warm-start directly.
class DualSimplex {
 public:
  explicit DualSimplex(const MilpModel& model);

  void set_bounds(int j, double lo, double hi);  // structural column override
  void reset_bounds();                           // restore model bounds
  void reset_basis();                            // all-logical start

  struct Result {
    LpStatus status{LpStatus::NumFail};
    double obj{0.0};  // in the model's sense (max or min)
    long iters{0};
  };
  Result solve(long iter_limit = 0,
               const std::chrono::steady_clock::time_point* deadline = nullptr);

  double value(int j) const { return val_[j]; }     // structural j < n
  int n_structural() const { return n_; }
  double col_lb(int j) const { return lb_[j]; }
  double col_ub(int j) const { return ub_[j]; }

  static constexpr double kFeasTol = 1e-7;
  static constexpr double kDualTol = 1e-9;
  static constexpr double kPivotTol = 1e-9;

 private:
  int n_{0}, m_{0}, total_{0};
  bool maximize_{false};
  // CSC over structural columns; logical j = n_+i is the unit column e_i.
  std::vector<int> col_ptr_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> cost_;           // minimization costs, structurals only
  std::vector<double> lb_, ub_;        // all variables (current, with overrides)
  std::vector<double> lb0_, ub0_;      // original bounds
  std::vector<signed char> stat_;      // 0 basic, 1 at lower, 2 at upper
  std::vector<int> basic_;             // basic_[p] = variable at pivot position p
  std::vector<int> pos_of_;            // variable -> position, -1 if nonbasic
  std::vector<double> val_;            // current values, all variables
  std::vector<double> d_;              // reduced costs, all variables

  struct Eta {
    int p;
    double pivot;
    std::vector<std::pair<int, double>> w;  // sparse transformed column (incl p)
  };
  std::vector<Eta> etas_;
  long fill_{0};

  std::vector<double> work_, rho_;  // dense m workspaces
  std::vector<int> touched_;
  std::vector<double> alpha_;       // pivot row over variables
  std::vector<int> alpha_nz_;

  long iters_total_{0};
  int degenerate_run_{0};
  bool bland_{false};
  int last_repairs_{0};

  void ftran(std::vector<double>& v) const;
  void btran(std::vector<double>& v) const;
  void load_column(int j, std::vector<double>& dense, std::vector<int>& idx) const;
  void compute_values();
  void compute_duals();
  bool refactorize();  // false on singular-beyond-repair
  double bound_value(int j) const;
  double objective_min() const;
};

}  // namespace oros::lp
