#include <random>

#include "doctest.h"
#include "oros/solver.hpp"

using namespace oros;

namespace {

// Small hand-built LP/MILP helpers for solver-only tests.
int add_var(MilpModel& m, double lb, double ub, double obj, bool integral) {
  return m.add_col(VarRef{}, lb, ub, integral, obj);
}

void add_le(MilpModel& m, std::vector<std::pair<int, double>> terms, double rhs) {
  Row r;
  r.terms = std::move(terms);
  r.hi = rhs;
  m.add_row(std::move(r));
}

Scenario random_instance(std::mt19937& rng, int n_robots, int max_dim = 3) {
  Scenario s;
  s.grid.width_a = 2 + static_cast<int>(rng() % (max_dim - 1));
  s.grid.height_b = 2 + static_cast<int>(rng() % (max_dim - 1));
  // scatter obstacles, keeping at least half the grid free
  int max_obs = s.grid.cell_count() / 3;
  for (int i = 0; i < max_obs; ++i)
    if (rng() % 3 == 0)
      s.grid.obstacles.insert({1 + static_cast<int>(rng() % s.grid.width_a),
                               1 + static_cast<int>(rng() % s.grid.height_b)});
  std::vector<Cell> free_cells;
  for (int b = 1; b <= s.grid.height_b; ++b)
    for (int a = 1; a <= s.grid.width_a; ++a)
      if (s.grid.free_cell({a, b})) free_cells.push_back({a, b});
  REQUIRE(static_cast<int>(free_cells.size()) >= n_robots);
  for (int r = 0; r < n_robots; ++r) {
    RobotSpec rs;
    rs.id = "r" + std::to_string(r + 1);
    rs.start = free_cells[rng() % free_cells.size()];
    while (r > 0 && rs.start == s.robots[0].start) rs.start = free_cells[rng() % free_cells.size()];
    rs.battery_capacity = 100.0;
    rs.initial_battery = 20.0 + static_cast<double>(rng() % 80);
    s.robots.push_back(rs);
  }
  if (rng() % 2) {
    Cell sc = free_cells[rng() % free_cells.size()];
    s.stations.push_back({sc, 2.0 + static_cast<double>(rng() % 5)});
  }
  if (rng() % 3 == 0) s.grid.terrain[free_cells[rng() % free_cells.size()]] = 1.5;
  s.energy.tx_gen = TxGenerator{1.0, 0.25, 1.0, free_cells[0]};
  s.mission.horizon_t = 10;
  s.mission.window_w = 4;
  s.mission.collision_exclusive = true;
  s.mission.variant = rng() % 2 ? DynamicsVariant::A : DynamicsVariant::B;
  return s;
}

}  // namespace

TEST_CASE("solve_lp: toy problems") {
  SUBCASE("max x+y under unit box") {
    MilpModel m;
    int x = add_var(m, 0, 1, 1, false);
    int y = add_var(m, 0, 1, 1, false);
    add_le(m, {{x, 1.0}}, 1.0);
    add_le(m, {{y, 1.0}}, 1.0);
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(2.0));
  }
  SUBCASE("max x with x <= 0.5") {
    MilpModel m;
    int x = add_var(m, 0, 1, 1, false);
    add_le(m, {{x, 1.0}}, 0.5);
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(0.5));
  }
  SUBCASE("infeasible pair x >= 2, x <= 1") {
    MilpModel m;
    int x = add_var(m, 0, 5, 1, false);
    Row ge;
    ge.terms = {{x, 1.0}};
    ge.lo = 2.0;
    m.add_row(std::move(ge));
    add_le(m, {{x, 1.0}}, 1.0);
    Solution s = solve_lp(m);
    CHECK(s.status == SolveStatus::Infeasible);
  }
  SUBCASE("equality row") {
    MilpModel m;
    int x = add_var(m, 0, 10, -1, false);  // maximize -x => minimize x
    Row eq;
    eq.terms = {{x, 2.0}};
    eq.lo = eq.hi = 5.0;
    m.add_row(std::move(eq));
    Solution s = solve_lp(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.values[x] == doctest::Approx(2.5));
  }
}

TEST_CASE("solve_lp: bounds respected within tolerance") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    MilpModel m;
    int n = 4 + static_cast<int>(rng() % 4);
    for (int j = 0; j < n; ++j)
      add_var(m, 0, 1 + static_cast<double>(rng() % 3), (rng() % 7) - 3.0, false);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, double>> terms;
      for (int j = 0; j < n; ++j)
        if (rng() % 2) terms.push_back({j, static_cast<double>(rng() % 5) - 2.0});
      if (!terms.empty()) add_le(m, std::move(terms), static_cast<double>(rng() % 6));
    }
    Solution s = solve_lp(m);
    if (s.status != SolveStatus::Optimal) continue;
    for (size_t j = 0; j < m.cols.size(); ++j) {
      CHECK(s.values[j] >= m.cols[j].lb - 1e-9);
      CHECK(s.values[j] <= m.cols[j].ub + 1e-9);
    }
  }
}

TEST_CASE("solve_bnb: toy integral problems") {
  SUBCASE("binary forced down by fractional cap") {
    MilpModel m;
    int x = add_var(m, 0, 1, 1, true);
    add_le(m, {{x, 1.0}}, 0.5);
    Solution s = solve_bnb(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(0.0));
  }
  SUBCASE("tiny knapsack") {
    MilpModel m;
    int x = add_var(m, 0, 1, 3, true);
    int y = add_var(m, 0, 1, 2, true);
    add_le(m, {{x, 1.0}, {y, 1.0}}, 1.0);
    Solution s = solve_bnb(m);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(3.0));
    CHECK(s.values[x] == doctest::Approx(1.0));
  }
  SUBCASE("LP relaxation bounds the MILP from above") {
    MilpModel m;
    int x = add_var(m, 0, 1, 5, true);
    int y = add_var(m, 0, 1, 4, true);
    add_le(m, {{x, 2.0}, {y, 2.0}}, 3.0);
    Solution lp = solve_lp(m);
    Solution ip = solve_bnb(m);
    REQUIRE(lp.status == SolveStatus::Optimal);
    REQUIRE(ip.status == SolveStatus::Optimal);
    CHECK(lp.objective >= ip.objective - 1e-9);
  }
}

TEST_CASE("exhaustive oracle: two-cell corridor prefers coverage") {
  Scenario s;
  s.grid.width_a = 2;
  s.grid.height_b = 1;
  RobotSpec r;
  r.id = "r1";
  r.start = {1, 1};
  s.robots.push_back(r);
  s.mission.horizon_t = 5;
  WindowState st = initial_window_state(s);
  auto res = solve_exhaustive(s, 1, st);
  REQUIRE(res.solution.status == SolveStatus::Optimal);
  CHECK(res.plan.steps[0][1].cell == Cell{2, 1});  // coverage 2 beats staying at 1
  // objective: lambda_e * 2 + final battery (move drain: rx .5 + move 1 + sen 2 + tx 1)
  CHECK(res.solution.objective == doctest::Approx(101.0 * 2 + 95.5));
}

TEST_CASE("exhaustive oracle: zero-length window scores the initial state") {
  Scenario s;
  s.grid.width_a = 2;
  s.grid.height_b = 2;
  RobotSpec r;
  r.id = "r1";
  r.start = {1, 1};
  r.initial_battery = 77.0;
  s.robots.push_back(r);
  s.mission.horizon_t = 5;
  WindowState st = initial_window_state(s);
  auto res = solve_exhaustive(s, 0, st);
  REQUIRE(res.solution.status == SolveStatus::Optimal);
  CHECK(res.solution.objective == doctest::Approx(101.0 * 1 + 77.0));
}

TEST_CASE("exhaustive oracle: depletion pruning leaves stay-only plans") {
  Scenario s;
  s.grid.width_a = 2;
  s.grid.height_b = 1;
  RobotSpec r;
  r.id = "r1";
  r.start = {1, 1};
  r.initial_battery = 1.2;  // enough to idle twice (rx 0.5), not to move
  s.robots.push_back(r);
  s.energy.p_sen = 0.0;
  s.energy.tx_gen = TxGenerator{0.0, 0.0, 1.0, {1, 1}};
  s.energy.p_move_base = 10.0;
  s.mission.horizon_t = 5;
  WindowState st = initial_window_state(s);
  auto res = solve_exhaustive(s, 2, st);
  REQUIRE(res.solution.status == SolveStatus::Optimal);
  CHECK(res.plan.steps[0][1].cell == Cell{1, 1});
  CHECK(res.plan.steps[0][2].cell == Cell{1, 1});
}

TEST_CASE("exhaustive oracle: guard refuses oversized instances") {
  Scenario s;
  s.grid.width_a = 5;
  s.grid.height_b = 5;
  for (int k = 0; k < 3; ++k) {
    RobotSpec r;
    r.id = "r" + std::to_string(k + 1);
    r.start = {k + 1, 1};
    s.robots.push_back(r);
  }
  s.mission.horizon_t = 10;
  WindowState st = initial_window_state(s);
  CHECK_THROWS_AS(solve_exhaustive(s, 4, st), OracleGuardError);
}

TEST_CASE("bnb equals the exhaustive oracle on random tiny instances") {
  std::mt19937 rng(20250401);
  int checked = 0;
  while (checked < 12) {
    int n_robots = 1 + static_cast<int>(rng() % 2);
    Scenario s = random_instance(rng, n_robots);
    int window = n_robots == 1 ? 3 : 2;
    WindowState st = initial_window_state(s);
    OracleResult oracle;
    try {
      oracle = solve_exhaustive(s, window, st);
    } catch (const OracleGuardError&) {
      continue;
    }
    BuiltModel built = build_model(s, window, st);
    Solution ip = solve_bnb(built.model);
    REQUIRE(ip.status == oracle.solution.status);
    if (ip.status == SolveStatus::Optimal)
      CHECK(ip.objective == doctest::Approx(oracle.solution.objective).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("bnb is deterministic") {
  std::mt19937 rng(88);
  Scenario s = random_instance(rng, 1);
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 3, st);
  Solution a = solve_bnb(built.model);
  Solution b = solve_bnb(built.model);
  CHECK(a.stats.nodes == b.stats.nodes);
  CHECK(a.objective == b.objective);
  CHECK(a.values == b.values);
}

TEST_CASE("extract_plan: decode, sensors flag and battery replay") {
  Scenario s;
  s.grid.width_a = 3;
  s.grid.height_b = 1;
  RobotSpec r;
  r.id = "r1";
  r.start = {1, 1};
  s.robots.push_back(r);
  s.mission.horizon_t = 6;
  WindowState st = initial_window_state(s);
  st.explored.insert({2, 1});  // pre-explored middle cell
  BuiltModel built = build_model(s, 2, st);
  Solution sol = solve_bnb(built.model);
  REQUIRE(sol.status == SolveStatus::Optimal);
  Plan plan = extract_plan(sol, built, s);
  // optimal sweep: 1 -> 2 -> 3; middle step crosses explored ground
  CHECK(plan.steps[0][1].cell == Cell{2, 1});
  CHECK(plan.steps[0][2].cell == Cell{3, 1});
  CHECK(plan.steps[0][1].sensors_on == false);
  CHECK(plan.steps[0][2].sensors_on == true);

  PlanPaths paths = decode_paths(sol, built);
  ReplayResult rep = replay_paths(s, built.grid, built.explored0, st.batteries, built.variant,
                                  paths, built.lambda_explore, built.lambda_battery);
  REQUIRE(rep.feasible);
  for (int t = 0; t <= 2; ++t)
    CHECK(rep.batteries[0][t] == doctest::Approx(sol.values[built.space.bat(0, t)]).epsilon(1e-9));
  CHECK(rep.objective == doctest::Approx(sol.objective).epsilon(1e-9));
}

TEST_CASE("objective weight scaling leaves the argmax unchanged") {
  std::mt19937 rng(5);
  Scenario s = random_instance(rng, 1);
  s.mission.lambda_explore = 101.0;
  s.mission.lambda_battery = 1.0;
  WindowState st = initial_window_state(s);
  auto base = solve_exhaustive(s, 3, st);
  s.mission.lambda_explore *= 4.0;
  s.mission.lambda_battery *= 4.0;
  auto scaled = solve_exhaustive(s, 3, st);
  REQUIRE(base.solution.status == SolveStatus::Optimal);
  REQUIRE(scaled.solution.status == SolveStatus::Optimal);
  CHECK(scaled.solution.objective == doctest::Approx(4.0 * base.solution.objective));
  for (int t = 0; t <= 3; ++t)
    CHECK(base.plan.steps[0][t].cell == scaled.plan.steps[0][t].cell);
}

TEST_CASE("linearization identities hold in every solved instance") {
  std::mt19937 rng(777);
  int checked = 0;
  while (checked < 6) {
    Scenario s = random_instance(rng, 1);
    WindowState st = initial_window_state(s);
    BuiltModel built = build_model(s, 3, st);
    Solution sol = solve_bnb(built.model);
    if (sol.status != SolveStatus::Optimal) continue;
    CHECK(count_linearization_violations(sol, built, 1e-6) == 0);
    ++checked;
  }
}

TEST_CASE("solver time limit yields a time_limit status") {
  Scenario s;
  s.grid.width_a = 4;
  s.grid.height_b = 4;
  RobotSpec r1, r2;
  r1.id = "r1";
  r1.start = {1, 1};
  r2.id = "r2";
  r2.start = {4, 4};
  s.robots = {r1, r2};
  s.mission.horizon_t = 10;
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 4, st);
  SolveLimits limits;
  limits.time_limit_s = 1e-4;
  Solution sol = solve_bnb(built.model, limits);
  CHECK(sol.status == SolveStatus::TimeLimit);
}
