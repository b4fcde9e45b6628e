#include <random>

#include "doctest.h"
#include "oros/milp.hpp"
#include "oros/solver.hpp"

using namespace oros;

namespace {

Scenario grid_scenario(int a, int b, std::vector<Cell> starts, int horizon = 10) {
  Scenario s;
  s.grid.width_a = a;
  s.grid.height_b = b;
  int k = 1;
  for (Cell c : starts) {
    RobotSpec r;
    r.id = "r" + std::to_string(k++);
    r.start = c;
    s.robots.push_back(r);
  }
  s.mission.horizon_t = horizon;
  s.mission.window_w = std::min(5, horizon);
  return s;
}

int count_rows(const MilpModel& m, RowKind k) {
  int n = 0;
  for (const auto& row : m.rows)
    if (row.kind == k) ++n;
  return n;
}

}  // namespace

TEST_CASE("position constraints: counts and fixings") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  ModelBuilder b(s, 2, st);
  CHECK(b.emit_position_constraints() == 2);  // one equality row per future step
  CHECK(b.model().cols[b.space().l(0, 0, {1, 1})].lb == 1.0);
  CHECK(b.model().cols[b.space().l(0, 0, {2, 2})].ub == 0.0);

  Scenario s2 = grid_scenario(3, 3, {{1, 1}, {3, 3}});
  s2.mission.collision_exclusive = true;
  WindowState st2 = initial_window_state(s2);
  ModelBuilder b2(s2, 2, st2);
  b2.emit_position_constraints();
  CHECK(count_rows(b2.model(), RowKind::Position) == 4);
  CHECK(count_rows(b2.model(), RowKind::Collision) == 18);  // cells x steps
}

TEST_CASE("position constraints: obstacle cells are fixed to zero") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  s.grid.obstacles.insert({2, 2});
  WindowState st = initial_window_state(s);
  ModelBuilder b(s, 2, st);
  b.emit_position_constraints();
  for (int t = 0; t <= 2; ++t) CHECK(b.model().cols[b.space().l(0, t, {2, 2})].ub == 0.0);
}

TEST_CASE("motion constraints: corner destination has four sources") {
  Scenario s = grid_scenario(3, 3, {{2, 2}});
  WindowState st = initial_window_state(s);
  ModelBuilder b(s, 1, st);
  b.emit_position_constraints();
  CHECK(b.emit_motion_constraints() == 9);  // one row per destination cell
  for (const auto& row : b.model().rows) {
    if (row.kind != RowKind::Motion) continue;
    if (row.c == Cell{1, 1}) CHECK(row.terms.size() == 5);  // dest + 4 sources
    if (row.c == Cell{2, 2}) CHECK(row.terms.size() == 10);
  }
}

TEST_CASE("motion constraints: compact form equals pairwise form on 3x3") {
  // Enumerate every position sequence of length 3 and compare feasibility
  // under the compact rows against the pairwise non-adjacency form.
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  GridMap g = s.grid;
  auto adjacent = [&](Cell x, Cell y) { return chebyshev(x, y) <= 1; };
  std::vector<Cell> cells;
  for (int bb = 1; bb <= 3; ++bb)
    for (int aa = 1; aa <= 3; ++aa) cells.push_back({aa, bb});

  WindowState st = initial_window_state(s);
  BuildOptions opts;
  opts.reach_fixing = false;
  int agree = 0;
  for (Cell c1 : cells)
    for (Cell c2 : cells)
      for (Cell c3 : cells) {
        std::vector<Cell> seq = {c1, c2, c3};
        // compact rows, substituted: dest must be covered by a source neighbor
        bool ok_compact = true;
        for (int t = 0; t < 2 && ok_compact; ++t) {
          auto nbr = neighbors(g, seq[t + 1]);
          ok_compact = std::find(nbr.begin(), nbr.end(), seq[t]) != nbr.end();
        }
        // pairwise form: l(t,c) + l(t+1,c') <= 1 for every non-adjacent pair
        bool ok_pair = true;
        for (int t = 0; t < 2 && ok_pair; ++t)
          for (Cell x : cells)
            for (Cell y : cells) {
              if (adjacent(x, y)) continue;
              int lhs = (seq[t] == x ? 1 : 0) + (seq[t + 1] == y ? 1 : 0);
              if (lhs > 1) ok_pair = false;
            }
        CHECK(ok_compact == ok_pair);
        if (ok_compact == ok_pair) ++agree;
      }
  CHECK(agree == 729);
  (void)st;
  (void)opts;
}

TEST_CASE("upsilon linearization: pruned pair set on 3x3") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  ModelBuilder b(s, 2, st);
  CHECK(b.space().pairs().size() == 49);  // sum of neighborhood degrees
  CHECK(b.emit_upsilon_linearization() == 3 * 2 * 49);
  CHECK(b.space().ups(0, 0, {1, 1}, {3, 3}) == -1);  // non-adjacent pair pruned

  BuildOptions opts;
  opts.prune_upsilon = false;
  ModelBuilder b2(s, 2, st, opts);
  CHECK(b2.space().pairs().size() == 81);
}

TEST_CASE("alpha/delta linearization row counts and variant gating") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  ModelBuilder a(s, 2, st);
  CHECK(a.emit_alpha_linearization() == 2 * 3 * 9);  // W * 3AB
  CHECK(a.emit_delta_linearization() == 0);
  CHECK(a.space().alpha(0, 0, {1, 1}) >= 0);
  CHECK(a.space().delta(0, 1, {1, 1}) == -1);

  Scenario sb = s;
  sb.mission.variant = DynamicsVariant::B;
  ModelBuilder b(sb, 2, initial_window_state(sb));
  CHECK(b.emit_alpha_linearization() == 0);
  CHECK(b.emit_delta_linearization() == 2 * 3 * 9);
  CHECK(b.space().alpha(0, 0, {1, 1}) == -1);
  CHECK(b.space().delta(0, 1, {1, 1}) >= 0);
}

TEST_CASE("mccormick forcing under fixed occupancy") {
  Scenario s = grid_scenario(2, 1, {{1, 1}});
  s.stations.push_back({{1, 1}, 5.0});
  WindowState st = initial_window_state(s);
  BuildOptions opts;
  opts.normalize_start_explored = false;
  BuiltModel built = build_model(s, 1, st, opts);
  // Force the move (1,1) -> (2,1).
  built.model.fix(built.space.l(0, 1, {2, 1}), 1.0);
  built.model.fix(built.space.u(0, 1), 0.0);
  Solution sol = solve_lp(built.model);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.values[built.space.ups(0, 0, {1, 1}, {2, 1})] == doctest::Approx(1.0));
  CHECK(sol.values[built.space.ups(0, 0, {1, 1}, {1, 1})] == doctest::Approx(0.0));
  // Unexplored destination keeps alpha at zero; the explored start would not.
  CHECK(sol.values[built.space.alpha(0, 0, {2, 1})] == doctest::Approx(0.0));
}

TEST_CASE("battery dynamics row reproduces the variant-A step values") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  s.stations.push_back({{1, 1}, 5.0});
  WindowState st = initial_window_state(s);

  SUBCASE("stay on an unexplored cell, not charging: 96.5") {
    BuildOptions opts;
    opts.normalize_start_explored = false;
    BuiltModel built = build_model(s, 1, st, opts);
    built.model.fix(built.space.l(0, 1, {1, 1}), 1.0);
    built.model.fix(built.space.u(0, 1), 0.0);
    Solution sol = solve_lp(built.model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built.space.bat(0, 1)] == doctest::Approx(96.5));
  }
  SUBCASE("stay on an explored cell: only the receive drain") {
    BuiltModel built = build_model(s, 1, st);  // start normalized to explored
    built.model.fix(built.space.l(0, 1, {1, 1}), 1.0);
    built.model.fix(built.space.u(0, 1), 0.0);
    Solution sol = solve_lp(built.model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built.space.bat(0, 1)] == doctest::Approx(99.5));
  }
  SUBCASE("charging on an explored station cell: net +CR") {
    WindowState st2 = st;
    st2.batteries[0] = 90.0;
    BuiltModel built = build_model(s, 1, st2);
    built.model.fix(built.space.l(0, 1, {1, 1}), 1.0);
    built.model.fix(built.space.u(0, 1), 1.0);
    Solution sol = solve_lp(built.model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built.space.bat(0, 1)] == doctest::Approx(95.0));
  }
}

TEST_CASE("battery dynamics row reproduces the variant-B step values") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  s.mission.variant = DynamicsVariant::B;
  s.stations.push_back({{1, 1}, 5.0});
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 1, st);
  built.model.fix(built.space.l(0, 1, {1, 1}), 1.0);

  SUBCASE("not charging pays rx + sen + tx") {
    built.model.fix(built.space.u(0, 1), 0.0);
    Solution sol = solve_lp(built.model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built.space.bat(0, 1)] == doctest::Approx(96.5));
  }
  SUBCASE("charging cancels tx and gains CR") {
    WindowState st2 = st;
    st2.batteries[0] = 90.0;
    BuiltModel built2 = build_model(s, 1, st2);
    built2.model.fix(built2.space.l(0, 1, {1, 1}), 1.0);
    built2.model.fix(built2.space.u(0, 1), 1.0);
    Solution sol = solve_lp(built2.model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built2.space.bat(0, 1)] == doctest::Approx(95.0));
    CHECK(sol.values[built2.space.delta(0, 1, {1, 1})] == doctest::Approx(1.0));
  }
}

TEST_CASE("exploration constraints force the propagated explored set") {
  Scenario s = grid_scenario(2, 1, {{1, 1}});
  WindowState st = initial_window_state(s);
  BuildOptions opts;
  opts.normalize_start_explored = false;
  BuiltModel built = build_model(s, 1, st, opts);
  built.model.fix(built.space.l(0, 1, {2, 1}), 1.0);
  Solution sol = solve_lp(built.model);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.values[built.space.e(1, {2, 1})] == doctest::Approx(1.0));  // visited
  CHECK(sol.values[built.space.e(1, {1, 1})] == doctest::Approx(0.0));  // abandoned, stays 0
}

TEST_CASE("charging constraints: no stations, at station, away from station") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  SUBCASE("no stations fixes every charging flag") {
    BuiltModel built = build_model(s, 2, st);
    for (int t = 1; t <= 2; ++t) CHECK(built.model.cols[built.space.u(0, t)].ub == 0.0);
  }
  SUBCASE("charging is free at a station and forced off elsewhere") {
    Scenario s2 = s;
    s2.stations.push_back({{2, 2}, 5.0});
    WindowState st2 = initial_window_state(s2);
    st2.batteries[0] = 50.0;
    BuiltModel built = build_model(s2, 1, st2);
    built.model.fix(built.space.l(0, 1, {2, 2}), 1.0);
    Solution sol = solve_lp(built.model);  // battery term prefers charging
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[built.space.u(0, 1)] == doctest::Approx(1.0));

    BuiltModel built2 = build_model(s2, 1, st2);
    built2.model.fix(built2.space.l(0, 1, {1, 1}), 1.0);
    Solution sol2 = solve_lp(built2.model);
    REQUIRE(sol2.status == SolveStatus::Optimal);
    CHECK(sol2.values[built2.space.u(0, 1)] == doctest::Approx(0.0));
  }
}

TEST_CASE("build_model: binary counts match the closed forms") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 2, st);
  int l_bin = 1 * 3 * 9;    // R * (W+1) * A*B
  int u_bin = 1 * 2;        // R * W
  int ups_bin = 1 * 2 * 49; // R * W * pruned pairs
  int alpha_bin = 1 * 2 * 9;
  CHECK(built.model.n_binary() == l_bin + u_bin + ups_bin + alpha_bin);  // e relaxed

  BuildOptions opts;
  opts.relax_e = false;
  BuiltModel built2 = build_model(s, 2, st, opts);
  CHECK(built2.model.n_binary() == l_bin + u_bin + ups_bin + alpha_bin + 3 * 9);
}

TEST_CASE("objective: defaults give coverage lexicographic priority") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  CHECK(s.lambda_explore_effective() == doctest::Approx(101.0));
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 2, st);
  CHECK(built.model.cols[built.space.e(2, {3, 3})].obj == doctest::Approx(101.0));
  CHECK(built.model.cols[built.space.bat(0, 2)].obj == doctest::Approx(1.0));
  CHECK(built.model.cols[built.space.e(1, {3, 3})].obj == 0.0);
}

TEST_CASE("lp dump: tuple-encoded names and sections") {
  Scenario s = grid_scenario(3, 3, {{1, 1}});
  WindowState st = initial_window_state(s);
  BuiltModel built = build_model(s, 2, st);
  std::string lp = built.model.dump_lp();
  CHECK(lp.find("Maximize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("L_r1_t1_a2_b2") != std::string::npos);
  CHECK(lp.find("Ups_r1_t0_a1_b1_a2_b2") != std::string::npos);
  CHECK(lp.find("Bat_r1_t0") != std::string::npos);
  CHECK(lp.find("Binaries") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);
}

TEST_CASE("reachability fixing never cuts the optimum") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    Scenario s = grid_scenario(3, 3, {{1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 3)}});
    if (rng() % 2) {
      Cell obs{1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 3)};
      if (obs != s.robots[0].start) s.grid.obstacles.insert(obs);
    }
    WindowState st = initial_window_state(s);
    BuildOptions with, without;
    with.reach_fixing = true;
    without.reach_fixing = false;
    Solution a = solve_bnb(build_model(s, 3, st, with).model);
    Solution b = solve_bnb(build_model(s, 3, st, without).model);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(b.status == SolveStatus::Optimal);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
  }
}
