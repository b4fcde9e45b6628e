#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oros/scenario.hpp"

using namespace oros;

namespace {

nlohmann::json minimal_3x3() {
  return nlohmann::json::parse(R"({
    "grid": {"width": 3, "height": 3},
    "robots": [{"id": "r1", "battery_capacity": 100, "initial_battery": 100, "start": [1,1]}],
    "mission": {"horizon_t": 5, "window_w": 3}
  })");
}

std::string write_temp(const nlohmann::json& j) {
  static int counter = 0;
  std::string path = "/tmp/oros_scn_" + std::to_string(counter++) + ".json";
  std::ofstream out(path);
  out << j.dump();
  return path;
}

}  // namespace

TEST_CASE("load_scenario: minimal 3x3 file") {
  Scenario s = load_scenario(write_temp(minimal_3x3()));
  CHECK(s.grid.width_a == 3);
  CHECK(s.grid.height_b == 3);
  CHECK(s.robots.size() == 1);
  CHECK(s.energy.p_rx == doctest::Approx(0.5));  // defaults apply
}

TEST_CASE("load_scenario: field test file matches the experimental setup") {
  Scenario s = load_scenario(std::string(OROS_SOURCE_DIR) + "/scenarios/field_test_13x9.json");
  CHECK(s.grid.width_a == 13);
  CHECK(s.grid.height_b == 9);
  CHECK(s.robots.size() == 2);
  CHECK(s.mission.horizon_t == 35);
  CHECK(s.grid.cell_w == doctest::Approx(3.7));
  CHECK(s.grid.cell_h == doctest::Approx(3.1));
}

TEST_CASE("load_scenario: robot start on obstacle is rejected") {
  auto j = minimal_3x3();
  j["grid"]["obstacles"] = {{1, 1}};
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("start_cell blocked"),
                       ValidationError);
}

TEST_CASE("load_scenario: malformed and missing files") {
  CHECK_THROWS_AS(load_scenario("/tmp/definitely_missing_oros.json"), ParseError);
  std::string path = "/tmp/oros_bad.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_scenario(path), ParseError);
}

TEST_CASE("validation order and messages") {
  auto j = minimal_3x3();
  j["robots"][0]["initial_battery"] = 150;
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("initial_battery"),
                       ValidationError);
  j = minimal_3x3();
  j["mission"]["window_w"] = 9;
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("window_w"), ValidationError);
  j = minimal_3x3();
  j["stations"] = {{{"cell", {2, 2}}, {"charge_rate", 0.0}}};
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("charge_rate"), ValidationError);
}

TEST_CASE("neighbors: interior, corner and obstacle cases") {
  GridMap g;
  g.width_a = 3;
  g.height_b = 3;
  CHECK(neighbors(g, {2, 2}).size() == 9);  // Moore + stay
  CHECK(neighbors(g, {1, 1}).size() == 4);  // corner clipping

  GridMap g2 = g;
  g2.obstacles = {{1, 1}, {1, 2}, {1, 3}};
  auto n = neighbors(g2, {2, 2});
  // hand enumeration: all nine minus the three blocked left-column cells
  std::vector<Cell> expect = {{2, 1}, {3, 1}, {2, 2}, {3, 2}, {2, 3}, {3, 3}};
  std::sort(expect.begin(), expect.end());
  CHECK(n == expect);

  CHECK_THROWS_AS(neighbors(g, {0, 1}), std::out_of_range);
}

TEST_CASE("neighbors: 4-connected mode") {
  GridMap g;
  g.width_a = 3;
  g.height_b = 3;
  g.adjacency = Adjacency::VonNeumann;
  CHECK(neighbors(g, {2, 2}).size() == 5);
  CHECK(neighbors(g, {1, 1}).size() == 3);
}

TEST_CASE("neighbors: symmetry and self-membership properties") {
  std::mt19937 rng(20250809);
  for (int trial = 0; trial < 30; ++trial) {
    GridMap g;
    g.width_a = 1 + static_cast<int>(rng() % 5);
    g.height_b = 1 + static_cast<int>(rng() % 5);
    for (int b = 1; b <= g.height_b; ++b)
      for (int a = 1; a <= g.width_a; ++a)
        if (rng() % 4 == 0) g.obstacles.insert({a, b});
    for (int b = 1; b <= g.height_b; ++b)
      for (int a = 1; a <= g.width_a; ++a) {
        Cell c{a, b};
        auto nc = neighbors(g, c);
        bool self = std::find(nc.begin(), nc.end(), c) != nc.end();
        CHECK(self == !g.blocked(c));
        for (Cell d : nc) {
          if (g.blocked(c)) continue;
          auto nd = neighbors(g, d);
          CHECK(std::find(nd.begin(), nd.end(), c) != nd.end());
        }
      }
  }
}

TEST_CASE("save/load round trip is identity on the canonical form") {
  Scenario s = load_scenario(std::string(OROS_SOURCE_DIR) + "/scenarios/field_test_13x9.json");
  std::string path = "/tmp/oros_roundtrip.json";
  save_scenario(s, path);
  Scenario s2 = load_scenario(path);
  CHECK(scenario_to_json(s).dump() == scenario_to_json(s2).dump());
}

TEST_CASE("p_tx generator and table") {
  EnergyParams en;
  en.tx_gen = TxGenerator{1.0, 2.0, 1.0, {1, 1}};
  CHECK(en.p_tx({1, 1}) == doctest::Approx(1.0));
  CHECK(en.p_tx({4, 5}) == doctest::Approx(1.0 + 2.0 * 5.0));  // 3-4-5 triangle
  en.tx_table[{1, 1}] = 7.5;
  CHECK(en.p_tx({1, 1}) == doctest::Approx(7.5));
  CHECK_THROWS_AS(en.p_tx({2, 2}), ValidationError);
}
