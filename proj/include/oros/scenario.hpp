#pragma once
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oros/cell.hpp"

#include "json.hpp"

namespace oros {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Adjacency { Moore, VonNeumann };

struct GridMap {
  int width_a{1};   // columns, a in 1..width_a
  int height_b{1};  // rows,    b in 1..height_b
  double cell_w{1.0};
  double cell_h{1.0};
  CellSet obstacles;
  std::map<Cell, double> terrain;  // sparse; factor defaults to 1.0
  Adjacency adjacency{Adjacency::Moore};

  bool in_bounds(Cell c) const {
    return c.a >= 1 && c.a <= width_a && c.b >= 1 && c.b <= height_b;
  }
  bool blocked(Cell c) const { return obstacles.count(c) > 0; }
  bool free_cell(Cell c) const { return in_bounds(c) && !blocked(c); }
  double terrain_factor(Cell c) const {
    auto it = terrain.find(c);
    return it == terrain.end() ? 1.0 : it->second;
  }
  int cell_count() const { return width_a * height_b; }
  int free_count() const { return cell_count() - static_cast<int>(obstacles.size()); }
};

// In-bounds, non-obstacle cells with Chebyshev distance <= 1 (Moore) or
// Manhattan <= 1 (VonNeumann), including the cell itself when not blocked.
// Throws std::out_of_range for an out-of-bounds query cell.
std::vector<Cell> neighbors(const GridMap& grid, Cell c);

struct RobotSpec {
  std::string id;
  double battery_capacity{100.0};
  double initial_battery{100.0};
  Cell start{1, 1};
  std::vector<std::string> sensors;
};

struct ChargingStation {
  Cell cell{1, 1};
  double charge_rate{5.0};
};

// Distance-based transmit power: p_tx0 + kappa * d(cell, base)^gamma,
// Euclidean d in cell units.
struct TxGenerator {
  double p_tx0{1.0};
  double kappa{0.0};
  double gamma{1.0};
  Cell base_station{1, 1};
};

struct EnergyParams {
  double p_rx{0.5};
  double p_sen{2.0};
  double p_move_base{1.0};
  double p_move_diag_factor{std::sqrt(2.0)};
  double p_local{0.0};  // on-robot processing drain used by the SOA baseline
  std::optional<TxGenerator> tx_gen{TxGenerator{}};
  std::map<Cell, double> tx_table;  // when non-empty it wins over tx_gen

  double p_tx(Cell c) const;
};

enum class DynamicsVariant { A, B };

struct MissionParams {
  int horizon_t{10};
  int window_w{5};
  DynamicsVariant variant{DynamicsVariant::A};
  double lambda_explore{-1.0};  // < 0: default |R|*B_max + 1 (sum of capacities + 1)
  double lambda_battery{1.0};
  bool collision_exclusive{true};
  std::uint64_t seed{0};
};

struct Scenario {
  GridMap grid;
  std::vector<RobotSpec> robots;
  std::vector<ChargingStation> stations;
  EnergyParams energy;
  MissionParams mission;

  double lambda_explore_effective() const;
  const ChargingStation* station_at(Cell c) const;
  // All stations must share one rate for the planner model; returns it (0 if none).
  double uniform_charge_rate() const;
  void validate() const;  // throws ValidationError naming the first violation
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

}  // namespace oros
