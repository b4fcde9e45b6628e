#include "oros/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace oros {

std::vector<Cell> neighbors(const GridMap& grid, Cell c) {
  if (!grid.in_bounds(c))
    throw std::out_of_range("neighbors: cell " + cell_str(c) + " out of bounds");
  std::vector<Cell> out;
  out.reserve(9);
  for (int db = -1; db <= 1; ++db) {
    for (int da = -1; da <= 1; ++da) {
      if (grid.adjacency == Adjacency::VonNeumann && da != 0 && db != 0) continue;
      Cell n{c.a + da, c.b + db};
      if (grid.free_cell(n)) out.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double EnergyParams::p_tx(Cell c) const {
  if (!tx_table.empty()) {
    auto it = tx_table.find(c);
    if (it != tx_table.end()) return it->second;
    throw ValidationError("p_tx_table missing cell " + cell_str(c));
  }
  if (!tx_gen) return 0.0;
  double dx = static_cast<double>(c.a - tx_gen->base_station.a);
  double dy = static_cast<double>(c.b - tx_gen->base_station.b);
  double d = std::sqrt(dx * dx + dy * dy);
  return tx_gen->p_tx0 + tx_gen->kappa * std::pow(d, tx_gen->gamma);
}

double Scenario::lambda_explore_effective() const {
  if (mission.lambda_explore >= 0.0) return mission.lambda_explore;
  double caps = 0.0;
  for (const auto& r : robots) caps += r.battery_capacity;
  return caps + 1.0;
}

const ChargingStation* Scenario::station_at(Cell c) const {
  for (const auto& s : stations)
    if (s.cell == c) return &s;
  return nullptr;
}

double Scenario::uniform_charge_rate() const {
  return stations.empty() ? 0.0 : stations.front().charge_rate;
}

void Scenario::validate() const {
  if (grid.width_a < 1 || grid.height_b < 1)
    throw ValidationError("grid dimensions must be >= 1");
  if (grid.cell_w <= 0 || grid.cell_h <= 0)
    throw ValidationError("cell_size must be positive");
  for (Cell c : grid.obstacles)
    if (!grid.in_bounds(c))
      throw ValidationError("obstacle " + cell_str(c) + " out of bounds");
  for (const auto& [c, f] : grid.terrain) {
    if (!grid.in_bounds(c))
      throw ValidationError("terrain cell " + cell_str(c) + " out of bounds");
    if (f <= 0.0)
      throw ValidationError("terrain factor at " + cell_str(c) + " must be > 0");
  }

  if (robots.empty()) throw ValidationError("at least one robot required");
  std::set<std::string> ids;
  for (const auto& r : robots) {
    if (r.id.empty()) throw ValidationError("robot id must be non-empty");
    if (!ids.insert(r.id).second)
      throw ValidationError("duplicate robot id '" + r.id + "'");
    if (r.battery_capacity <= 0)
      throw ValidationError("robot '" + r.id + "': battery_capacity must be > 0");
    if (r.initial_battery < 0 || r.initial_battery > r.battery_capacity)
      throw ValidationError("robot '" + r.id +
                            "': initial_battery outside [0, battery_capacity]");
    if (!grid.in_bounds(r.start))
      throw ValidationError("robot '" + r.id + "': start_cell out of bounds");
    if (grid.blocked(r.start))
      throw ValidationError("robot '" + r.id + "': start_cell blocked");
  }

  for (const auto& s : stations) {
    if (!grid.in_bounds(s.cell))
      throw ValidationError("station " + cell_str(s.cell) + " out of bounds");
    if (grid.blocked(s.cell))
      throw ValidationError("station " + cell_str(s.cell) + " on obstacle");
    if (s.charge_rate <= 0)
      throw ValidationError("station " + cell_str(s.cell) + ": charge_rate must be > 0");
  }

  if (energy.p_rx < 0 || energy.p_sen < 0 || energy.p_move_base < 0 || energy.p_local < 0)
    throw ValidationError("energy powers must be >= 0");
  if (energy.p_move_diag_factor <= 0)
    throw ValidationError("p_move_diag_factor must be > 0");
  if (!energy.tx_table.empty()) {
    for (int b = 1; b <= grid.height_b; ++b)
      for (int a = 1; a <= grid.width_a; ++a) {
        Cell c{a, b};
        if (!grid.blocked(c) && !energy.tx_table.count(c))
          throw ValidationError("p_tx_table missing non-obstacle cell " + cell_str(c));
      }
    for (const auto& [c, v] : energy.tx_table)
      if (v < 0) throw ValidationError("p_tx_table value at " + cell_str(c) + " must be >= 0");
  } else if (energy.tx_gen) {
    if (energy.tx_gen->p_tx0 < 0 || energy.tx_gen->kappa < 0)
      throw ValidationError("p_tx generator parameters must be >= 0");
    if (!grid.in_bounds(energy.tx_gen->base_station))
      throw ValidationError("base_station out of bounds");
  }

  if (mission.horizon_t < 1) throw ValidationError("horizon_t must be >= 1");
  if (mission.window_w < 1 || mission.window_w > mission.horizon_t)
    throw ValidationError("window_w outside [1, horizon_t]");
  if (mission.lambda_battery < 0)
    throw ValidationError("objective weights must be >= 0");
  if (mission.lambda_explore >= 0.0 && mission.lambda_explore == 0 && mission.lambda_battery == 0)
    throw ValidationError("objective weights must not both be zero");
}

namespace {

Cell cell_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ParseError(std::string(what) + ": expected [a,b] integer pair");
  return Cell{j[0].get<int>(), j[1].get<int>()};
}

nlohmann::ordered_json cell_to_json(Cell c) { return nlohmann::ordered_json::array({c.a, c.b}); }

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  try {
    const auto& jg = j.at("grid");
    s.grid.width_a = jg.at("width").get<int>();
    s.grid.height_b = jg.at("height").get<int>();
    if (jg.contains("cell_size")) {
      s.grid.cell_w = jg["cell_size"][0].get<double>();
      s.grid.cell_h = jg["cell_size"][1].get<double>();
    }
    if (jg.contains("obstacles"))
      for (const auto& o : jg["obstacles"]) s.grid.obstacles.insert(cell_from_json(o, "obstacle"));
    if (jg.contains("terrain"))
      for (const auto& t : jg["terrain"]) {
        if (!t.is_array() || t.size() != 3) throw ParseError("terrain: expected [a,b,factor]");
        s.grid.terrain[Cell{t[0].get<int>(), t[1].get<int>()}] = t[2].get<double>();
      }
    if (jg.contains("adjacency")) {
      std::string adj = jg["adjacency"].get<std::string>();
      if (adj == "moore") s.grid.adjacency = Adjacency::Moore;
      else if (adj == "von_neumann") s.grid.adjacency = Adjacency::VonNeumann;
      else throw ParseError("adjacency must be 'moore' or 'von_neumann'");
    }

    for (const auto& jr : j.at("robots")) {
      RobotSpec r;
      r.id = jr.at("id").get<std::string>();
      r.battery_capacity = jr.at("battery_capacity").get<double>();
      r.initial_battery = jr.at("initial_battery").get<double>();
      r.start = cell_from_json(jr.at("start"), "robot start");
      if (jr.contains("sensors"))
        for (const auto& sn : jr["sensors"]) r.sensors.push_back(sn.get<std::string>());
      s.robots.push_back(std::move(r));
    }

    if (j.contains("stations"))
      for (const auto& js : j["stations"]) {
        ChargingStation st;
        st.cell = cell_from_json(js.at("cell"), "station cell");
        st.charge_rate = js.at("charge_rate").get<double>();
        s.stations.push_back(st);
      }

    if (j.contains("energy")) {
      const auto& je = j["energy"];
      if (je.contains("p_rx")) s.energy.p_rx = je["p_rx"].get<double>();
      if (je.contains("p_sen")) s.energy.p_sen = je["p_sen"].get<double>();
      if (je.contains("p_move_base")) s.energy.p_move_base = je["p_move_base"].get<double>();
      if (je.contains("p_move_diag_factor"))
        s.energy.p_move_diag_factor = je["p_move_diag_factor"].get<double>();
      if (je.contains("p_local")) s.energy.p_local = je["p_local"].get<double>();
      if (je.contains("p_tx_table")) {
        s.energy.tx_gen.reset();
        for (const auto& t : je["p_tx_table"]) {
          if (!t.is_array() || t.size() != 3) throw ParseError("p_tx_table: expected [a,b,value]");
          s.energy.tx_table[Cell{t[0].get<int>(), t[1].get<int>()}] = t[2].get<double>();
        }
      } else if (je.contains("p_tx")) {
        TxGenerator g;
        const auto& jt = je["p_tx"];
        if (jt.contains("p_tx0")) g.p_tx0 = jt["p_tx0"].get<double>();
        if (jt.contains("kappa")) g.kappa = jt["kappa"].get<double>();
        if (jt.contains("gamma")) g.gamma = jt["gamma"].get<double>();
        if (jt.contains("base_station")) g.base_station = cell_from_json(jt["base_station"], "base_station");
        s.energy.tx_gen = g;
      }
    }

    const auto& jm = j.at("mission");
    s.mission.horizon_t = jm.at("horizon_t").get<int>();
    if (jm.contains("window_w")) s.mission.window_w = jm["window_w"].get<int>();
    if (jm.contains("dynamics_variant")) {
      std::string v = jm["dynamics_variant"].get<std::string>();
      if (v == "A") s.mission.variant = DynamicsVariant::A;
      else if (v == "B") s.mission.variant = DynamicsVariant::B;
      else throw ParseError("dynamics_variant must be 'A' or 'B'");
    }
    if (jm.contains("objective_weights")) {
      s.mission.lambda_explore = jm["objective_weights"][0].get<double>();
      s.mission.lambda_battery = jm["objective_weights"][1].get<double>();
    }
    if (jm.contains("collision_exclusive"))
      s.mission.collision_exclusive = jm["collision_exclusive"].get<bool>();
    if (jm.contains("seed")) s.mission.seed = jm["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  auto& jg = j["grid"];
  jg["width"] = s.grid.width_a;
  jg["height"] = s.grid.height_b;
  jg["cell_size"] = {s.grid.cell_w, s.grid.cell_h};
  jg["obstacles"] = nlohmann::ordered_json::array();
  for (Cell c : s.grid.obstacles) jg["obstacles"].push_back(cell_to_json(c));
  jg["terrain"] = nlohmann::ordered_json::array();
  for (const auto& [c, f] : s.grid.terrain) jg["terrain"].push_back({c.a, c.b, f});
  jg["adjacency"] = s.grid.adjacency == Adjacency::Moore ? "moore" : "von_neumann";

  j["robots"] = nlohmann::ordered_json::array();
  for (const auto& r : s.robots) {
    nlohmann::ordered_json jr;
    jr["id"] = r.id;
    jr["battery_capacity"] = r.battery_capacity;
    jr["initial_battery"] = r.initial_battery;
    jr["start"] = cell_to_json(r.start);
    jr["sensors"] = r.sensors;
    j["robots"].push_back(jr);
  }

  j["stations"] = nlohmann::ordered_json::array();
  for (const auto& st : s.stations)
    j["stations"].push_back({{"cell", cell_to_json(st.cell)}, {"charge_rate", st.charge_rate}});

  auto& je = j["energy"];
  je["p_rx"] = s.energy.p_rx;
  je["p_sen"] = s.energy.p_sen;
  je["p_move_base"] = s.energy.p_move_base;
  je["p_move_diag_factor"] = s.energy.p_move_diag_factor;
  je["p_local"] = s.energy.p_local;
  if (!s.energy.tx_table.empty()) {
    je["p_tx_table"] = nlohmann::ordered_json::array();
    for (const auto& [c, v] : s.energy.tx_table) je["p_tx_table"].push_back({c.a, c.b, v});
  } else if (s.energy.tx_gen) {
    const auto& g = *s.energy.tx_gen;
    je["p_tx"] = {{"p_tx0", g.p_tx0},
                  {"kappa", g.kappa},
                  {"gamma", g.gamma},
                  {"base_station", cell_to_json(g.base_station)}};
  }

  auto& jm = j["mission"];
  jm["horizon_t"] = s.mission.horizon_t;
  jm["window_w"] = s.mission.window_w;
  jm["dynamics_variant"] = s.mission.variant == DynamicsVariant::A ? "A" : "B";
  if (s.mission.lambda_explore >= 0)
    jm["objective_weights"] = {s.mission.lambda_explore, s.mission.lambda_battery};
  jm["collision_exclusive"] = s.mission.collision_exclusive;
  jm["seed"] = s.mission.seed;
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed scenario file '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << scenario_to_json(s).dump(2) << "\n";
}

}  // namespace oros
