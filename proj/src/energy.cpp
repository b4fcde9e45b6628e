#include "oros/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace oros {

double p_move(const EnergyParams& params, const GridMap& grid, Cell from, Cell to) {
  int d = chebyshev(from, to);
  if (d > 1)
    throw ValidationError("p_move: non-adjacent pair " + cell_str(from) + " -> " + cell_str(to));
  if (d == 0) return 0.0;
  bool diagonal = from.a != to.a && from.b != to.b;
  double base = params.p_move_base * (diagonal ? params.p_move_diag_factor : 1.0);
  return base * grid.terrain_factor(to);
}

namespace {

BatteryStep finish(BatteryState state, double raw, BatteryStep step) {
  step.raw = raw;
  if (raw < 0.0) {
    step.depleted = true;
    step.level = 0.0;
  } else if (raw > state.capacity) {
    step.clamp_loss = raw - state.capacity;
    step.level = state.capacity;
  } else {
    step.level = raw;
  }
  return step;
}

}  // namespace

BatteryStep battery_step_a(BatteryState state, bool charging, Cell from, Cell to,
                           bool dest_explored, double charge_rate,
                           const EnergyParams& params, const GridMap& grid) {
  BatteryStep step;
  double u = charging ? 1.0 : 0.0;
  step.gain_charge = charge_rate * u;
  step.drain_rx = params.p_rx * (1.0 - u);
  step.drain_move = p_move(params, grid, from, to);
  double fresh = dest_explored ? 0.0 : 1.0;
  step.drain_sen = params.p_sen * fresh;
  step.drain_tx = params.p_tx(to) * fresh;
  double raw = state.level + step.gain_charge - step.drain_rx - step.drain_move -
               step.drain_sen - step.drain_tx;
  return finish(state, raw, step);
}

BatteryStep battery_step_b(BatteryState state, bool charging, Cell from, Cell to,
                           double charge_rate, const EnergyParams& params,
                           const GridMap& grid) {
  BatteryStep step;
  double u = charging ? 1.0 : 0.0;
  double ptx = params.p_tx(to);
  step.gain_charge = (charge_rate + params.p_rx + params.p_sen + ptx) * u;
  step.drain_rx = params.p_rx;
  step.drain_sen = params.p_sen;
  step.drain_tx = ptx;
  step.drain_move = p_move(params, grid, from, to);
  double raw = state.level + step.gain_charge - step.drain_rx - step.drain_sen -
               step.drain_tx - step.drain_move;
  return finish(state, raw, step);
}

double remaining_movement_time(double capacity_wh, double device_power_w,
                               double hours_on, double locomotion_w) {
  double left = capacity_wh - device_power_w * hours_on;
  return std::max(0.0, left / locomotion_w);
}

FittedProfiles fit_device_profiles(const std::vector<ProfileAnchor>& anchors,
                                   std::optional<double> capacity_wh) {
  if (!capacity_wh)
    throw UnderdeterminedError(
        "underdetermined fit: capacity must be fixed (the model is scale-invariant)");
  double cap = *capacity_wh;

  // Unknowns: locomotion power, then one working power per device that has
  // an anchor with hours_on > 0. Each anchor gives the linear row
  //   remaining*P_loc + hours*P_dev = capacity.
  std::vector<std::string> devices;
  for (const auto& a : anchors) {
    if (a.hours_on <= 0.0) continue;
    if (std::find(devices.begin(), devices.end(), a.device) == devices.end())
      devices.push_back(a.device);
  }
  int unknowns = 1 + static_cast<int>(devices.size());
  int rows = static_cast<int>(anchors.size());
  if (rows < unknowns)
    throw UnderdeterminedError("underdetermined fit: " + std::to_string(rows) +
                               " anchors for " + std::to_string(unknowns) + " unknowns");

  std::vector<std::vector<double>> A(rows, std::vector<double>(unknowns, 0.0));
  std::vector<double> rhs(rows, cap);
  for (int i = 0; i < rows; ++i) {
    A[i][0] = anchors[i].remaining_hours;
    if (anchors[i].hours_on > 0.0) {
      auto it = std::find(devices.begin(), devices.end(), anchors[i].device);
      A[i][1 + (it - devices.begin())] = anchors[i].hours_on;
    }
  }

  // Normal equations, solved by Gaussian elimination with partial pivoting.
  std::vector<std::vector<double>> M(unknowns, std::vector<double>(unknowns + 1, 0.0));
  for (int i = 0; i < unknowns; ++i) {
    for (int k = 0; k < unknowns; ++k)
      for (int r = 0; r < rows; ++r) M[i][k] += A[r][i] * A[r][k];
    for (int r = 0; r < rows; ++r) M[i][unknowns] += A[r][i] * rhs[r];
  }
  for (int col = 0; col < unknowns; ++col) {
    int piv = col;
    for (int r = col + 1; r < unknowns; ++r)
      if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
    if (std::fabs(M[piv][col]) < 1e-12)
      throw UnderdeterminedError("underdetermined fit: rank-deficient anchor set");
    std::swap(M[col], M[piv]);
    for (int r = 0; r < unknowns; ++r) {
      if (r == col) continue;
      double f = M[r][col] / M[col][col];
      for (int k = col; k <= unknowns; ++k) M[r][k] -= f * M[col][k];
    }
  }

  FittedProfiles fit;
  fit.capacity_wh = cap;
  fit.locomotion_w = M[0][unknowns] / M[0][0];
  for (size_t d = 0; d < devices.size(); ++d)
    fit.device_working_w[devices[d]] = M[1 + d][unknowns] / M[1 + d][1 + d];
  if (fit.locomotion_w <= 0)
    throw UnderdeterminedError("fit produced non-positive locomotion power");

  double res2 = 0.0;
  for (int r = 0; r < rows; ++r) {
    double lhs = A[r][0] * fit.locomotion_w;
    for (size_t d = 0; d < devices.size(); ++d) lhs += A[r][1 + d] * fit.device_working_w[devices[d]];
    res2 += (lhs - cap) * (lhs - cap);
  }
  fit.residual = std::sqrt(res2);
  return fit;
}

const DevicePowerProfile* DeviceProfileFile::find(const std::string& name) const {
  for (const auto& d : devices)
    if (d.device == name) return &d;
  return nullptr;
}

void DeviceProfileFile::validate() const {
  if (capacity_wh <= 0 || locomotion_w <= 0)
    throw ValidationError("profile file: capacity_wh and locomotion_w must be > 0");
  for (const auto& d : devices) {
    if (d.p_idle < 0 || d.p_idle > d.p_started || d.p_started > d.p_working)
      throw ValidationError("profile '" + d.device +
                            "': power states must satisfy idle <= started <= working");
  }
}

DeviceProfileFile load_device_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed profile file '" + path + "': " + e.what());
  }
  DeviceProfileFile p;
  p.capacity_wh = j.at("capacity_wh").get<double>();
  p.locomotion_w = j.at("locomotion_w").get<double>();
  for (const auto& [name, jd] : j.at("devices").items()) {
    DevicePowerProfile d;
    d.device = name;
    d.p_idle = jd.at("idle").get<double>();
    d.p_started = jd.at("started").get<double>();
    d.p_working = jd.at("working").get<double>();
    p.devices.push_back(d);
  }
  std::sort(p.devices.begin(), p.devices.end(),
            [](const auto& x, const auto& y) { return x.device < y.device; });
  p.validate();
  return p;
}

void save_device_profiles(const DeviceProfileFile& p, const std::string& path) {
  nlohmann::ordered_json j;
  j["capacity_wh"] = p.capacity_wh;
  j["locomotion_w"] = p.locomotion_w;
  auto devs = p.devices;
  std::sort(devs.begin(), devs.end(),
            [](const auto& x, const auto& y) { return x.device < y.device; });
  for (const auto& d : devs)
    j["devices"][d.device] = {{"idle", d.p_idle}, {"started", d.p_started}, {"working", d.p_working}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<ProfileAnchor> default_anchors(std::optional<double>* capacity_out) {
  if (capacity_out) *capacity_out = 55.0;  // laptop battery, 4-cell
  return {
      {"baseline", 0.0, 3.635},  // midpoint of the short-operation 3.41..3.86 h band
      {"object_detection", 8.0, 0.0},
      {"lidar", 10.0, 2.21},
      {"camera", 10.0, 1.94},
      {"hat5g", 10.0, 3.30},
      {"drivers", 10.0, 3.10},
  };
}

std::vector<ProfileAnchor> load_anchors(const std::string& path,
                                        std::optional<double>* capacity_out) {
  std::ifstream in(path);
  if (!in) throw ParseError("file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed anchors file '" + path + "': " + e.what());
  }
  if (capacity_out) {
    if (j.contains("capacity_wh")) *capacity_out = j["capacity_wh"].get<double>();
    else capacity_out->reset();
  }
  std::vector<ProfileAnchor> anchors;
  for (const auto& ja : j.at("anchors")) {
    ProfileAnchor a;
    a.device = ja.at("device").get<std::string>();
    a.hours_on = ja.at("hours_on").get<double>();
    a.remaining_hours = ja.at("remaining_hours").get<double>();
    anchors.push_back(a);
  }
  return anchors;
}

}  // namespace oros
