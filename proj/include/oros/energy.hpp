#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oros/scenario.hpp"

namespace oros {

struct BatteryState {
  double level{0.0};
  double capacity{0.0};
};

// One battery transition. `raw` is the unclamped next level; `level` is
// clamped to [0, capacity]. A step that would go below zero sets `depleted`.
struct BatteryStep {
  double raw{0.0};
  double level{0.0};
  bool depleted{false};
  double drain_move{0.0}, drain_tx{0.0}, drain_rx{0.0}, drain_sen{0.0};
  double gain_charge{0.0};
  double clamp_loss{0.0};  // charge discarded at the capacity bound
};

// Movement cost: 0 for stay, base*terrain(to) orthogonal, base*diag*terrain(to)
// diagonal. Throws ValidationError for a non-adjacent pair.
double p_move(const EnergyParams& params, const GridMap& grid, Cell from, Cell to);

// Variant A step (sensing/transmit paid at the destination when it was
// unexplored before arrival; charging adds CR and waives the receive cost).
BatteryStep battery_step_a(BatteryState state, bool charging, Cell from, Cell to,
                           bool dest_explored, double charge_rate,
                           const EnergyParams& params, const GridMap& grid);

// Variant B step (receive/sensing/transmit always paid unless charging).
BatteryStep battery_step_b(BatteryState state, bool charging, Cell from, Cell to,
                           double charge_rate, const EnergyParams& params,
                           const GridMap& grid);

// Hours of locomotion left after running one device for `hours_on` hours.
double remaining_movement_time(double capacity_wh, double device_power_w,
                               double hours_on, double locomotion_w);

struct DevicePowerProfile {
  std::string device;
  double p_idle{0.0};
  double p_started{0.0};
  double p_working{0.0};
};

struct ProfileAnchor {
  std::string device;  // empty/"baseline" pins only the locomotion power
  double hours_on{0.0};
  double remaining_hours{0.0};
};

struct UnderdeterminedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FittedProfiles {
  double capacity_wh{0.0};
  double locomotion_w{0.0};
  std::map<std::string, double> device_working_w;
  double residual{0.0};  // least-squares residual norm
};

// Least-squares fit of the remaining-movement-time model to the anchors.
// capacity_wh must be supplied (the model is scale-invariant without it);
// throws UnderdeterminedError when the anchor set cannot pin every unknown.
FittedProfiles fit_device_profiles(const std::vector<ProfileAnchor>& anchors,
                                   std::optional<double> capacity_wh);

// profiles/devices.json: per-device idle/started/working watts plus the
// shared capacity and locomotion power.
struct DeviceProfileFile {
  double capacity_wh{0.0};
  double locomotion_w{0.0};
  std::vector<DevicePowerProfile> devices;

  const DevicePowerProfile* find(const std::string& name) const;
  void validate() const;  // monotone idle <= started <= working
};

DeviceProfileFile load_device_profiles(const std::string& path);
void save_device_profiles(const DeviceProfileFile& p, const std::string& path);

std::vector<ProfileAnchor> load_anchors(const std::string& path,
                                        std::optional<double>* capacity_out);
// Anchors quoted from the measured heatmap; capacity 55 Wh.
std::vector<ProfileAnchor> default_anchors(std::optional<double>* capacity_out);

}  // namespace oros
