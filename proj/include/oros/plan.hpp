#pragma once
#include <string>
#include <vector>

#include "oros/cell.hpp"

#include "json.hpp"

namespace oros {

struct RobotPlanStep {
  Cell cell{0, 0};
  bool charging{false};
  bool sensors_on{false};
  double battery_pred{0.0};
};

// Per-robot step assignments over one window; index t = 0 is the start state.
struct Plan {
  int window{0};
  std::vector<std::string> robot_ids;
  std::vector<std::vector<RobotPlanStep>> steps;  // [robot][0..window]
  bool fallback{false};

  nlohmann::ordered_json to_json() const;
};

}  // namespace oros
