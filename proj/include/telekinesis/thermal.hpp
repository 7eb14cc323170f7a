#pragma once

#include <utility>

#include "telekinesis/types.hpp"

namespace tk {

struct EngineConfig;

namespace thermal {

struct ControlParams {
  double temp_offset = 2.0;
  double temp_cap = 40.0;
  double temp_hysteresis = 0.2;
};

ControlParams control_params_from(const EngineConfig& cfg);

// Bang-bang heater controller holding skin at baseline + offset, never above the cap.
struct ThermalController {
  Site site = Site::kForearm;
  double baseline = 32.0;
  double setpoint = 34.0;
  bool heater_on = false;

  static ThermalController make(Site site, double baseline, const ControlParams& p);
};

// Returns the updated controller and the heater command for this tick.
std::pair<ThermalController, bool> controller_step(ThermalController ctrl, double measured, bool stimulate,
                                                   const ControlParams& p);

// First-order skin/heater model.
struct ThermalPlant {
  double temp = 32.0;
  double ambient = 32.0;
  double tau_heat = 8.0;
  double tau_cool = 20.0;
  double heater_gain = 12.0;
};

ThermalPlant plant_step(ThermalPlant plant, bool heater_on, double dt);

}  // namespace thermal
}  // namespace tk
