#include "telekinesis/thermal.hpp"

#include <algorithm>
#include <cmath>

#include "telekinesis/config.hpp"

namespace tk::thermal {

ControlParams control_params_from(const EngineConfig& cfg) {
  return {cfg.temp_offset, cfg.temp_cap, cfg.temp_hysteresis};
}

ThermalController ThermalController::make(Site site, double baseline, const ControlParams& p) {
  return {site, baseline, std::min(baseline + p.temp_offset, p.temp_cap), false};
}

std::pair<ThermalController, bool> controller_step(ThermalController ctrl, double measured, bool stimulate,
                                                   const ControlParams& p) {
  if (!stimulate || measured >= p.temp_cap) {
    ctrl.heater_on = false;
  } else if (measured < ctrl.setpoint - p.temp_hysteresis) {
    ctrl.heater_on = true;
  } else if (measured > ctrl.setpoint + p.temp_hysteresis) {
    ctrl.heater_on = false;
  }
  return {ctrl, ctrl.heater_on};
}

ThermalPlant plant_step(ThermalPlant plant, bool heater_on, double dt) {
  const double target = plant.ambient + (heater_on ? plant.heater_gain : 0.0);
  const double tau = heater_on ? plant.tau_heat : plant.tau_cool;
  plant.temp = target + (plant.temp - target) * std::exp(-dt / tau);
  return plant;
}

}  // namespace tk::thermal
