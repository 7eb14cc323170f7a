#include <doctest.h>

#include <cmath>

#include "telekinesis/config.hpp"
#include "telekinesis/rng.hpp"
#include "telekinesis/thermal.hpp"

using namespace tk;
using namespace tk::thermal;

TEST_CASE("setpoint is baseline plus offset, capped") {
  const ControlParams p;
  CHECK(ThermalController::make(Site::kForearm, 32.0, p).setpoint == doctest::Approx(34.0));
  CHECK(ThermalController::make(Site::kPalm, 39.0, p).setpoint == doctest::Approx(40.0));
  CHECK(ThermalController::make(Site::kForehead, 41.0, p).setpoint == doctest::Approx(40.0));
}

TEST_CASE("controller switches with hysteresis") {
  const ControlParams p;
  auto c = ThermalController::make(Site::kForearm, 32.0, p);
  bool on = false;
  std::tie(c, on) = controller_step(c, 32.0, true, p);
  CHECK(on);
  std::tie(c, on) = controller_step(c, 34.1, true, p);
  CHECK(on);  // inside the band: keep state
  std::tie(c, on) = controller_step(c, 34.25, true, p);
  CHECK_FALSE(on);
  std::tie(c, on) = controller_step(c, 33.9, true, p);
  CHECK_FALSE(on);  // inside the band again
  std::tie(c, on) = controller_step(c, 33.7, true, p);
  CHECK(on);
  std::tie(c, on) = controller_step(c, 33.0, false, p);
  CHECK_FALSE(on);
}

TEST_CASE("controller is off at or above the cap") {
  const ControlParams p;
  auto c = ThermalController::make(Site::kPalm, 39.0, p);
  c.heater_on = true;
  CHECK_FALSE(controller_step(c, 40.2, true, p).second);
  CHECK_FALSE(controller_step(c, 40.0, true, p).second);
  CHECK(controller_step(c, 39.0, true, p).second);
}

TEST_CASE("plant fixed point and asymptote") {
  ThermalPlant plant{32.0, 32.0, 8.0, 20.0, 12.0};
  CHECK(plant_step(plant, false, 0.5).temp == 32.0);
  auto hot = plant;
  for (int i = 0; i < 90 * 200; ++i) hot = plant_step(hot, true, 1.0 / 90.0);
  CHECK(hot.temp == doctest::Approx(44.0).epsilon(1e-6));
  for (int i = 0; i < 90 * 600; ++i) hot = plant_step(hot, false, 1.0 / 90.0);
  CHECK(hot.temp == doctest::Approx(32.0).epsilon(1e-6));
}

TEST_CASE("plant single step") {
  const ThermalPlant plant{32.0, 32.0, 10.0, 20.0, 12.0};
  CHECK(plant_step(plant, true, 1.0).temp == doctest::Approx(32.0 + 12.0 * (1.0 - std::exp(-0.1))));
  CHECK(plant_step(plant, true, 1.0).temp == doctest::Approx(33.142).epsilon(1e-4));
}

TEST_CASE("closed loop never exceeds the cap and settles near the setpoint") {
  EngineConfig cfg;
  const auto p = control_params_from(cfg);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const double base = rng.uniform(30.0, 39.5);
    auto c = ThermalController::make(Site::kForearm, base, p);
    ThermalPlant plant{base, base, cfg.plant.tau_heat, cfg.plant.tau_cool, cfg.plant.heater_gain};
    double worst = -1e9;
    for (int n = 0; n < 90 * 120; ++n) {
      bool on = false;
      std::tie(c, on) = controller_step(c, plant.temp, true, p);
      plant = plant_step(plant, on, 1.0 / 90.0);
      CHECK(plant.temp <= p.temp_cap + 0.2);
      if (n > 90 * 60) worst = std::max(worst, std::abs(plant.temp - c.setpoint));
    }
    CHECK(worst < 0.5);
  }
}
