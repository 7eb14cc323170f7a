#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/types.hpp"
#include "telekinesis/vec3.hpp"

namespace tk {

// Heater/skin model used in place of real film heaters and thermistors.
struct PlantConfig {
  double heater_gain = 12.0;  // degC above ambient at saturation
  double tau_heat = 8.0;      // s
  double tau_cool = 20.0;     // s

  friend bool operator==(const PlantConfig&, const PlantConfig&) = default;
};

struct BlockSpec {
  std::string id;
  Vec3 position;
  Vec3 half_extent{0.05, 0.05, 0.05};

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

// Table layout for the stacking task. Slot i sits at target_base plus the
// stacked heights of the blocks below it.
struct TaskLayout {
  std::vector<BlockSpec> blocks{
      {"red", {-0.35, 0.85, 1.10}, {0.05, 0.05, 0.05}},
      {"green", {0.35, 0.85, 1.10}, {0.05, 0.05, 0.05}},
      {"blue", {0.00, 0.85, 0.85}, {0.05, 0.05, 0.05}},
  };
  Vec3 target_base{0.0, 0.85, 1.30};
  std::vector<std::string> required_order{"green", "blue", "red"};

  friend bool operator==(const TaskLayout&, const TaskLayout&) = default;
};

struct EngineConfig {
  // Object-follow law.
  double k = 1.0;        // sensitivity
  double sim_th = 0.7;   // direction similarity threshold on the dot product
  double m_th = 0.002;   // m/tick, below this the hand counts as still

  // Gates.
  double F_th = 0.5;
  double openness_th = 0.7;
  double gaze_half_angle = 5.0;  // degrees
  double selection_hold = 0.25;  // s a selection survives an inactive gate

  // Sampling.
  double tick_rate = 90.0;   // Hz
  double emg_rate = 2000.0;  // Hz
  double dc_window = 1.0;    // s of raw EMG averaged for the DC estimate

  // Blinks and concentration.
  double blink_close_th = 0.3;
  double blink_open_th = 0.6;
  double c_multiplier = 1.67;
  int window_blinks = 5;
  double gaze_reset = 1.0;  // s off target before the interval ring is cleared

  // Thermal stimulation.
  double temp_offset = 2.0;  // degC above baseline
  double temp_cap = 40.0;    // degC
  double temp_hysteresis = 0.2;

  double snap_tolerance = 0.05;  // m

  PlantConfig plant;
  TaskLayout task;

  double tick_period() const { return 1.0 / tick_rate; }

  // Number of EMG samples carried by the frame at index `tick`. Batches of
  // floor(R/T) and ceil(R/T) interleave so exactly R samples span each second.
  std::size_t emg_batch_length(std::size_t tick) const;

  std::size_t dc_window_samples() const;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

// Throws ValidationError naming the first violated invariant.
void validate(const EngineConfig& cfg);

nlohmann::ordered_json to_json(const EngineConfig& cfg);

// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig config_from_json(const nlohmann::json& j);

EngineConfig load_config(const std::filesystem::path& path);
void save_config(const EngineConfig& cfg, const std::filesystem::path& path);

}  // namespace tk
