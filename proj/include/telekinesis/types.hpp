#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "telekinesis/vec3.hpp"

namespace tk {

enum class Site { kForearm = 0, kForehead = 1, kPalm = 2 };

inline constexpr std::array<Site, 3> kAllSites = {Site::kForearm, Site::kForehead, Site::kPalm};

constexpr std::string_view site_name(Site s) {
  switch (s) {
    case Site::kForearm:
      return "forearm";
    case Site::kForehead:
      return "forehead";
    case Site::kPalm:
      return "palm";
  }
  return "?";
}

// Per-site skin temperature in degrees Celsius, indexed by Site.
struct SkinTemps {
  std::array<double, 3> celsius{32.0, 34.0, 33.0};

  double& operator[](Site s) { return celsius[static_cast<std::size_t>(s)]; }
  double operator[](Site s) const { return celsius[static_cast<std::size_t>(s)]; }

  friend bool operator==(const SkinTemps&, const SkinTemps&) = default;
};

// One tick worth of tracker, eye, EMG and thermistor readings.
struct SensorFrame {
  double t = 0.0;  // seconds
  Vec3 hand_pos;
  Vec3 palm_normal{0.0, 0.0, 1.0};
  double hand_openness = 0.0;
  Vec3 gaze_origin;
  Vec3 gaze_dir{0.0, 0.0, 1.0};
  double eye_openness = 1.0;
  std::vector<double> emg_batch;  // millivolts
  SkinTemps skin_temp;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

// One cell of the 2x2x2 design.
struct FactorCondition {
  bool concentration = false;
  bool strain = false;
  bool energy = false;

  int enabled_count() const { return int(concentration) + int(strain) + int(energy); }

  // Index 0..7 with concentration as the high bit.
  int index() const { return (int(concentration) << 2) | (int(strain) << 1) | int(energy); }
  static FactorCondition from_index(int i) { return {(i & 4) != 0, (i & 2) != 0, (i & 1) != 0}; }

  friend bool operator==(const FactorCondition&, const FactorCondition&) = default;
};

inline constexpr int kConditionCount = 8;

// Axis-aligned block.
struct ObjectState {
  std::string id;
  Vec3 position;
  Vec3 half_extent{0.05, 0.05, 0.05};
  bool selected = false;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

}  // namespace tk
