#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "telekinesis/config.hpp"
#include "telekinesis/types.hpp"

namespace testing {

// Fresh empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(TK_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// A well-formed frame for tick n with a flat EMG batch.
inline tk::SensorFrame plain_frame(const tk::EngineConfig& cfg, std::size_t n) {
  tk::SensorFrame f;
  f.t = static_cast<double>(n) * cfg.tick_period();
  f.hand_pos = {0.0, 1.25, 0.45};
  f.gaze_origin = {0.0, 1.6, 0.0};
  f.eye_openness = 0.9;
  f.emg_batch.assign(cfg.emg_batch_length(n), 1.5);
  return f;
}

}  // namespace testing
