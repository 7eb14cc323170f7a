#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/biosignal.hpp"
#include "telekinesis/config.hpp"
#include "telekinesis/engine.hpp"
#include "telekinesis/operator.hpp"
#include "telekinesis/types.hpp"

namespace tk::bridge {

// Latest live input from the client. Hand deltas are integrated as they
// arrive; everything else is a level held until the next input message.
struct LiveInput {
  Vec3 hand = synth::kHandHome;
  double openness = synth::kHandClosed;
  double strain = 0.0;
  Vec3 gaze_point{0.0, 1.6, 1.0};  // straight ahead, above the table
  bool blink_pending = false;
};

struct SessionOptions {
  EngineConfig base_config;
  std::uint64_t default_seed = 1;
  // Where recordings go; each configure/reset cycle gets its own directory.
  std::optional<std::filesystem::path> record_dir;
};

// Engine-owning adapter behind one socket connection. It turns client text
// frames into state changes, synthesizes one SensorFrame per tick from the
// latest input and emits snapshot / task_event / error messages. It holds no
// interaction logic: the recorded frames replay to the same snapshots.
class Session {
 public:
  explicit Session(SessionOptions options = {});

  // Handles one client message and returns the replies. A malformed message
  // yields an error and marks the session closed.
  std::vector<std::string> handle(std::string_view text);

  // Advances the engine by one tick when configured; returns the messages to
  // send (a snapshot unless decimated, plus any task events).
  std::vector<std::string> tick();

  bool configured() const { return engine_.has_value(); }
  bool closed() const { return closed_; }
  double tick_period() const { return config_.tick_period(); }

  const EngineConfig& config() const { return config_; }
  const FactorCondition& condition() const { return condition_; }
  const std::optional<bio::Calibration>& calibration() const { return calibration_; }
  const std::vector<SensorFrame>& frames() const { return frames_; }
  const LiveInput& input() const { return input_; }
  const Engine* engine() const { return engine_ ? &*engine_ : nullptr; }
  std::size_t snapshot_stride() const { return stride_; }

  // Synthesizes the frame for the next tick without advancing anything.
  SensorFrame next_frame() const;

  // Writes trace.jsonl, calibration.json, config.json and manifest.json.
  void write_recording(const std::filesystem::path& dir) const;

  // Flushes the current recording (if any frames were produced) into the
  // next numbered directory under record_dir. Returns that directory.
  std::optional<std::filesystem::path> flush_recording();

 private:
  std::vector<std::string> configure(const nlohmann::json& msg);
  std::vector<std::string> apply_input(const nlohmann::json& msg);
  void restart();

  SessionOptions options_;
  EngineConfig config_;
  FactorCondition condition_;
  std::optional<bio::Calibration> calibration_;
  std::uint64_t seed_ = 1;
  std::size_t stride_ = 1;

  std::optional<Engine> engine_;
  std::optional<synth::EmgSynth> emg_;
  std::optional<synth::EyeSynth> eye_;
  LiveInput input_;
  std::vector<SensorFrame> frames_;
  std::uint64_t tick_ = 0;
  bool completed_sent_ = false;
  bool closed_ = false;
  std::size_t recordings_ = 0;
};

// EMG extrema from a synthesized rest pass followed by a full-strain pass.
bio::EmgCalibration live_emg_calibration(const EngineConfig& cfg, std::uint64_t seed);

// Calibration used when the client sends none: a 3 s resting blink mean.
bio::Calibration live_calibration(const EngineConfig& cfg, std::uint64_t seed);

std::string error_message(std::string_view text);

}  // namespace tk::bridge
