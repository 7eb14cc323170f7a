#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/biosignal.hpp"
#include "telekinesis/config.hpp"
#include "telekinesis/manipulation.hpp"
#include "telekinesis/thermal.hpp"
#include "telekinesis/types.hpp"

namespace tk {

// ---------------------------------------------------------------------------
// Gate
// ---------------------------------------------------------------------------

// Raw per-tick cues before the condition is applied.
struct GateInputs {
  bool gaze_on = false;      // gaze rests on some steerable block
  bool palm_on = false;      // palm faces the block under gaze
  bool hand_open = false;
  bool concentrated = false;
  bool strained = false;
};

// Per-conjunct view of the gate. Disabled factors report true.
struct TelekinesisGate {
  bool gaze_ok = false;
  bool palm_ok = false;
  bool open_ok = false;
  bool conc_ok = false;
  bool strain_ok = false;
  bool active = false;

  friend bool operator==(const TelekinesisGate&, const TelekinesisGate&) = default;
};

TelekinesisGate gate_step(const GateInputs& in, const FactorCondition& condition);

// Among the candidates the gaze rests on and the palm faces, the one with the
// smallest angle off the gaze ray. Returns an index into `objects`.
std::optional<std::size_t> select_target(const Vec3& gaze_origin, const Vec3& gaze_dir, const Vec3& palm_normal,
                                         const Vec3& hand_pos, std::span<const ObjectState> objects,
                                         double gaze_half_angle_deg);

bool palm_faces(const Vec3& palm_normal, const Vec3& hand_pos, const Vec3& object_pos);

// ---------------------------------------------------------------------------
// Stacking task
// ---------------------------------------------------------------------------

struct TaskState {
  std::vector<ObjectState> blocks;
  Vec3 target_base;
  std::vector<std::string> required_order;
  std::vector<std::string> stacked;  // always a prefix of required_order
  bool complete = false;
  double elapsed = 0.0;
  std::optional<double> completion_time;

  static TaskState from_layout(const TaskLayout& layout);

  bool is_stacked(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  // Centre of the next free slot; nullopt once complete.
  std::optional<Vec3> next_slot() const;
  std::optional<std::string> next_required() const;
  Vec3 slot_center(std::size_t level) const;

  friend bool operator==(const TaskState&, const TaskState&) = default;
};

struct SnapEvent {
  std::string id;
  std::size_t level = 0;
  double t = 0.0;
};

// Snaps the next required block onto its slot when it is within `tolerance`
// of the slot centre and not currently held by an active gate.
TaskState snap_check(TaskState task, const std::optional<std::string>& held_id, double tolerance, double t,
                     std::vector<SnapEvent>* events = nullptr);

// ---------------------------------------------------------------------------
// Snapshots and reports
// ---------------------------------------------------------------------------

struct SiteThermal {
  double temp = 0.0;  // measured value the controller acted on
  double setpoint = 0.0;
  bool heater_on = false;
};

struct DetectorOutputs {
  double f = 0.0;
  double f_prime = 0.0;
  bool strained = false;
  std::optional<double> blink_mean;
  std::size_t blink_count = 0;  // intervals currently in the ring
  bool concentrated = false;
};

struct EngineSnapshot {
  std::uint64_t tick = 0;
  double t = 0.0;
  TelekinesisGate gate;
  std::optional<std::string> selected_object;
  std::vector<ObjectState> objects;
  DetectorOutputs detectors;
  std::array<SiteThermal, 3> thermal{};
  bool stimulating = false;
  std::vector<std::string> stacked;
  bool complete = false;
  double elapsed = 0.0;
  std::vector<SnapEvent> events;
};

nlohmann::ordered_json to_json(const EngineSnapshot& s);
std::string snapshot_line(const EngineSnapshot& s);

std::string condition_label(const FactorCondition& c);  // "c=yes,s=no,e=yes"
std::string condition_slug(const FactorCondition& c);   // "c1_s0_e1"
nlohmann::ordered_json to_json(const FactorCondition& c);

struct RunStats {
  std::uint64_t ticks = 0;
  std::uint64_t gaze_ok = 0;
  std::uint64_t palm_ok = 0;
  std::uint64_t open_ok = 0;
  std::uint64_t concentrated = 0;
  std::uint64_t strained = 0;
  std::uint64_t active = 0;
  std::uint64_t stimulating = 0;
  std::array<std::uint64_t, 3> heater_on{};
  std::vector<SnapEvent> snaps;
};

struct RunReport {
  FactorCondition condition;
  bool complete = false;
  std::optional<double> completion_time;
  double duration = 0.0;
  RunStats stats;
  std::vector<std::string> stacked;
};

nlohmann::ordered_json to_json(const RunReport& r);

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

// The per-tick world: detectors, gate, selection, object-follow law, heaters
// and task scoring. Copyable; a copy continues independently.
class Engine {
 public:
  // Concentration needs a calibrated threshold; throws CalibrationError otherwise.
  Engine(EngineConfig cfg, FactorCondition condition, std::optional<bio::Calibration> calibration = std::nullopt);

  // Throws FrameOrderError when frame.t is not the next tick.
  EngineSnapshot tick(const SensorFrame& frame);

  const EngineConfig& config() const { return cfg_; }
  const FactorCondition& condition() const { return condition_; }
  const TaskState& task() const { return task_; }
  const RunStats& stats() const { return stats_; }
  std::uint64_t ticks() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * cfg_.tick_period(); }
  const std::optional<std::string>& selected() const { return selected_; }
  const manip::ManipulationState& manipulation_state() const { return manip_; }
  const bio::BlinkDetector& blink_detector() const { return blinks_; }
  const bio::EmgPipeline& emg_pipeline() const { return emg_; }
  const std::optional<bio::Calibration>& calibration() const { return calibration_; }

  RunReport report() const;

 private:
  std::vector<ObjectState> candidates() const;

  EngineConfig cfg_;
  FactorCondition condition_;
  std::optional<bio::Calibration> calibration_;
  manip::Params manip_params_;
  thermal::ControlParams thermal_params_;

  std::uint64_t tick_ = 0;
  double t0_ = 0.0;

  bio::BlinkDetector blinks_;
  bio::EmgPipeline emg_;

  TaskState task_;
  std::optional<std::string> selected_;
  double inactive_for_ = 0.0;
  std::optional<std::string> manip_target_;
  manip::ManipulationState manip_;
  std::optional<Vec3> last_hand_;

  std::array<thermal::ThermalController, 3> controllers_{};
  std::array<thermal::ThermalPlant, 3> plants_{};

  RunStats stats_;
};

// Replays a whole trace; `sink` receives every snapshot in order.
template <typename Sink>
RunReport replay(Engine& engine, std::span<const SensorFrame> frames, Sink&& sink) {
  for (const auto& f : frames) sink(engine.tick(f));
  return engine.report();
}

}  // namespace tk
