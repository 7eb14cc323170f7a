#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/types.hpp"
#include "telekinesis/vec3.hpp"

namespace tk {

struct EngineConfig;

namespace bio {

// ---------------------------------------------------------------------------
// Blinks and concentration
// ---------------------------------------------------------------------------

struct BlinkEvent {
  double t = 0.0;           // wall time at which the eye closed
  double gaze_clock = 0.0;  // on-target time at which the eye closed
  std::optional<double> interval;  // on-target time since the previous blink
};

struct BlinkParams {
  double close_th = 0.3;
  double open_th = 0.6;
  int window = 5;
  double gaze_reset = 1.0;  // s off target before the ring is cleared
};

BlinkParams blink_params_from(const EngineConfig& cfg);

// Schmitt-trigger blink detector with a ring of the most recent intervals.
//
// Intervals are measured on a clock that only runs while gaze is on the
// target: time spent looking away does not count, and looking away for longer
// than gaze_reset clears the ring and forgets the previous blink. A blink is
// reported when the eye reopens, stamped with the moment it closed.
class BlinkDetector {
 public:
  enum class Phase { kOpen, kClosed };

  explicit BlinkDetector(BlinkParams params = {});

  std::optional<BlinkEvent> step(double eye_openness, double t, bool gaze_on_target = true);

  Phase phase() const { return phase_; }
  const std::deque<double>& intervals() const { return ring_; }
  bool ring_full() const { return ring_.size() == static_cast<std::size_t>(params_.window); }
  std::optional<double> ring_mean() const;
  std::optional<double> last_blink_t() const { return last_blink_clock_; }
  double gaze_clock() const { return gaze_clock_; }

 private:
  BlinkParams params_;
  Phase phase_ = Phase::kOpen;
  std::optional<double> last_t_;
  double gaze_clock_ = 0.0;
  double off_target_ = 0.0;
  double close_t_ = 0.0;
  double close_clock_ = 0.0;
  std::optional<double> last_blink_clock_;
  std::deque<double> ring_;
};

struct ConcentrationCalibration {
  double mean_interval = 0.0;
  double c_th = 0.0;

  friend bool operator==(const ConcentrationCalibration&, const ConcentrationCalibration&) = default;
};

// Baseline from blinks recorded at rest. Needs at least two blinks.
ConcentrationCalibration calibrate(std::span<const BlinkEvent> blinks, double c_multiplier);
ConcentrationCalibration calibrate_intervals(std::span<const double> intervals, double c_multiplier);

// Full ring, gaze on the target, and the ring mean strictly above c_th.
bool concentration_state(const BlinkDetector& det, const ConcentrationCalibration& calib, bool gaze_on_target);

// Angle from the gaze ray to the object centre within half_angle_deg, or the
// ray hits the object's box.
bool gaze_on_target(const Vec3& gaze_origin, const Vec3& gaze_dir, const ObjectState& object, double half_angle_deg);

// Slab test for a ray against an axis-aligned box; only hits in front of the origin count.
bool ray_hits_box(const Vec3& origin, const Vec3& dir, const Vec3& center, const Vec3& half_extent);

// ---------------------------------------------------------------------------
// EMG and strain
// ---------------------------------------------------------------------------

struct EmgCalibration {
  double f_min = 0.0;
  double f_max = 0.0;

  friend bool operator==(const EmgCalibration&, const EmgCalibration&) = default;
};

// DC removal against a trailing window, rectification, batch mean, then
// min-max normalisation against running session extrema.
class EmgPipeline {
 public:
  explicit EmgPipeline(std::size_t dc_window_samples = 2000);

  // Rectified strength of one batch. The DC estimate is the mean of the
  // samples preceding the batch (the batch's own mean before any history).
  double strength(std::span<const double> batch);

  // Widens the extrema to include f and returns the normalised value in [0, 1].
  double normalize(double f);

  struct Output {
    double f = 0.0;
    double f_prime = 0.0;
  };
  Output step(std::span<const double> batch);

  // Pre-loads the extrema, e.g. from a resting calibration pass.
  void seed(const EmgCalibration& calib);

  std::optional<EmgCalibration> extrema() const;
  double last_fprime() const { return last_fprime_; }
  double dc_estimate() const;

 private:
  std::size_t window_;
  std::deque<double> dc_window_;
  bool initialized_ = false;
  double f_min_ = 0.0;
  double f_max_ = 0.0;
  double last_fprime_ = 0.0;
};

inline bool strain_state(double f_prime, double F_th) { return f_prime > F_th; }

// ---------------------------------------------------------------------------
// Persisted calibration
// ---------------------------------------------------------------------------

struct Calibration {
  ConcentrationCalibration concentration;
  std::optional<EmgCalibration> emg;

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

nlohmann::ordered_json to_json(const Calibration& c);
Calibration calibration_from_json(const nlohmann::json& j);
Calibration load_calibration(const std::filesystem::path& path);
void save_calibration(const Calibration& c, const std::filesystem::path& path);

// Length of the resting window used for calibration, seconds.
inline constexpr double kCalibrationWindow = 60.0;

// Runs the blink detector (free gaze) and the EMG pipeline over the first
// 60 s of a resting trace. Throws CalibrationError when the trace is shorter
// than that or holds fewer than two blinks.
Calibration calibrate_trace(std::span<const SensorFrame> frames, const EngineConfig& cfg);

}  // namespace bio
}  // namespace tk
