#include "telekinesis/biosignal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <limits>
#include <numeric>

#include "telekinesis/config.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/json_util.hpp"

namespace tk::bio {

BlinkParams blink_params_from(const EngineConfig& cfg) {
  return {cfg.blink_close_th, cfg.blink_open_th, cfg.window_blinks, cfg.gaze_reset};
}

BlinkDetector::BlinkDetector(BlinkParams params) : params_(params) {}

std::optional<double> BlinkDetector::ring_mean() const {
  if (ring_.empty()) return std::nullopt;
  return std::accumulate(ring_.begin(), ring_.end(), 0.0) / static_cast<double>(ring_.size());
}

std::optional<BlinkEvent> BlinkDetector::step(double eye_openness, double t, bool gaze_on_target) {
  const double dt = last_t_ ? std::max(0.0, t - *last_t_) : 0.0;
  last_t_ = t;

  if (gaze_on_target) {
    gaze_clock_ += dt;
    off_target_ = 0.0;
  } else {
    off_target_ += dt;
    if (off_target_ > params_.gaze_reset) {
      ring_.clear();
      last_blink_clock_.reset();
    }
  }

  if (phase_ == Phase::kOpen) {
    if (eye_openness < params_.close_th) {
      phase_ = Phase::kClosed;
      close_t_ = t;
      close_clock_ = gaze_clock_;
    }
    return std::nullopt;
  }

  if (eye_openness <= params_.open_th) return std::nullopt;

  phase_ = Phase::kOpen;
  BlinkEvent ev{close_t_, close_clock_, std::nullopt};
  if (last_blink_clock_) {
    const double interval = close_clock_ - *last_blink_clock_;
    if (interval > 0.0) {
      ev.interval = interval;
      ring_.push_back(interval);
      while (ring_.size() > static_cast<std::size_t>(params_.window)) ring_.pop_front();
    }
  }
  last_blink_clock_ = close_clock_;
  return ev;
}

ConcentrationCalibration calibrate_intervals(std::span<const double> intervals, double c_multiplier) {
  if (intervals.empty()) throw CalibrationError("calibration needs at least two blinks");
  const double mean = std::accumulate(intervals.begin(), intervals.end(), 0.0) / static_cast<double>(intervals.size());
  if (!(mean > 0.0)) throw CalibrationError("calibration mean blink interval must be > 0");
  return {mean, c_multiplier * mean};
}

ConcentrationCalibration calibrate(std::span<const BlinkEvent> blinks, double c_multiplier) {
  if (blinks.size() < 2) throw CalibrationError("calibration needs at least two blinks, got " + std::to_string(blinks.size()));
  std::vector<double> intervals;
  intervals.reserve(blinks.size() - 1);
  for (std::size_t i = 1; i < blinks.size(); ++i) intervals.push_back(blinks[i].t - blinks[i - 1].t);
  return calibrate_intervals(intervals, c_multiplier);
}

bool concentration_state(const BlinkDetector& det, const ConcentrationCalibration& calib, bool gaze_on_target) {
  if (!gaze_on_target || !det.ring_full()) return false;
  return *det.ring_mean() > calib.c_th;
}

bool ray_hits_box(const Vec3& origin, const Vec3& dir, const Vec3& center, const Vec3& half_extent) {
  const double o[3] = {origin.x - center.x, origin.y - center.y, origin.z - center.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double h[3] = {half_extent.x, half_extent.y, half_extent.z};
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (std::abs(o[i]) > h[i]) return false;
      continue;
    }
    double t0 = (-h[i] - o[i]) / d[i];
    double t1 = (h[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return false;
  }
  return true;
}

bool gaze_on_target(const Vec3& gaze_origin, const Vec3& gaze_dir, const ObjectState& object, double half_angle_deg) {
  const Vec3 to_object = object.position - gaze_origin;
  if (is_zero(to_object)) return true;
  const double half_angle = half_angle_deg * std::numbers::pi / 180.0;
  if (angle_between(gaze_dir, to_object) <= half_angle) return true;
  return ray_hits_box(gaze_origin, gaze_dir, object.position, object.half_extent);
}

EmgPipeline::EmgPipeline(std::size_t dc_window_samples) : window_(std::max<std::size_t>(1, dc_window_samples)) {}

double EmgPipeline::dc_estimate() const {
  if (dc_window_.empty()) return 0.0;
  return std::accumulate(dc_window_.begin(), dc_window_.end(), 0.0) / static_cast<double>(dc_window_.size());
}

double EmgPipeline::strength(std::span<const double> batch) {
  if (batch.empty()) return 0.0;
  const double dc = dc_window_.empty()
                        ? std::accumulate(batch.begin(), batch.end(), 0.0) / static_cast<double>(batch.size())
                        : dc_estimate();
  // Deviations at the rounding level of the DC estimate count as zero.
  const double eps = 1e-12 * std::max(1.0, std::abs(dc));
  double acc = 0.0;
  for (double s : batch) {
    const double d = std::abs(s - dc);
    if (d > eps) acc += d;
  }
  for (double s : batch) {
    dc_window_.push_back(s);
    if (dc_window_.size() > window_) {
      dc_window_.pop_front();
    }
  }
  return acc / static_cast<double>(batch.size());
}

double EmgPipeline::normalize(double f) {
  if (!initialized_) {
    f_min_ = f_max_ = f;
    initialized_ = true;
  } else {
    f_min_ = std::min(f_min_, f);
    f_max_ = std::max(f_max_, f);
  }
  const double range = f_max_ - f_min_;
  last_fprime_ = range > 0.0 ? std::clamp((f - f_min_) / range, 0.0, 1.0) : 0.0;
  return last_fprime_;
}

EmgPipeline::Output EmgPipeline::step(std::span<const double> batch) {
  Output out;
  out.f = strength(batch);
  out.f_prime = normalize(out.f);
  return out;
}

void EmgPipeline::seed(const EmgCalibration& calib) {
  if (!initialized_) {
    f_min_ = calib.f_min;
    f_max_ = calib.f_max;
    initialized_ = true;
  } else {
    f_min_ = std::min(f_min_, calib.f_min);
    f_max_ = std::max(f_max_, calib.f_max);
  }
}

std::optional<EmgCalibration> EmgPipeline::extrema() const {
  if (!initialized_) return std::nullopt;
  return EmgCalibration{f_min_, f_max_};
}

nlohmann::ordered_json to_json(const Calibration& c) {
  nlohmann::ordered_json j{
      {"version", 1},
      {"mean_interval", jsonu::num(c.concentration.mean_interval)},
      {"c_th", jsonu::num(c.concentration.c_th)},
  };
  if (c.emg) {
    j["f_min"] = jsonu::num(c.emg->f_min);
    j["f_max"] = jsonu::num(c.emg->f_max);
  }
  return j;
}

Calibration calibration_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw std::invalid_argument("calibration must be a JSON object");
    Calibration c;
    c.concentration.mean_interval = jsonu::read_num(j, "mean_interval");
    c.concentration.c_th = jsonu::read_num(j, "c_th");
    if (!(c.concentration.mean_interval > 0.0) || !(c.concentration.c_th > 0.0))
      throw std::invalid_argument("mean_interval and c_th must be > 0");
    const bool has_min = j.contains("f_min");
    const bool has_max = j.contains("f_max");
    if (has_min != has_max) throw std::invalid_argument("f_min and f_max must be given together");
    if (has_min) {
      c.emg = EmgCalibration{jsonu::read_num(j, "f_min"), jsonu::read_num(j, "f_max")};
      if (!(c.emg->f_min <= c.emg->f_max)) throw std::invalid_argument("f_min must be <= f_max");
    }
    return c;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("calibration: ") + e.what());
  }
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file " + path.string());
  try {
    return calibration_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("calibration " + path.string() + ": " + e.what());
  }
}

void save_calibration(const Calibration& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write calibration file " + path.string());
  out << to_json(c).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Calibration calibrate_trace(std::span<const SensorFrame> frames, const EngineConfig& cfg) {
  const double period = cfg.tick_period();
  const auto needed = static_cast<std::size_t>(std::llround(kCalibrationWindow / period));
  if (frames.size() < needed)
    throw CalibrationError("calibration trace covers " + std::to_string(frames.size() * period) + " s, need " +
                           std::to_string(kCalibrationWindow) + " s");
  BlinkDetector blinks(blink_params_from(cfg));
  EmgPipeline emg(cfg.dc_window_samples());
  std::vector<BlinkEvent> events;
  for (std::size_t i = 0; i < needed; ++i) {
    const double t = static_cast<double>(i) * period;
    if (auto ev = blinks.step(frames[i].eye_openness, t, true)) events.push_back(*ev);
    emg.step(frames[i].emg_batch);
  }
  Calibration c;
  c.concentration = calibrate(events, cfg.c_multiplier);
  c.emg = emg.extrema();
  return c;
}

}  // namespace tk::bio
