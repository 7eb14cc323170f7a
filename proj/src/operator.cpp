#include "telekinesis/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "telekinesis/engine.hpp"
#include "telekinesis/trace_io.hpp"

namespace tk::synth {

EmgSynth::EmgSynth(std::uint64_t seed, double emg_rate) : EmgSynth(seed, emg_rate, Params{}) {}

EmgSynth::EmgSynth(std::uint64_t seed, double emg_rate, Params params) : rng_(seed), rate_(emg_rate), p_(params) {}

std::vector<double> EmgSynth::batch(std::size_t n, double strain_level) {
  std::vector<double> out(n);
  const double amp = p_.burst_amp * std::clamp(strain_level, 0.0, 1.0);
  for (auto& s : out) {
    const double phase = 2.0 * std::numbers::pi * p_.burst_hz * static_cast<double>(sample_) / rate_;
    s = p_.dc + p_.noise_sd * rng_.normal() + amp * std::sin(phase);
    ++sample_;
  }
  return out;
}

double EyeSynth::next() {
  const double jitter = rng_.uniform(-0.03, 0.03);
  if (dip_ >= 0) {
    const double v = kBlinkDip[dip_];
    dip_ = dip_ + 1 < 3 ? dip_ + 1 : -1;
    return v;
  }
  return 0.92 + jitter;
}

namespace {

SkinTemps resting_skin(Rng& rng) {
  SkinTemps s;
  s[Site::kForearm] = 32.0 + rng.uniform(-0.5, 0.5);
  s[Site::kForehead] = 34.0 + rng.uniform(-0.5, 0.5);
  s[Site::kPalm] = 33.0 + rng.uniform(-0.5, 0.5);
  return s;
}

Vec3 tremor(Rng& rng) {
  constexpr double sd = 0.0002;
  return {sd * rng.normal(), sd * rng.normal(), sd * rng.normal()};
}

}  // namespace

std::vector<SensorFrame> synthesize_calibration(const EngineConfig& cfg, std::uint64_t seed, double duration) {
  Rng body(derive_seed(seed, 10));
  Rng blink_rng(derive_seed(seed, 11));
  EmgSynth emg(derive_seed(seed, 12), cfg.emg_rate);
  EyeSynth eye(derive_seed(seed, 13));
  Rng tremor_rng(derive_seed(seed, 14));

  const SkinTemps skin = resting_skin(body);
  const double period = cfg.tick_period();
  const auto ticks = static_cast<std::size_t>(std::llround(duration / period));
  auto next_blink = static_cast<std::size_t>(std::llround(blink_rng.uniform(0.5, 1.5) / period));
  const Vec3 rest_hand{0.15, 1.0, 0.3};
  const Vec3 gaze_dir = *unit(Vec3{0.0, -0.3, 1.0});
  const auto mvc_begin = static_cast<std::size_t>(std::llround(kMvcStart / period));
  const auto mvc_end = static_cast<std::size_t>(std::llround((kMvcStart + kMvcLength) / period));

  std::vector<SensorFrame> frames;
  frames.reserve(ticks);
  for (std::size_t n = 0; n < ticks; ++n) {
    if (n == next_blink) {
      eye.trigger();
      const double interval = std::clamp(blink_rng.normal(3.0, 0.4), 1.5, 5.0);
      next_blink = n + static_cast<std::size_t>(std::llround(interval / period));
    }
    SensorFrame f;
    f.t = static_cast<double>(n) * period;
    f.hand_pos = rest_hand + tremor(tremor_rng);
    f.palm_normal = {0.0, -1.0, 0.0};
    f.hand_openness = kHandClosed;
    f.gaze_origin = kHeadPosition;
    f.gaze_dir = gaze_dir;
    f.eye_openness = eye.next();
    f.emg_batch = emg.batch(cfg.emg_batch_length(n), n >= mvc_begin && n < mvc_end ? 1.0 : 0.0);
    f.skin_temp = skin;
    frames.push_back(normalize(f));
  }
  return frames;
}

bio::Calibration default_calibration(const EngineConfig& cfg, std::uint64_t seed) {
  return bio::calibrate_trace(synthesize_calibration(cfg, seed), cfg);
}

namespace {

enum class Phase { kSteer, kReturn };

struct Stroke {
  Vec3 hand_delta;
};

// Inverse of the follow law for one tick: pick the error component (depth or
// transverse) that dominates and the hand step whose magnitude, times the
// hand-object distance and k, covers at most `max_step` of it.
Vec3 plan_hand_delta(const Vec3& hand, const Vec3& object, const Vec3& slot, const EngineConfig& cfg,
                     double max_step) {
  const Vec3 err = slot - object;
  const auto axis = unit(object - hand);
  if (!axis) return {};
  const double dist = distance(object, hand);
  const double e_depth = dot(err, *axis);
  const Vec3 e_perp = err - e_depth * *axis;
  const double e_perp_n = norm(e_perp);
  const double floor_m = 1.5 * cfg.m_th;

  if (e_perp_n >= std::abs(e_depth)) {
    const double m = std::max(std::min(e_perp_n, max_step) / (cfg.k * dist), floor_m);
    return m * (e_perp / e_perp_n);
  }
  const double m = std::max(std::min(std::abs(e_depth), max_step) / (cfg.k * dist), floor_m);
  // Moving the hand away from the object pushes it; toward it pulls it in.
  return e_depth > 0.0 ? -m * *axis : m * *axis;
}

}  // namespace

std::vector<SensorFrame> synthesize_operator(const FactorCondition& condition, const EngineConfig& cfg,
                                             std::uint64_t seed, const std::optional<bio::Calibration>& calibration,
                                             const OperatorOptions& options) {
  const bio::Calibration calib = calibration ? *calibration : default_calibration(cfg, seed);

  Rng body(derive_seed(seed, 20));
  Rng blink_rng(derive_seed(seed, 21));
  EmgSynth emg(derive_seed(seed, 22), cfg.emg_rate);
  EyeSynth eye(derive_seed(seed, 23));
  Rng tremor_rng(derive_seed(seed, 24));

  const SkinTemps skin = resting_skin(body);
  const double period = cfg.tick_period();
  const double release_tol = options.release_fraction * cfg.snap_tolerance;
  const auto max_ticks = static_cast<std::size_t>(std::llround(options.max_duration / period));
  const auto stall_ticks = static_cast<std::size_t>(std::llround(options.stall_timeout / period));
  const auto tail_ticks = static_cast<std::size_t>(std::llround(options.tail / period));

  // Blink pacing: stretched well past the threshold while concentrating.
  auto next_interval = [&]() {
    const double base = calib.concentration.mean_interval;
    const double s = condition.concentration ? calib.concentration.c_th * blink_rng.uniform(1.25, 1.45)
                                             : base * blink_rng.uniform(0.8, 1.2);
    return static_cast<std::size_t>(std::llround(s / period));
  };
  std::size_t next_blink = static_cast<std::size_t>(std::llround(blink_rng.uniform(0.3, 0.8) / period));
  const double strain_level = (condition.strain && options.emg_bursts) ? 1.0 : 0.0;

  Engine engine(cfg, condition, calib);
  std::vector<SensorFrame> frames;

  Vec3 hand = kHandHome;  // intended position, before tremor
  Vec3 reported_hand = hand;
  bool open = true;
  Phase phase = Phase::kSteer;
  std::size_t last_progress = 0;
  double best_error = std::numeric_limits<double>::infinity();
  std::size_t snapped = 0;
  std::optional<std::size_t> done_at;

  for (std::size_t n = 0; n < max_ticks; ++n) {
    if (done_at && n >= *done_at + tail_ticks) break;
    if (!done_at && n > last_progress + stall_ticks) break;

    if (n == next_blink) {
      eye.trigger();
      next_blink = n + std::max<std::size_t>(4, next_interval());
    }

    const TaskState& task = engine.task();
    const auto next_id = task.next_required();
    const Vec3 focus = next_id ? task.blocks[*task.index_of(*next_id)].position : task.slot_center(0);

    SensorFrame base;
    base.t = static_cast<double>(n) * period;
    base.gaze_origin = kHeadPosition;
    base.gaze_dir = unit(focus - kHeadPosition).value_or(Vec3{0.0, 0.0, 1.0});
    base.eye_openness = eye.next();
    base.emg_batch = emg.batch(cfg.emg_batch_length(n), strain_level);
    base.skin_temp = skin;
    const Vec3 jitter = tremor(tremor_rng);

    auto make = [&](const Vec3& intended, bool hand_open) {
      SensorFrame f = base;
      f.hand_pos = intended + jitter;
      f.palm_normal = unit(focus - f.hand_pos).value_or(Vec3{0.0, 0.0, 1.0});
      f.hand_openness = hand_open ? kHandOpen : kHandClosed;
      return normalize(f);
    };

    SensorFrame chosen;
    Vec3 chosen_hand = hand;
    bool chosen_open = open;

    if (!next_id) {
      chosen = make(hand, false);
      chosen_open = false;
    } else if (phase == Phase::kReturn) {
      const Vec3 to_home = kHandHome - hand;
      const double d = norm(to_home);
      chosen_hand = d <= 0.01 ? kHandHome : hand + (0.01 / d) * to_home;
      chosen_open = false;
      chosen = make(chosen_hand, false);
      if (chosen_hand == kHandHome) phase = Phase::kSteer;
    } else {
      const Vec3 slot = *task.next_slot();
      const double err = distance(slot, focus);
      if (err <= release_tol) {
        chosen_open = false;
        chosen = make(hand, false);
      } else if (!open) {
        chosen_open = true;
        chosen = make(hand, true);
      } else {
        const Vec3 delta = plan_hand_delta(reported_hand, focus, slot, cfg, options.object_step);
        const SensorFrame candidate = make(hand + delta, true);
        Engine probe = engine;
        const auto snap = probe.tick(candidate);
        const auto& moved = probe.task().blocks[*probe.task().index_of(*next_id)].position;
        if (!snap.gate.active) {
          chosen = make(hand, true);  // wait for the gate
        } else if (distance(slot, moved) < err - 1e-6) {
          chosen = candidate;
          chosen_hand = hand + delta;
        } else {
          chosen_open = false;
          chosen = make(hand, false);  // release and start a fresh stroke
        }
      }
    }

    engine.tick(chosen);
    frames.push_back(chosen);
    hand = chosen_hand;
    reported_hand = chosen.hand_pos;
    open = chosen_open;

    const TaskState& after = engine.task();
    if (after.stacked.size() > snapped) {
      snapped = after.stacked.size();
      last_progress = n;
      best_error = std::numeric_limits<double>::infinity();
      if (distance(hand, kHandHome) > 1e-9) phase = Phase::kReturn;
    }
    if (after.complete && !done_at) done_at = n;
    if (const auto id = after.next_required()) {
      const double e = distance(*after.next_slot(), after.blocks[*after.index_of(*id)].position);
      if (e < best_error - 1e-3) {
        best_error = e;
        last_progress = n;
      }
    }
  }
  return frames;
}

}  // namespace tk::synth
