#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "telekinesis/biosignal.hpp"
#include "telekinesis/config.hpp"
#include "telekinesis/rng.hpp"
#include "telekinesis/types.hpp"

namespace tk::synth {

// Fixed body geometry of the model operator.
inline constexpr Vec3 kHeadPosition{0.0, 1.6, 0.0};
inline constexpr Vec3 kHandHome{0.0, 1.25, 0.45};
inline constexpr double kHandOpen = 0.95;
inline constexpr double kHandClosed = 0.1;

// Surface EMG generator: DC offset plus white noise, with an optional sine
// burst whose amplitude scales with the strain level.
class EmgSynth {
 public:
  struct Params {
    double dc = 1.5;          // mV
    double noise_sd = 0.03;   // mV
    double burst_amp = 1.0;   // mV at full strain
    double burst_hz = 85.0;
  };

  EmgSynth(std::uint64_t seed, double emg_rate);
  EmgSynth(std::uint64_t seed, double emg_rate, Params params);

  std::vector<double> batch(std::size_t n, double strain_level);

 private:
  Rng rng_;
  double rate_;
  Params p_;
  std::uint64_t sample_ = 0;
};

// Eye-openness profile for one blink: three ticks closing and reopening.
inline constexpr double kBlinkDip[3] = {0.45, 0.05, 0.45};

// Produces eye openness tick by tick; a blink dip starts whenever one is
// triggered, either by schedule or on demand.
class EyeSynth {
 public:
  explicit EyeSynth(std::uint64_t seed) : rng_(seed) {}

  void trigger() {
    if (dip_ < 0) dip_ = 0;
  }
  bool blinking() const { return dip_ >= 0; }
  double next();

 private:
  Rng rng_;
  int dip_ = -1;
};

// Maximal contraction held inside the resting trace so the EMG extrema span
// rest to full effort.
inline constexpr double kMvcStart = 50.0;   // s
inline constexpr double kMvcLength = 3.0;   // s

// Resting trace for baseline calibration: closed relaxed hand, free gaze,
// blinks every ~3 s, EMG at rest apart from one maximal contraction.
std::vector<SensorFrame> synthesize_calibration(const EngineConfig& cfg, std::uint64_t seed, double duration = 90.0);

// Calibration derived from synthesize_calibration with the same seed.
bio::Calibration default_calibration(const EngineConfig& cfg, std::uint64_t seed);

struct OperatorOptions {
  bool emg_bursts = true;       // switch off for the negative control
  double object_step = 0.008;   // m of object travel aimed for per tick
  double release_fraction = 0.4;  // release once within this fraction of snap_tolerance
  double max_duration = 300.0;  // s
  double stall_timeout = 60.0;  // s without progress before giving up
  double tail = 0.5;            // s recorded after completion
};

// Model participant for one condition. The operator gazes at each required
// block in turn, holds the hand open with the palm toward it, strains when
// the condition asks for strain, stretches blink intervals when it asks for
// concentration, and steers the block to its slot by inverting the
// object-follow law each tick against a private copy of the engine. The hand
// closes to release a block onto its slot and returns home before the next.
//
// Without a calibration the one from default_calibration(cfg, seed) is used;
// replays must use the same calibration to reproduce the run.
std::vector<SensorFrame> synthesize_operator(const FactorCondition& condition, const EngineConfig& cfg,
                                             std::uint64_t seed,
                                             const std::optional<bio::Calibration>& calibration = std::nullopt,
                                             const OperatorOptions& options = {});

}  // namespace tk::synth
