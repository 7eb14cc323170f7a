#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles/concentration_oracle.hpp"
#include "telekinesis/biosignal.hpp"
#include "telekinesis/config.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/rng.hpp"
#include "unit/helpers.hpp"

using namespace tk;
using namespace tk::bio;

namespace {

constexpr double kDt = 1.0 / 90.0;

// Feeds openness samples one tick apart and returns the reported blinks.
std::vector<BlinkEvent> feed(BlinkDetector& det, const std::vector<double>& eye, double t0 = 0.0, bool gaze = true) {
  std::vector<BlinkEvent> out;
  for (std::size_t i = 0; i < eye.size(); ++i)
    if (auto ev = det.step(eye[i], t0 + static_cast<double>(i) * kDt, gaze)) out.push_back(*ev);
  return out;
}

// Open eyes with a two-tick blink every `every` ticks, starting at tick `first`.
std::vector<double> blink_train(int ticks, int every, int first = 10) {
  std::vector<double> eye(ticks, 0.95);
  for (int i = first; i + 1 < ticks; i += every) eye[i] = eye[i + 1] = 0.05;
  return eye;
}

}  // namespace

TEST_CASE("one dip below the close threshold is one blink") {
  BlinkDetector det;
  const auto events = feed(det, {1.0, 0.1, 1.0});
  REQUIRE(events.size() == 1);
  CHECK(events[0].t == doctest::Approx(kDt));
  CHECK_FALSE(events[0].interval.has_value());
}

TEST_CASE("a shallow dip is not a blink") {
  BlinkDetector det;
  CHECK(feed(det, {1.0, 0.4, 1.0, 0.35, 1.0}).empty());
}

TEST_CASE("the eye must reopen past the open threshold") {
  BlinkDetector det;
  CHECK(feed(det, {1.0, 0.1, 0.5, 0.55, 0.6}).empty());
  CHECK(det.phase() == BlinkDetector::Phase::kClosed);
  CHECK(det.step(0.61, 5 * kDt).has_value());
}

TEST_CASE("intervals fill a ring of the configured size") {
  BlinkDetector det;
  const auto events = feed(det, blink_train(90 * 20, 270));
  REQUIRE(events.size() == 7);
  CHECK(det.intervals().size() == 5);
  CHECK(det.ring_full());
  CHECK(*det.ring_mean() == doctest::Approx(3.0));
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(*events[i].interval == doctest::Approx(3.0));
}

TEST_CASE("looking away pauses the clock and a long look away clears the ring") {
  SUBCASE("short glance") {
    BlinkDetector det;
    det.step(0.95, 0.0);
    det.step(0.05, 1.0);
    det.step(0.95, 1.1);
    det.step(0.95, 1.5, false);  // 0.4 s off target
    det.step(0.95, 2.0, true);
    det.step(0.05, 2.5);
    const auto ev = det.step(0.95, 2.6);
    REQUIRE(ev);
    CHECK(*ev->interval == doctest::Approx(1.1));
  }
  SUBCASE("long look away") {
    BlinkDetector det;
    det.step(0.95, 0.0);
    det.step(0.05, 1.0);
    det.step(0.95, 1.1);
    for (int i = 1; i <= 15; ++i) det.step(0.95, 1.1 + 0.1 * i, false);
    CHECK_FALSE(det.last_blink_t().has_value());
    det.step(0.05, 3.0);
    const auto ev = det.step(0.95, 3.1);
    REQUIRE(ev);
    CHECK_FALSE(ev->interval.has_value());
  }
}

TEST_CASE("concentration follows the tick oracle") {
  const EngineConfig cfg;
  Rng rng(9);
  std::vector<oracle::TickSample> samples;
  bool gaze = true;
  while (samples.size() < 90 * 600) {
    if (rng.bernoulli(0.0003)) gaze = !gaze;
    if (rng.bernoulli(1.0 / 450.0)) {
      samples.push_back({0.1, gaze});
      samples.push_back({0.1, gaze});
    } else {
      samples.push_back({0.9, gaze});
    }
  }
  // Threshold halfway between whole ticks: sum > 1800.5 ticks over 5 intervals.
  const double c_th = 1800.5 / 5.0 / 90.0;
  const ConcentrationCalibration calib{c_th / 1.67, c_th};
  const auto expected = oracle::concentration_ticks(samples, 5, 3601, 90, 0.3, 0.6);
  BlinkDetector det(blink_params_from(cfg));
  int agreements = 0, positives = 0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    det.step(samples[n].eye, static_cast<double>(n) / 90.0, samples[n].gaze);
    const bool got = concentration_state(det, calib, samples[n].gaze);
    CHECK(got == expected[n]);
    agreements += got == expected[n];
    positives += got;
  }
  CHECK(positives > 0);
  CHECK(agreements == static_cast<int>(samples.size()));
}

TEST_CASE("calibration from blink intervals") {
  const std::vector<double> three{3, 3, 3};
  const auto c = calibrate_intervals(three, 1.67);
  CHECK(c.mean_interval == doctest::Approx(3.0));
  CHECK(c.c_th == doctest::Approx(5.01));

  std::vector<BlinkEvent> blinks{{0.0, 0.0, {}}, {2.0, 2.0, 2.0}, {6.0, 6.0, 4.0}};
  CHECK(calibrate(blinks, 1.67).mean_interval == doctest::Approx(3.0));

  std::vector<BlinkEvent> one{{1.0, 1.0, {}}};
  CHECK_THROWS_AS(calibrate(one, 1.67), CalibrationError);
  CHECK_THROWS_AS(calibrate({}, 1.67), CalibrationError);
}

TEST_CASE("concentration needs a full ring, gaze and a long mean") {
  BlinkDetector det;
  feed(det, blink_train(90 * 12, 450));  // blinks every 5 s: two intervals
  const ConcentrationCalibration calib{3.0, 5.01};
  CHECK_FALSE(det.ring_full());
  CHECK_FALSE(concentration_state(det, calib, true));

  BlinkDetector full;
  feed(full, blink_train(90 * 40, 540));  // every 6 s
  REQUIRE(full.ring_full());
  CHECK(concentration_state(full, calib, true));
  CHECK_FALSE(concentration_state(full, calib, false));
  CHECK_FALSE(concentration_state(full, ConcentrationCalibration{4.0, 6.5}, true));
}

TEST_CASE("gaze on target") {
  ObjectState obj;
  obj.position = {0, 0, 10};
  obj.half_extent = {0.05, 0.05, 0.05};
  const double a4 = 4.0 * std::numbers::pi / 180.0;
  const double a6 = 6.0 * std::numbers::pi / 180.0;
  CHECK(gaze_on_target({0, 0, 0}, {std::sin(a4), 0, std::cos(a4)}, obj, 5.0));
  CHECK_FALSE(gaze_on_target({0, 0, 0}, {std::sin(a6), 0, std::cos(a6)}, obj, 5.0));
  CHECK_FALSE(gaze_on_target({0, 0, 0}, {0, 0, -1}, obj, 5.0));

  // Close, large box: outside the cone but the ray still hits it.
  ObjectState near;
  near.position = {0, 0, 0.5};
  near.half_extent = {0.2, 0.2, 0.2};
  CHECK(gaze_on_target({0, 0, 0}, {std::sin(a6 * 2), 0, std::cos(a6 * 2)}, near, 5.0));
}

TEST_CASE("ray against box") {
  CHECK(ray_hits_box({0, 0, 0}, {0, 0, 1}, {0, 0, 3}, {0.1, 0.1, 0.1}));
  CHECK_FALSE(ray_hits_box({0, 0, 0}, {0, 0, -1}, {0, 0, 3}, {0.1, 0.1, 0.1}));
  CHECK_FALSE(ray_hits_box({0, 0.2, 0}, {0, 0, 1}, {0, 0, 3}, {0.1, 0.1, 0.1}));
  CHECK(ray_hits_box({0, 0, 3}, {1, 0, 0}, {0, 0, 3}, {0.1, 0.1, 0.1}));
}

TEST_CASE("emg strength of a square wave") {
  EmgPipeline p(2000);
  std::vector<double> batch(22);
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i % 2 ? 1.0 : -1.0;
  CHECK(p.strength(batch) == doctest::Approx(1.0));
}

TEST_CASE("emg strength of a sine is 2A/pi") {
  const EngineConfig cfg;
  EmgPipeline p(cfg.dc_window_samples());
  const double A = 0.4;
  std::size_t k = 0;
  for (std::size_t n = 0; n < 270; ++n) {
    std::vector<double> batch(cfg.emg_batch_length(n));
    for (auto& s : batch) s = 1.5 + A * std::sin(2 * std::numbers::pi * 50.0 * static_cast<double>(k++) / 2000.0);
    p.strength(batch);
  }
  CHECK(p.dc_estimate() == doctest::Approx(1.5).epsilon(1e-9));
  // A 22-sample batch spans about half a period, so average over many frames instead.
  double sum = 0.0;
  for (std::size_t n = 270; n < 270 + 900; ++n) {
    std::vector<double> batch(cfg.emg_batch_length(n));
    for (auto& s : batch) s = 1.5 + A * std::sin(2 * std::numbers::pi * 50.0 * static_cast<double>(k++) / 2000.0);
    sum += p.strength(batch);
  }
  CHECK(sum / 900.0 == doctest::Approx(2 * A / std::numbers::pi).epsilon(0.01));
}

TEST_CASE("constant emg has zero strength") {
  EmgPipeline p(2000);
  const std::vector<double> batch(23, 1.7);
  for (int i = 0; i < 200; ++i) CHECK(p.step(batch).f == 0.0);
  CHECK(p.last_fprime() == 0.0);
}

TEST_CASE("min-max normalisation") {
  EmgPipeline p;
  CHECK(p.normalize(2.0) == 0.0);
  CHECK(p.normalize(4.0) == 1.0);
  CHECK(p.normalize(6.0) == 1.0);
  CHECK(p.normalize(3.0) == doctest::Approx(0.25));
  CHECK(p.extrema() == EmgCalibration{2.0, 6.0});

  EmgPipeline seeded;
  seeded.seed({2.0, 6.0});
  CHECK(seeded.normalize(3.0) == doctest::Approx(0.25));
  CHECK(seeded.normalize(8.0) == 1.0);
  CHECK(seeded.normalize(6.0) == doctest::Approx(4.0 / 6.0));

  EmgPipeline unseeded;
  CHECK_FALSE(unseeded.extrema().has_value());
}

TEST_CASE("strain is strictly above the threshold") {
  CHECK_FALSE(strain_state(0.5, 0.5));
  CHECK(strain_state(0.5000001, 0.5));
  CHECK_FALSE(strain_state(0.0, 0.5));
}

TEST_CASE("calibration json") {
  Calibration c{{3.0, 5.01}, EmgCalibration{0.1, 0.9}};
  CHECK(calibration_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
  Calibration no_emg{{2.5, 4.175}, std::nullopt};
  CHECK(calibration_from_json(nlohmann::json::parse(to_json(no_emg).dump())) == no_emg);

  CHECK_THROWS_AS(calibration_from_json(nlohmann::json{{"mean_interval", 3.0}}), ValidationError);
  CHECK_THROWS_AS(calibration_from_json(nlohmann::json{{"mean_interval", 3.0}, {"c_th", 5.0}, {"f_min", 0.1}}),
                  ValidationError);
  CHECK_THROWS_AS(calibration_from_json(nlohmann::json{{"mean_interval", -1.0}, {"c_th", 5.0}}), ValidationError);
  CHECK_THROWS_AS(
      calibration_from_json(nlohmann::json{{"mean_interval", 3.0}, {"c_th", 5.0}, {"f_min", 1.0}, {"f_max", 0.5}}),
      ValidationError);

  const auto dir = testing::scratch("calibration_json");
  save_calibration(c, dir / "cal.json");
  CHECK(load_calibration(dir / "cal.json") == c);
  CHECK_THROWS_AS(load_calibration(dir / "none.json"), IoError);
}

TEST_CASE("calibrating a trace") {
  const EngineConfig cfg;
  std::vector<SensorFrame> frames;
  const auto eye = blink_train(90 * 61, 270);
  for (std::size_t n = 0; n < eye.size(); ++n) {
    auto f = testing::plain_frame(cfg, n);
    f.eye_openness = eye[n];
    for (std::size_t i = 0; i < f.emg_batch.size(); ++i) f.emg_batch[i] += (n % 90 < 45 ? 0.2 : 0.05) * (i % 2 ? 1 : -1);
    frames.push_back(f);
  }
  const auto c = calibrate_trace(frames, cfg);
  CHECK(c.concentration.mean_interval == doctest::Approx(3.0));
  CHECK(c.concentration.c_th == doctest::Approx(5.01));
  REQUIRE(c.emg);
  CHECK(c.emg->f_min < c.emg->f_max);

  frames.resize(90 * 30);
  CHECK_THROWS_AS(calibrate_trace(frames, cfg), CalibrationError);

  std::vector<SensorFrame> still;
  for (std::size_t n = 0; n < 90 * 60; ++n) still.push_back(testing::plain_frame(cfg, n));
  CHECK_THROWS_AS(calibrate_trace(still, cfg), CalibrationError);
}
