#include <doctest.h>

#include "telekinesis/engine.hpp"
#include "telekinesis/operator.hpp"
#include "telekinesis/trace_io.hpp"

using namespace tk;

namespace {

RunReport run(const std::vector<SensorFrame>& frames, const FactorCondition& cond, const EngineConfig& cfg,
              const bio::Calibration& calib) {
  Engine e(cfg, cond, calib);
  return replay(e, frames, [](const EngineSnapshot&) {});
}

}  // namespace

TEST_CASE("synthetic frames form a valid trace") {
  const EngineConfig cfg;
  const auto frames = synth::synthesize_operator({false, false, false}, cfg, 3);
  CHECK_NOTHROW(validate_trace(frames, cfg));
  const auto rest = synth::synthesize_calibration(cfg, 3, 61.0);
  CHECK(rest.size() == 61 * 90);
  CHECK_NOTHROW(validate_trace(rest, cfg));
}

TEST_CASE("default calibration is plausible") {
  const EngineConfig cfg;
  const auto c = synth::default_calibration(cfg, 8);
  CHECK(c.concentration.mean_interval > 2.0);
  CHECK(c.concentration.mean_interval < 4.5);
  CHECK(c.concentration.c_th == doctest::Approx(cfg.c_multiplier * c.concentration.mean_interval));
  REQUIRE(c.emg);
  CHECK(c.emg->f_min < c.emg->f_max);
}

TEST_CASE("the model operator completes the task with every factor on") {
  const EngineConfig cfg;
  const FactorCondition all{true, true, true};
  const auto calib = synth::default_calibration(cfg, 42);
  const auto frames = synth::synthesize_operator(all, cfg, 42, calib);
  const auto r = run(frames, all, cfg, calib);
  CHECK(r.complete);
  REQUIRE(r.completion_time);
  CHECK(*r.completion_time < 300.0);
  CHECK(r.stacked == cfg.task.required_order);
  CHECK(r.stats.concentrated > 0);
  CHECK(r.stats.strained > 0);
}

TEST_CASE("every condition completes") {
  const EngineConfig cfg;
  const auto calib = synth::default_calibration(cfg, 17);
  for (int i = 0; i < kConditionCount; ++i) {
    const auto cond = FactorCondition::from_index(i);
    CAPTURE(i);
    const auto r = run(synth::synthesize_operator(cond, cfg, 17, calib), cond, cfg, calib);
    CHECK(r.complete);
  }
}

TEST_CASE("without EMG bursts the strain gate never opens") {
  const EngineConfig cfg;
  const FactorCondition strain{false, true, false};
  const auto calib = synth::default_calibration(cfg, 42);
  synth::OperatorOptions opt;
  opt.emg_bursts = false;
  opt.max_duration = 40.0;
  opt.stall_timeout = 20.0;
  const auto frames = synth::synthesize_operator(strain, cfg, 42, calib, opt);
  const auto r = run(frames, strain, cfg, calib);
  CHECK(r.stats.active == 0);
  CHECK_FALSE(r.complete);
  CHECK(r.stacked.empty());
}

TEST_CASE("same seed gives the same trace, a different seed does not") {
  const EngineConfig cfg;
  const FactorCondition cond{true, false, true};
  const auto calib = synth::default_calibration(cfg, 21);
  const auto a = synth::synthesize_operator(cond, cfg, 21, calib);
  const auto b = synth::synthesize_operator(cond, cfg, 21, calib);
  const auto c = synth::synthesize_operator(cond, cfg, 22, calib);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("emg synth") {
  synth::EmgSynth rest(1, 2000.0), strain(1, 2000.0);
  bio::EmgPipeline p1, p2;
  double f_rest = 0, f_strain = 0;
  for (int n = 0; n < 90; ++n) {
    f_rest += p1.strength(rest.batch(22, 0.0));
    f_strain += p2.strength(strain.batch(22, 1.0));
  }
  CHECK(f_strain > 5 * f_rest);
}

TEST_CASE("eye synth produces a dip when triggered") {
  synth::EyeSynth eye(2);
  for (int i = 0; i < 10; ++i) CHECK(eye.next() > 0.6);
  eye.trigger();
  CHECK(eye.blinking());
  double lowest = 1.0;
  for (int i = 0; i < 3; ++i) lowest = std::min(lowest, eye.next());
  CHECK(lowest < 0.3);
}
