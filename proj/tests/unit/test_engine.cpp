#include <doctest.h>

#include <cmath>
#include <numbers>

#include "telekinesis/engine.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/operator.hpp"
#include "unit/helpers.hpp"

using namespace tk;

namespace {

ObjectState block(const std::string& id, Vec3 p) { return {id, p, {0.05, 0.05, 0.05}, false}; }

Vec3 rotate_y(Vec3 v, double deg) {
  const double a = deg * std::numbers::pi / 180.0;
  return {std::cos(a) * v.x + std::sin(a) * v.z, v.y, -std::sin(a) * v.x + std::cos(a) * v.z};
}

// Frame looking at `target` with the palm toward it and the hand open.
SensorFrame aiming_frame(const EngineConfig& cfg, std::size_t n, const Vec3& target, double openness = 0.95) {
  auto f = testing::plain_frame(cfg, n);
  f.gaze_origin = synth::kHeadPosition;
  f.gaze_dir = *unit(target - f.gaze_origin);
  f.hand_pos = synth::kHandHome;
  f.palm_normal = *unit(target - f.hand_pos);
  f.hand_openness = openness;
  return f;
}

}  // namespace

TEST_CASE("select target prefers the smaller gaze angle") {
  const std::vector<ObjectState> objs{block("a", rotate_y({0, 0, 5}, 4.0)), block("b", rotate_y({0, 0, 5}, 2.0))};
  const auto i = select_target({0, 0, 0}, {0, 0, 1}, {0, 0, 1}, {0, 0, 0}, objs, 5.0);
  REQUIRE(i);
  CHECK(*i == 1);
  CHECK_FALSE(select_target({0, 0, 0}, {0, 0, 1}, {0, 0, -1}, {0, 0, 0}, objs, 5.0));
  CHECK_FALSE(select_target({0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {0, 0, 0}, objs, 5.0));
}

TEST_CASE("palm faces") {
  CHECK(palm_faces({0, 0, 1}, {0, 0, 0}, {0.1, 0, 1}));
  CHECK_FALSE(palm_faces({0, 0, -1}, {0, 0, 0}, {0, 0, 1}));
  CHECK_FALSE(palm_faces({1, 0, 0}, {0, 0, 0}, {0, 0, 1}));
  CHECK_FALSE(palm_faces({0, 0, 1}, {0, 0, 1}, {0, 0, 1}));
}

TEST_CASE("gate combines the enabled conjuncts") {
  const GateInputs all{true, true, true, true, true};
  for (int i = 0; i < kConditionCount; ++i) CHECK(gate_step(all, FactorCondition::from_index(i)).active);

  GateInputs no_strain = all;
  no_strain.strained = false;
  CHECK(gate_step(no_strain, {false, false, true}).active);
  const auto g = gate_step(no_strain, {false, true, true});
  CHECK_FALSE(g.active);
  CHECK_FALSE(g.strain_ok);
  CHECK(g.conc_ok);

  GateInputs closed = all;
  closed.hand_open = false;
  for (int i = 0; i < kConditionCount; ++i) CHECK_FALSE(gate_step(closed, FactorCondition::from_index(i)).active);

  GateInputs unconcentrated = all;
  unconcentrated.concentrated = false;
  CHECK(gate_step(unconcentrated, {false, true, false}).active);
  CHECK_FALSE(gate_step(unconcentrated, {true, true, false}).active);

  // Energy never gates.
  CHECK(gate_step(all, {false, false, true}) == gate_step(all, {false, false, false}));
}

TEST_CASE("enabling more factors never adds active ticks") {
  std::vector<GateInputs> inputs;
  for (int m = 0; m < 32; ++m) inputs.push_back({bool(m & 1), bool(m & 2), bool(m & 4), bool(m & 8), bool(m & 16)});
  for (int a = 0; a < kConditionCount; ++a)
    for (int b = 0; b < kConditionCount; ++b) {
      const auto ca = FactorCondition::from_index(a), cb = FactorCondition::from_index(b);
      const bool subset = (!ca.concentration || cb.concentration) && (!ca.strain || cb.strain);
      if (!subset) continue;
      for (const auto& in : inputs)
        if (gate_step(in, cb).active) CHECK(gate_step(in, ca).active);
    }
}

TEST_CASE("snap check") {
  const EngineConfig cfg;
  auto task = TaskState::from_layout(cfg.task);
  const Vec3 base = task.slot_center(0);

  SUBCASE("the next block within tolerance snaps") {
    task.blocks[*task.index_of("green")].position = base + Vec3{0.03, 0, 0};
    std::vector<SnapEvent> ev;
    task = snap_check(task, std::nullopt, 0.05, 1.5, &ev);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].id == "green");
    CHECK(ev[0].level == 0);
    CHECK(task.stacked == std::vector<std::string>{"green"});
    CHECK(task.blocks[*task.index_of("green")].position == base);
  }
  SUBCASE("a held block does not snap") {
    task.blocks[*task.index_of("green")].position = base;
    task = snap_check(task, std::string("green"), 0.05, 1.5);
    CHECK(task.stacked.empty());
  }
  SUBCASE("out of order does not snap") {
    task.blocks[*task.index_of("blue")].position = base;
    task = snap_check(task, std::nullopt, 0.05, 1.5);
    CHECK(task.stacked.empty());
  }
  SUBCASE("too far does not snap") {
    task.blocks[*task.index_of("green")].position = base + Vec3{0, 0, 0.06};
    task = snap_check(task, std::nullopt, 0.05, 1.5);
    CHECK(task.stacked.empty());
  }
  SUBCASE("third snap completes the task") {
    double t = 1.0;
    for (const auto& id : cfg.task.required_order) {
      const auto slot = *task.next_slot();
      task.blocks[*task.index_of(id)].position = slot + Vec3{0.0, 0.01, 0.0};
      task = snap_check(task, std::nullopt, 0.05, t);
      t += 1.0;
    }
    CHECK(task.complete);
    CHECK(task.completion_time == 3.0);
    CHECK(task.stacked == cfg.task.required_order);
    CHECK_FALSE(task.next_slot());
    CHECK(task.slot_center(1).y == doctest::Approx(base.y + 0.1));
    CHECK(task.slot_center(2).y == doctest::Approx(base.y + 0.2));
  }
}

TEST_CASE("engine rejects frames out of order") {
  const EngineConfig cfg;
  Engine e(cfg, {});
  e.tick(testing::plain_frame(cfg, 0));
  CHECK_THROWS_AS(e.tick(testing::plain_frame(cfg, 2)), FrameOrderError);
  CHECK_THROWS_AS(e.tick(testing::plain_frame(cfg, 0)), FrameOrderError);
  CHECK_NOTHROW(e.tick(testing::plain_frame(cfg, 1)));
}

TEST_CASE("concentration without a calibration is refused") {
  CHECK_THROWS_AS(Engine(EngineConfig{}, {true, false, false}), CalibrationError);
  CHECK_NOTHROW(Engine(EngineConfig{}, {true, false, false}, bio::Calibration{{3.0, 5.01}, std::nullopt}));
  CHECK_NOTHROW(Engine(EngineConfig{}, {false, true, true}));
}

TEST_CASE("inactive gate leaves the blocks where they are") {
  const EngineConfig cfg;
  Engine e(cfg, {false, false, false});
  const Vec3 green = cfg.task.blocks[1].position;
  const auto initial = e.task().blocks;
  for (std::size_t n = 0; n < 90; ++n) {
    auto f = aiming_frame(cfg, n, green, 0.1);  // closed hand
    f.hand_pos = f.hand_pos + Vec3{0.002 * double(n), 0, 0};
    const auto s = e.tick(f);
    CHECK_FALSE(s.gate.active);
    CHECK(s.gate.gaze_ok);
    CHECK(s.gate.palm_ok);
    CHECK_FALSE(s.gate.open_ok);
  }
  CHECK(e.task().blocks == initial);
}

TEST_CASE("active gate moves the block the operator looks at") {
  const EngineConfig cfg;
  Engine e(cfg, {false, false, true});
  const Vec3 green = cfg.task.blocks[1].position;
  EngineSnapshot s;
  for (std::size_t n = 0; n < 20; ++n) {
    auto f = aiming_frame(cfg, n, e.task().blocks[1].position);
    f.hand_pos = f.hand_pos + Vec3{0.0, 0.003 * double(n), 0.0};
    s = e.tick(f);
    CHECK(s.gate.active);
  }
  CHECK(s.selected_object == "green");
  CHECK(e.task().blocks[1].position.y > green.y + 0.01);
  CHECK(e.task().blocks[0].position == cfg.task.blocks[0].position);
  CHECK(s.stimulating);
  CHECK(e.stats().active == 20);
}

TEST_CASE("replay is deterministic and the snapshot json is stable") {
  const EngineConfig cfg;
  const FactorCondition cond{false, true, true};
  const auto frames = synth::synthesize_operator(cond, cfg, 5);
  REQUIRE(frames.size() > 100);
  std::vector<std::string> a, b;
  Engine e1(cfg, cond, synth::default_calibration(cfg, 5));
  Engine e2(cfg, cond, synth::default_calibration(cfg, 5));
  const auto r1 = replay(e1, frames, [&](const EngineSnapshot& s) { a.push_back(snapshot_line(s)); });
  const auto r2 = replay(e2, frames, [&](const EngineSnapshot& s) { b.push_back(snapshot_line(s)); });
  CHECK(a == b);
  CHECK(to_json(r1).dump() == to_json(r2).dump());

  const auto j = nlohmann::json::parse(a.front());
  for (const char* key : {"tick", "t", "gate", "selected", "objects", "detectors", "thermal", "stimulating", "task",
                          "events"})
    CHECK(j.contains(key));
  CHECK(j["objects"].size() == 3);
  CHECK(j["thermal"].contains("forearm"));
  CHECK(j["gate"].contains("active"));

  const auto rep = to_json(r1);
  CHECK(rep["condition_label"] == "c=no,s=yes,e=yes");
  CHECK(rep["questionnaire"]["agency"]["items"].size() == 7);
}

TEST_CASE("condition labels") {
  CHECK(condition_label({true, false, true}) == "c=yes,s=no,e=yes");
  CHECK(condition_slug({true, false, true}) == "c1_s0_e1");
  for (int i = 0; i < kConditionCount; ++i) CHECK(FactorCondition::from_index(i).index() == i);
  CHECK(FactorCondition{true, true, false}.enabled_count() == 2);
}

TEST_CASE("heaters track the baseline and stay under the cap") {
  EngineConfig cfg;
  Engine e(cfg, {false, false, true});
  const Vec3 red = cfg.task.blocks[0].position;
  for (std::size_t n = 0; n < 90 * 30; ++n) {
    auto f = aiming_frame(cfg, n, red);
    f.skin_temp.celsius = {32.0, 39.0, 33.0};
    const auto s = e.tick(f);
    if (n == 0) {
      CHECK(s.thermal[0].setpoint == doctest::Approx(34.0));
      CHECK(s.thermal[1].setpoint == doctest::Approx(40.0));
    }
    for (const auto& th : s.thermal) CHECK(th.temp <= cfg.temp_cap + 0.2);
  }
  CHECK(e.stats().heater_on[0] > 0);
}
