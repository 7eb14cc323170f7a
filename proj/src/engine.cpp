#include "telekinesis/engine.hpp"

#include <algorithm>
#include <cmath>

#include "telekinesis/errors.hpp"

namespace tk {

TelekinesisGate gate_step(const GateInputs& in, const FactorCondition& condition) {
  TelekinesisGate g;
  g.gaze_ok = in.gaze_on;
  g.palm_ok = in.palm_on;
  g.open_ok = in.hand_open;
  g.conc_ok = condition.concentration ? in.concentrated : true;
  g.strain_ok = condition.strain ? in.strained : true;
  g.active = g.gaze_ok && g.palm_ok && g.open_ok && g.conc_ok && g.strain_ok;
  return g;
}

bool palm_faces(const Vec3& palm_normal, const Vec3& hand_pos, const Vec3& object_pos) {
  const auto to_object = unit(object_pos - hand_pos);
  return to_object && dot(palm_normal, *to_object) > 0.0;
}

std::optional<std::size_t> select_target(const Vec3& gaze_origin, const Vec3& gaze_dir, const Vec3& palm_normal,
                                         const Vec3& hand_pos, std::span<const ObjectState> objects,
                                         double gaze_half_angle_deg) {
  std::optional<std::size_t> best;
  double best_angle = 0.0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (!bio::gaze_on_target(gaze_origin, gaze_dir, o, gaze_half_angle_deg)) continue;
    if (!palm_faces(palm_normal, hand_pos, o.position)) continue;
    const double a = angle_between(gaze_dir, o.position - gaze_origin);
    if (!best || a < best_angle) {
      best = i;
      best_angle = a;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

TaskState TaskState::from_layout(const TaskLayout& layout) {
  TaskState t;
  for (const auto& b : layout.blocks) t.blocks.push_back({b.id, b.position, b.half_extent, false});
  t.target_base = layout.target_base;
  t.required_order = layout.required_order;
  return t;
}

bool TaskState::is_stacked(std::string_view id) const {
  return std::find(stacked.begin(), stacked.end(), id) != stacked.end();
}

std::optional<std::size_t> TaskState::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].id == id) return i;
  return std::nullopt;
}

Vec3 TaskState::slot_center(std::size_t level) const {
  // Each block rests on the top face of the one below it.
  Vec3 c = target_base;
  for (std::size_t i = 0; i < level && i < required_order.size(); ++i) {
    const auto below = index_of(required_order[i]);
    const auto above = i + 1 < required_order.size() ? index_of(required_order[i + 1]) : below;
    if (below && above) c.y += blocks[*below].half_extent.y + blocks[*above].half_extent.y;
  }
  return c;
}

std::optional<Vec3> TaskState::next_slot() const {
  if (complete || stacked.size() >= required_order.size()) return std::nullopt;
  return slot_center(stacked.size());
}

std::optional<std::string> TaskState::next_required() const {
  if (complete || stacked.size() >= required_order.size()) return std::nullopt;
  return required_order[stacked.size()];
}

TaskState snap_check(TaskState task, const std::optional<std::string>& held_id, double tolerance, double t,
                     std::vector<SnapEvent>* events) {
  const auto next = task.next_required();
  if (!next) return task;
  if (held_id && *held_id == *next) return task;
  const auto idx = task.index_of(*next);
  if (!idx) return task;
  const Vec3 slot = task.slot_center(task.stacked.size());
  auto& block = task.blocks[*idx];
  if (distance(block.position, slot) > tolerance) return task;
  block.position = slot;
  task.stacked.push_back(*next);
  if (events) events->push_back({*next, task.stacked.size() - 1, t});
  if (task.stacked.size() == task.required_order.size()) {
    task.complete = true;
    task.completion_time = t;
  }
  return task;
}

// ---------------------------------------------------------------------------

Engine::Engine(EngineConfig cfg, FactorCondition condition, std::optional<bio::Calibration> calibration)
    : cfg_(std::move(cfg)),
      condition_(condition),
      calibration_(std::move(calibration)),
      manip_params_(manip::params_from(cfg_)),
      thermal_params_(thermal::control_params_from(cfg_)),
      blinks_(bio::blink_params_from(cfg_)),
      emg_(cfg_.dc_window_samples()),
      task_(TaskState::from_layout(cfg_.task)) {
  validate(cfg_);
  if (condition_.concentration && !calibration_)
    throw CalibrationError("the concentration condition needs a blink calibration");
  if (calibration_ && calibration_->emg) emg_.seed(*calibration_->emg);
}

std::vector<ObjectState> Engine::candidates() const {
  std::vector<ObjectState> out;
  for (const auto& b : task_.blocks)
    if (!task_.is_stacked(b.id)) out.push_back(b);
  return out;
}

EngineSnapshot Engine::tick(const SensorFrame& frame) {
  const double period = cfg_.tick_period();
  if (tick_ == 0) {
    t0_ = frame.t;
    for (Site s : kAllSites) {
      const auto i = static_cast<std::size_t>(s);
      const double base = frame.skin_temp[s];
      controllers_[i] = thermal::ThermalController::make(s, base, thermal_params_);
      plants_[i] = {base, base, cfg_.plant.tau_heat, cfg_.plant.tau_cool, cfg_.plant.heater_gain};
    }
  } else {
    const double expected = t0_ + static_cast<double>(tick_) * period;
    if (!(std::abs(frame.t - expected) <= 1e-3 * period))
      throw FrameOrderError("frame at t=" + std::to_string(frame.t) + " is not tick " + std::to_string(tick_) +
                            " (expected t=" + std::to_string(expected) + ")");
  }
  const double t = static_cast<double>(tick_) * period;

  const Vec3 hand = frame.hand_pos;
  const Vec3 gaze_dir = unit(frame.gaze_dir).value_or(frame.gaze_dir);
  const Vec3 palm = unit(frame.palm_normal).value_or(frame.palm_normal);

  // Geometry cues. Stickiness only breaks ties between blocks that all pass.
  const auto cands = candidates();
  bool gaze_on = false;
  for (const auto& o : cands) gaze_on = gaze_on || bio::gaze_on_target(frame.gaze_origin, gaze_dir, o, cfg_.gaze_half_angle);
  std::optional<std::string> target;
  if (selected_) {
    for (const auto& o : cands) {
      if (o.id == *selected_ && bio::gaze_on_target(frame.gaze_origin, gaze_dir, o, cfg_.gaze_half_angle) &&
          palm_faces(palm, hand, o.position))
        target = o.id;
    }
  }
  if (!target) {
    if (const auto i = select_target(frame.gaze_origin, gaze_dir, palm, hand, cands, cfg_.gaze_half_angle))
      target = cands[*i].id;
  }

  // Detectors.
  blinks_.step(frame.eye_openness, t, gaze_on);
  DetectorOutputs det;
  det.blink_mean = blinks_.ring_mean();
  det.blink_count = blinks_.intervals().size();
  det.concentrated = calibration_ && bio::concentration_state(blinks_, calibration_->concentration, gaze_on);
  const auto emg = emg_.step(frame.emg_batch);
  det.f = emg.f;
  det.f_prime = emg.f_prime;
  det.strained = bio::strain_state(emg.f_prime, cfg_.F_th);

  const TelekinesisGate gate = gate_step(
      {gaze_on, target.has_value(), frame.hand_openness > cfg_.openness_th, det.concentrated, det.strained},
      condition_);

  // Object follow.
  if (target) {
    const auto idx = *task_.index_of(*target);
    auto& block = task_.blocks[idx];
    if (manip_target_ != target) manip_ = manip::initial_state(last_hand_.value_or(hand), block.position);
    manip_.object_pos = block.position;
    manip_ = manip::step(manip_, hand, gate.active, manip_params_);
    block.position = manip_.object_pos;
    manip_target_ = target;
  } else {
    manip_target_.reset();
  }
  last_hand_ = hand;

  // Selection hold.
  if (gate.active) {
    selected_ = target;
    inactive_for_ = 0.0;
  } else {
    inactive_for_ += period;
    if (inactive_for_ > cfg_.selection_hold) selected_.reset();
  }

  // Heaters.
  EngineSnapshot snap;
  snap.stimulating = gate.active && condition_.energy;
  for (std::size_t i = 0; i < 3; ++i) {
    const double measured = plants_[i].temp;
    auto [ctrl, on] = thermal::controller_step(controllers_[i], measured, snap.stimulating, thermal_params_);
    controllers_[i] = ctrl;
    plants_[i] = thermal::plant_step(plants_[i], on, period);
    snap.thermal[i] = {measured, ctrl.setpoint, on};
    if (on) ++stats_.heater_on[i];
  }

  // Task.
  const double t_abs = t0_ + t;
  const auto held = gate.active ? target : std::nullopt;
  task_ = snap_check(std::move(task_), held, cfg_.snap_tolerance, t_abs, &snap.events);
  for (const auto& ev : snap.events) {
    if (selected_ == ev.id) selected_.reset();
    if (manip_target_ == ev.id) manip_target_.reset();
    stats_.snaps.push_back(ev);
  }
  if (!task_.complete) task_.elapsed = t + period;
  for (auto& b : task_.blocks) b.selected = selected_ && b.id == *selected_;

  ++stats_.ticks;
  stats_.gaze_ok += gate.gaze_ok;
  stats_.palm_ok += gate.palm_ok;
  stats_.open_ok += gate.open_ok;
  stats_.concentrated += det.concentrated;
  stats_.strained += det.strained;
  stats_.active += gate.active;
  stats_.stimulating += snap.stimulating;

  snap.tick = tick_;
  snap.t = t_abs;
  snap.gate = gate;
  snap.selected_object = selected_;
  snap.objects = task_.blocks;
  snap.detectors = det;
  snap.stacked = task_.stacked;
  snap.complete = task_.complete;
  snap.elapsed = task_.elapsed;
  ++tick_;
  return snap;
}

RunReport Engine::report() const {
  RunReport r;
  r.condition = condition_;
  r.complete = task_.complete;
  r.completion_time = task_.completion_time;
  r.duration = static_cast<double>(tick_) * cfg_.tick_period();
  r.stats = stats_;
  r.stacked = task_.stacked;
  return r;
}

}  // namespace tk
