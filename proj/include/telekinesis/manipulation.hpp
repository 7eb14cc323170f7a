#pragma once

#include "telekinesis/vec3.hpp"

namespace tk {

struct EngineConfig;

// Per-tick object-follow law. The object's step is k * s * dir where the
// speed s is the (held) hand movement times the hand-object distance and dir
// comes from either the depth axis or the transverse hand motion.
namespace manip {

struct ManipulationState {
  Vec3 prev_hand;    // hand position on the previous tick
  double prev_m = 0.0;  // effective movement magnitude on the previous tick (m/tick)
  Vec3 prev_dir;     // previous direction, unit or the zero sentinel
  Vec3 object_pos;   // object position after the previous tick

  friend bool operator==(const ManipulationState&, const ManipulationState&) = default;
};

struct MotionDecomposition {
  double m_d = 0.0;   // movement along the hand-object (depth) axis
  double m_vh = 0.0;  // movement across it
  int D = 1;          // +1 pushes the object away, -1 pulls it in
};

struct Params {
  double k = 1.0;
  double sim_th = 0.7;
  double m_th = 0.002;
};

Params params_from(const EngineConfig& cfg);

// Starting state for a freshly selected object: no held magnitude, no direction.
ManipulationState initial_state(const Vec3& hand, const Vec3& object_pos);

// Splits the hand step h_t - prev_hand into components along and across the
// axis from h_t toward the object. Moving the hand toward the object gives
// D = -1 (pull); away or purely sideways gives D = +1.
MotionDecomposition decompose_motion(const Vec3& h_t, const ManipulationState& state);

// True iff dir . prev_dir > sim_th. Either input being the zero sentinel gives false.
bool similarity(const Vec3& dir, const Vec3& prev_dir, double sim_th);

// Holds the previous magnitude while the hand slows down along a similar direction.
double effective_magnitude(double m_raw, const ManipulationState& state, bool sim);

Vec3 select_direction(const Vec3& h_t, const ManipulationState& state, const MotionDecomposition& dec, double m_th);

double speed(double m_eff, const Vec3& h_t, const Vec3& object_pos);

Vec3 displacement(double k, double s, const Vec3& dir);

struct StepResult {
  ManipulationState state;
  double m_raw = 0.0;
  double m_eff = 0.0;
  bool sim = false;
  Vec3 dir;
  Vec3 delta;
};

StepResult step_detailed(const ManipulationState& state, const Vec3& h_t, bool active, const Params& p);

inline ManipulationState step(const ManipulationState& state, const Vec3& h_t, bool active, const Params& p) {
  return step_detailed(state, h_t, active, p).state;
}

}  // namespace manip
}  // namespace tk
