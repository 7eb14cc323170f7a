#include "telekinesis/manipulation.hpp"

#include <cmath>

#include "telekinesis/config.hpp"

namespace tk::manip {

Params params_from(const EngineConfig& cfg) { return {cfg.k, cfg.sim_th, cfg.m_th}; }

ManipulationState initial_state(const Vec3& hand, const Vec3& object_pos) {
  return {hand, 0.0, Vec3{}, object_pos};
}

MotionDecomposition decompose_motion(const Vec3& h_t, const ManipulationState& state) {
  const Vec3 dh = h_t - state.prev_hand;
  const auto axis = unit(state.object_pos - h_t);
  if (!axis) return {0.0, norm(dh), 1};
  const double along = dot(dh, *axis);
  return {std::abs(along), norm(dh - along * *axis), along > 0.0 ? -1 : 1};
}

bool similarity(const Vec3& dir, const Vec3& prev_dir, double sim_th) {
  if (is_zero(dir) || is_zero(prev_dir)) return false;
  return dot(dir, prev_dir) > sim_th;
}

double effective_magnitude(double m_raw, const ManipulationState& state, bool sim) {
  return (state.prev_m > m_raw && sim) ? state.prev_m : m_raw;
}

Vec3 select_direction(const Vec3& h_t, const ManipulationState& state, const MotionDecomposition& dec, double m_th) {
  if (dec.m_d > dec.m_vh && dec.m_d > m_th) {
    if (const auto u = unit(state.object_pos - h_t)) return static_cast<double>(dec.D) * *u;
  } else if (dec.m_vh > dec.m_d && dec.m_vh > m_th) {
    if (const auto u = unit(h_t - state.prev_hand)) return *u;
  }
  return state.prev_dir;
}

double speed(double m_eff, const Vec3& h_t, const Vec3& object_pos) { return m_eff * distance(object_pos, h_t); }

Vec3 displacement(double k, double s, const Vec3& dir) { return (k * s) * dir; }

StepResult step_detailed(const ManipulationState& state, const Vec3& h_t, bool active, const Params& p) {
  StepResult r;
  r.m_raw = norm(h_t - state.prev_hand);
  if (!active) {
    r.state = {h_t, 0.0, Vec3{}, state.object_pos};
    return r;
  }
  const MotionDecomposition dec = decompose_motion(h_t, state);
  r.dir = select_direction(h_t, state, dec, p.m_th);
  r.sim = similarity(r.dir, state.prev_dir, p.sim_th);
  r.m_eff = effective_magnitude(r.m_raw, state, r.sim);
  const double s = speed(r.m_eff, h_t, state.object_pos);
  r.delta = displacement(p.k, s, r.dir);
  r.state = {h_t, r.m_eff, r.dir, state.object_pos + r.delta};
  return r;
}

}  // namespace tk::manip
