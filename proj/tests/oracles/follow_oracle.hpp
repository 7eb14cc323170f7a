#pragma once

// Straight-line transcription of the object-follow law on plain arrays,
// kept independent of the library's Vec3 and manipulation code.

#include <array>
#include <cmath>

namespace oracle {

using V = std::array<double, 3>;

inline double dot3(const V& a, const V& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double len3(const V& a) { return std::sqrt(dot3(a, a)); }
inline V sub3(const V& a, const V& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline V scale3(double s, const V& a) { return {s * a[0], s * a[1], s * a[2]}; }

struct FollowOracle {
  double k = 1.0;
  double sim_th = 0.7;
  double m_th = 0.002;

  V h_prev{};
  double m_prev = 0.0;
  V dir_prev{};  // {0,0,0} means "no direction yet"
  V x{};

  void reset(const V& hand, const V& object) {
    h_prev = hand;
    m_prev = 0.0;
    dir_prev = {0.0, 0.0, 0.0};
    x = object;
  }

  void step(const V& h, bool active) {
    if (!active) {
      h_prev = h;
      m_prev = 0.0;
      dir_prev = {0.0, 0.0, 0.0};
      return;
    }
    const V dh = sub3(h, h_prev);
    const V to_obj = sub3(x, h);
    const double dist = len3(to_obj);

    double m_d = 0.0;
    double m_vh = len3(dh);
    double D = 1.0;
    V a{0.0, 0.0, 0.0};
    if (dist > 0.0) {
      a = scale3(1.0 / dist, to_obj);
      const double p = dot3(dh, a);
      m_d = std::fabs(p);
      m_vh = len3(sub3(dh, scale3(p, a)));
      D = p > 0.0 ? -1.0 : 1.0;
    }

    V dir = dir_prev;
    if (m_d > m_vh && m_d > m_th) {
      if (dist > 0.0) dir = scale3(D, a);
    } else if (m_vh > m_d && m_vh > m_th) {
      const double n = len3(dh);
      if (n > 0.0) dir = scale3(1.0 / n, dh);
    }

    const bool prev_zero = dir_prev[0] == 0.0 && dir_prev[1] == 0.0 && dir_prev[2] == 0.0;
    const bool dir_zero = dir[0] == 0.0 && dir[1] == 0.0 && dir[2] == 0.0;
    const bool sim = !prev_zero && !dir_zero && dot3(dir, dir_prev) > sim_th;

    const double m_raw = len3(dh);
    const double m = (m_prev > m_raw && sim) ? m_prev : m_raw;
    const double s = m * dist;
    for (int i = 0; i < 3; ++i) x[i] += k * s * dir[i];

    h_prev = h;
    m_prev = m;
    dir_prev = dir;
  }
};

}  // namespace oracle
