#pragma once

#include "telekinesis/vec3.hpp"

namespace tk {

// Number of significant decimal digits used by every persisted format.
inline constexpr int kSignificantDigits = 9;

// Rounds v to kSignificantDigits significant digits. Idempotent; maps -0 to 0.
double canonical(double v);

inline Vec3 canonical(const Vec3& v) { return {canonical(v.x), canonical(v.y), canonical(v.z)}; }

}  // namespace tk
