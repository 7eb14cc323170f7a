#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "telekinesis/numfmt.hpp"
#include "telekinesis/vec3.hpp"

namespace tk::jsonu {

using ojson = nlohmann::ordered_json;

inline double num(double v) { return canonical(v); }

inline ojson vec(const Vec3& v) { return ojson::array({canonical(v.x), canonical(v.y), canonical(v.z)}); }

// Reads a 3-element numeric array; throws std::invalid_argument on shape errors.
Vec3 read_vec(const nlohmann::json& j, std::string_view field);

double read_num(const nlohmann::json& j, std::string_view field);

// Compact single-line dump, the one text form used for every persisted file.
inline std::string dump(const ojson& j) { return j.dump(); }

}  // namespace tk::jsonu
