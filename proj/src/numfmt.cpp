#include "telekinesis/numfmt.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "telekinesis/json_util.hpp"

namespace tk {

double canonical(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

namespace jsonu {

Vec3 read_vec(const nlohmann::json& j, std::string_view field) {
  const auto it = j.find(field);
  if (it == j.end()) throw std::invalid_argument("missing field '" + std::string(field) + "'");
  if (!it->is_array() || it->size() != 3)
    throw std::invalid_argument("field '" + std::string(field) + "' must be a 3-element array");
  for (const auto& c : *it)
    if (!c.is_number()) throw std::invalid_argument("field '" + std::string(field) + "' must be numeric");
  return {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
}

double read_num(const nlohmann::json& j, std::string_view field) {
  const auto it = j.find(field);
  if (it == j.end()) throw std::invalid_argument("missing field '" + std::string(field) + "'");
  if (!it->is_number()) throw std::invalid_argument("field '" + std::string(field) + "' must be numeric");
  return it->get<double>();
}

}  // namespace jsonu
}  // namespace tk
