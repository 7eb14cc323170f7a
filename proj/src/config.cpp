#include "telekinesis/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "telekinesis/errors.hpp"
#include "telekinesis/json_util.hpp"

namespace tk {

namespace {

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

}  // namespace

std::size_t EngineConfig::emg_batch_length(std::size_t tick) const {
  const auto r = static_cast<std::uint64_t>(emg_rate);
  const auto t = static_cast<std::uint64_t>(tick_rate);
  const std::uint64_t n = tick;
  return static_cast<std::size_t>(((n + 1) * r) / t - (n * r) / t);
}

std::size_t EngineConfig::dc_window_samples() const {
  return static_cast<std::size_t>(std::max(1.0, std::round(dc_window * emg_rate)));
}

void validate(const EngineConfig& c) {
  require(std::isfinite(c.k) && c.k > 0.0, "k must be > 0");
  require(c.sim_th >= -1.0 && c.sim_th <= 1.0, "sim_th must lie in [-1, 1]");
  require(std::isfinite(c.m_th) && c.m_th >= 0.0, "m_th must be >= 0");
  require(c.F_th > 0.0 && c.F_th < 1.0, "F_th must lie in (0, 1)");
  require(c.openness_th >= 0.0 && c.openness_th <= 1.0, "openness_th must lie in [0, 1]");
  require(c.gaze_half_angle > 0.0 && c.gaze_half_angle < 90.0, "gaze_half_angle must lie in (0, 90) degrees");
  require(std::isfinite(c.selection_hold) && c.selection_hold >= 0.0, "selection_hold must be >= 0");
  require(c.tick_rate > 0.0 && is_integral(c.tick_rate), "tick_rate must be a positive integer (Hz)");
  require(c.emg_rate > 0.0 && is_integral(c.emg_rate), "emg_rate must be a positive integer (Hz)");
  require(c.emg_rate >= c.tick_rate, "emg_rate must be >= tick_rate so every frame carries samples");
  require(std::isfinite(c.dc_window) && c.dc_window > 0.0, "dc_window must be > 0");
  require(c.blink_close_th >= 0.0 && c.blink_open_th <= 1.0, "blink thresholds must lie in [0, 1]");
  require(c.blink_close_th < c.blink_open_th, "blink_close_th must be < blink_open_th");
  require(std::isfinite(c.c_multiplier) && c.c_multiplier > 0.0, "c_multiplier must be > 0");
  require(c.window_blinks >= 1, "window_blinks must be >= 1");
  require(std::isfinite(c.gaze_reset) && c.gaze_reset >= 0.0, "gaze_reset must be >= 0");
  require(std::isfinite(c.temp_offset), "temp_offset must be finite");
  require(std::isfinite(c.temp_cap), "temp_cap must be finite");
  require(c.temp_cap <= 40.0, "temp_cap must not exceed 40 degC");
  require(std::isfinite(c.temp_hysteresis) && c.temp_hysteresis >= 0.0, "temp_hysteresis must be >= 0");
  require(std::isfinite(c.snap_tolerance) && c.snap_tolerance > 0.0, "snap_tolerance must be > 0");
  require(c.plant.tau_heat > 0.0 && c.plant.tau_cool > 0.0, "plant time constants must be > 0");
  require(std::isfinite(c.plant.heater_gain) && c.plant.heater_gain >= 0.0, "plant.heater_gain must be >= 0");

  const auto& task = c.task;
  require(!task.blocks.empty(), "task.blocks must not be empty");
  std::set<std::string> ids;
  for (const auto& b : task.blocks) {
    require(!b.id.empty(), "block ids must be non-empty");
    require(ids.insert(b.id).second, "duplicate block id '" + b.id + "'");
    require(is_finite(b.position), "block '" + b.id + "' position must be finite");
    require(b.half_extent.x > 0.0 && b.half_extent.y > 0.0 && b.half_extent.z > 0.0,
            "block '" + b.id + "' half_extent components must be > 0");
  }
  require(is_finite(task.target_base), "task.target_base must be finite");
  require(task.required_order.size() == task.blocks.size(), "task.required_order must list every block once");
  std::set<std::string> order(task.required_order.begin(), task.required_order.end());
  require(order == ids, "task.required_order must be a permutation of the block ids");
}

nlohmann::ordered_json to_json(const EngineConfig& c) {
  using jsonu::num;
  using jsonu::vec;
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (const auto& b : c.task.blocks)
    blocks.push_back({{"id", b.id}, {"position", vec(b.position)}, {"half_extent", vec(b.half_extent)}});
  return {
      {"version", 1},
      {"k", num(c.k)},
      {"sim_th", num(c.sim_th)},
      {"m_th", num(c.m_th)},
      {"F_th", num(c.F_th)},
      {"openness_th", num(c.openness_th)},
      {"gaze_half_angle", num(c.gaze_half_angle)},
      {"selection_hold", num(c.selection_hold)},
      {"tick_rate", num(c.tick_rate)},
      {"emg_rate", num(c.emg_rate)},
      {"dc_window", num(c.dc_window)},
      {"blink_close_th", num(c.blink_close_th)},
      {"blink_open_th", num(c.blink_open_th)},
      {"c_multiplier", num(c.c_multiplier)},
      {"window_blinks", c.window_blinks},
      {"gaze_reset", num(c.gaze_reset)},
      {"temp_offset", num(c.temp_offset)},
      {"temp_cap", num(c.temp_cap)},
      {"temp_hysteresis", num(c.temp_hysteresis)},
      {"snap_tolerance", num(c.snap_tolerance)},
      {"plant",
       {{"heater_gain", num(c.plant.heater_gain)},
        {"tau_heat", num(c.plant.tau_heat)},
        {"tau_cool", num(c.plant.tau_cool)}}},
      {"task",
       {{"blocks", blocks},
        {"target_base", vec(c.task.target_base)},
        {"required_order", c.task.required_order}}},
  };
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out, std::set<std::string>& seen) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  seen.insert(key);
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!seen.count(key)) throw ValidationError("config: unknown field '" + where + key + "'");
}

Vec3 take_vec(const nlohmann::json& j, const char* key) {
  try {
    return jsonu::read_vec(j, key);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

}  // namespace

EngineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  EngineConfig c;
  std::set<std::string> seen;
  int version = 1;
  take(j, "version", version, seen);
  if (version != 1) throw ValidationError("config: unsupported version " + std::to_string(version));
  take(j, "k", c.k, seen);
  take(j, "sim_th", c.sim_th, seen);
  take(j, "m_th", c.m_th, seen);
  take(j, "F_th", c.F_th, seen);
  take(j, "openness_th", c.openness_th, seen);
  take(j, "gaze_half_angle", c.gaze_half_angle, seen);
  take(j, "selection_hold", c.selection_hold, seen);
  take(j, "tick_rate", c.tick_rate, seen);
  take(j, "emg_rate", c.emg_rate, seen);
  take(j, "dc_window", c.dc_window, seen);
  take(j, "blink_close_th", c.blink_close_th, seen);
  take(j, "blink_open_th", c.blink_open_th, seen);
  take(j, "c_multiplier", c.c_multiplier, seen);
  take(j, "window_blinks", c.window_blinks, seen);
  take(j, "gaze_reset", c.gaze_reset, seen);
  take(j, "temp_offset", c.temp_offset, seen);
  take(j, "temp_cap", c.temp_cap, seen);
  take(j, "temp_hysteresis", c.temp_hysteresis, seen);
  take(j, "snap_tolerance", c.snap_tolerance, seen);

  if (const auto it = j.find("plant"); it != j.end()) {
    seen.insert("plant");
    if (!it->is_object()) throw ValidationError("config: 'plant' must be an object");
    std::set<std::string> ps;
    take(*it, "heater_gain", c.plant.heater_gain, ps);
    take(*it, "tau_heat", c.plant.tau_heat, ps);
    take(*it, "tau_cool", c.plant.tau_cool, ps);
    reject_unknown(*it, ps, "plant.");
  }

  if (const auto it = j.find("task"); it != j.end()) {
    seen.insert("task");
    if (!it->is_object()) throw ValidationError("config: 'task' must be an object");
    std::set<std::string> ts;
    if (const auto b = it->find("blocks"); b != it->end()) {
      ts.insert("blocks");
      if (!b->is_array()) throw ValidationError("config: 'task.blocks' must be an array");
      c.task.blocks.clear();
      for (const auto& bj : *b) {
        BlockSpec spec;
        std::set<std::string> bs{"position", "half_extent"};
        take(bj, "id", spec.id, bs);
        spec.position = take_vec(bj, "position");
        if (bj.contains("half_extent")) spec.half_extent = take_vec(bj, "half_extent");
        reject_unknown(bj, bs, "task.blocks[].");
        c.task.blocks.push_back(std::move(spec));
      }
    }
    if (it->contains("target_base")) {
      ts.insert("target_base");
      c.task.target_base = take_vec(*it, "target_base");
    }
    take(*it, "required_order", c.task.required_order, ts);
    reject_unknown(*it, ts, "task.");
  }

  reject_unknown(j, seen, "");
  validate(c);
  return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const EngineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file " + path.string());
  out << to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tk
