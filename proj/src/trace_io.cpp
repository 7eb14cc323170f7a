#include "telekinesis/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "telekinesis/errors.hpp"
#include "telekinesis/json_util.hpp"
#include "telekinesis/numfmt.hpp"

namespace tk {

SensorFrame normalize(const SensorFrame& f) {
  SensorFrame n = f;
  n.t = canonical(f.t);
  n.hand_pos = canonical(f.hand_pos);
  n.palm_normal = canonical(f.palm_normal);
  n.hand_openness = canonical(f.hand_openness);
  n.gaze_origin = canonical(f.gaze_origin);
  n.gaze_dir = canonical(f.gaze_dir);
  n.eye_openness = canonical(f.eye_openness);
  for (auto& s : n.emg_batch) s = canonical(s);
  for (auto& c : n.skin_temp.celsius) c = canonical(c);
  return n;
}

nlohmann::ordered_json frame_to_json(const SensorFrame& f) {
  using jsonu::num;
  using jsonu::vec;
  nlohmann::ordered_json emg = nlohmann::ordered_json::array();
  for (double s : f.emg_batch) emg.push_back(num(s));
  nlohmann::ordered_json skin;
  for (Site s : kAllSites) skin[std::string(site_name(s))] = num(f.skin_temp[s]);
  return {
      {"t", num(f.t)},
      {"hand_pos", vec(f.hand_pos)},
      {"palm_normal", vec(f.palm_normal)},
      {"hand_openness", num(f.hand_openness)},
      {"gaze_origin", vec(f.gaze_origin)},
      {"gaze_dir", vec(f.gaze_dir)},
      {"eye_openness", num(f.eye_openness)},
      {"emg_batch", emg},
      {"skin_temp", skin},
  };
}

SensorFrame frame_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("frame must be a JSON object");
  SensorFrame f;
  f.t = jsonu::read_num(j, "t");
  f.hand_pos = jsonu::read_vec(j, "hand_pos");
  f.palm_normal = jsonu::read_vec(j, "palm_normal");
  f.hand_openness = jsonu::read_num(j, "hand_openness");
  f.gaze_origin = jsonu::read_vec(j, "gaze_origin");
  f.gaze_dir = jsonu::read_vec(j, "gaze_dir");
  f.eye_openness = jsonu::read_num(j, "eye_openness");
  const auto emg = j.find("emg_batch");
  if (emg == j.end() || !emg->is_array()) throw std::invalid_argument("missing or non-array field 'emg_batch'");
  f.emg_batch.reserve(emg->size());
  for (const auto& s : *emg) {
    if (!s.is_number()) throw std::invalid_argument("field 'emg_batch' must be numeric");
    f.emg_batch.push_back(s.get<double>());
  }
  const auto skin = j.find("skin_temp");
  if (skin == j.end() || !skin->is_object()) throw std::invalid_argument("missing or non-object field 'skin_temp'");
  for (Site s : kAllSites) f.skin_temp[s] = jsonu::read_num(*skin, site_name(s));
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known{"t",          "hand_pos",     "palm_normal", "hand_openness", "gaze_origin",
                                             "gaze_dir",   "eye_openness", "emg_batch",   "skin_temp",     "version"};
    if (!known.count(key)) throw std::invalid_argument("unknown field '" + key + "'");
  }
  return f;
}

namespace {

void check_frame(const SensorFrame& f, std::size_t line, std::size_t index, const EngineConfig& cfg) {
  auto fail = [line](const std::string& what) { throw ValidationError("frame " + std::to_string(line) + ": " + what); };
  if (!std::isfinite(f.t)) fail("t must be finite");
  if (!is_finite(f.hand_pos) || !is_finite(f.gaze_origin)) fail("positions must be finite");
  if (!is_finite(f.palm_normal) || !is_unit(f.palm_normal, kPersistedUnitTolerance)) fail("palm_normal must be a unit vector");
  if (!is_finite(f.gaze_dir) || !is_unit(f.gaze_dir, kPersistedUnitTolerance)) fail("gaze_dir must be a unit vector");
  if (!(f.hand_openness >= 0.0 && f.hand_openness <= 1.0)) fail("hand_openness must lie in [0, 1]");
  if (!(f.eye_openness >= 0.0 && f.eye_openness <= 1.0)) fail("eye_openness must lie in [0, 1]");
  const std::size_t want = cfg.emg_batch_length(index);
  if (f.emg_batch.size() != want)
    fail("emg_batch has " + std::to_string(f.emg_batch.size()) + " samples, expected " + std::to_string(want));
  for (double s : f.emg_batch)
    if (!std::isfinite(s)) fail("emg_batch samples must be finite");
  for (double c : f.skin_temp.celsius)
    if (!std::isfinite(c)) fail("skin_temp must be finite");
}

}  // namespace

void validate_trace(std::span<const SensorFrame> frames, const EngineConfig& cfg) {
  const double period = cfg.tick_period();
  const double slack = 1e-3 * period;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    check_frame(frames[i], i + 1, i, cfg);
    if (i > 0) {
      const double dt = frames[i].t - frames[i - 1].t;
      if (!(dt > 0.0)) throw ValidationError("frame " + std::to_string(i + 1) + ": t must strictly increase");
      const double expected = frames[0].t + static_cast<double>(i) * period;
      if (std::abs(frames[i].t - expected) > slack)
        throw ValidationError("frame " + std::to_string(i + 1) + ": t is not one tick after the previous frame");
    }
  }
}

std::vector<SensorFrame> read_trace(std::istream& in, const EngineConfig& cfg) {
  std::vector<SensorFrame> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError("empty line", lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    try {
      frames.push_back(frame_from_json(j));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  validate_trace(frames, cfg);
  return frames;
}

std::vector<SensorFrame> load_trace(const std::filesystem::path& path, const EngineConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file " + path.string());
  return read_trace(in, cfg);
}

void write_trace(std::ostream& out, std::span<const SensorFrame> frames) {
  for (const auto& f : frames) out << frame_to_json(f).dump() << '\n';
}

void save_trace(std::span<const SensorFrame> frames, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace file " + path.string());
  write_trace(out, frames);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tk
