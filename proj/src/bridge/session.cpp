#include "telekinesis/bridge/session.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "telekinesis/commands.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/json_util.hpp"
#include "telekinesis/rng.hpp"
#include "telekinesis/trace_io.hpp"

namespace tk::bridge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Malformed client data; becomes an error message and closes the session.
struct Malformed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kLiveBlinkMean = 3.0;  // s

std::string dump(const ojson& j) { return j.dump(); }

bool read_bool(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw Malformed(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

double read_unit_interval(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw Malformed(std::string(key) + " must be a number");
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) throw Malformed(std::string(key) + " must lie in [0, 1]");
  return x;
}

Vec3 read_point(const nlohmann::json& j, const char* key) {
  try {
    return jsonu::read_vec(j, key);
  } catch (const std::invalid_argument& e) {
    throw Malformed(e.what());
  }
}

void reject_unknown(const nlohmann::json& msg, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : msg.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Malformed("unexpected field '" + key + "' in " + msg.at("kind").get<std::string>() + " message");
  }
}

FactorCondition read_condition(const nlohmann::json& j) {
  if (j.is_string()) {
    try {
      return cli::parse_condition(j.get<std::string>());
    } catch (const UsageError& e) {
      throw Malformed(e.what());
    }
  }
  if (!j.is_object()) throw Malformed("condition must be an object or a c=..,s=..,e=.. string");
  FactorCondition c;
  for (const auto& [key, _] : j.items()) {
    if (key != "concentration" && key != "strain" && key != "energy")
      throw Malformed("unknown condition key '" + key + "'");
  }
  if (j.contains("concentration")) c.concentration = read_bool(j, "concentration");
  if (j.contains("strain")) c.strain = read_bool(j, "strain");
  if (j.contains("energy")) c.energy = read_bool(j, "energy");
  return c;
}

// Round trip through the persisted form so a replay from files sees exactly
// the same numbers as the live engine.
EngineConfig canonical_config(const EngineConfig& cfg) { return config_from_json(nlohmann::json::parse(to_json(cfg).dump())); }

bio::Calibration canonical_calibration(const bio::Calibration& c) {
  return bio::calibration_from_json(nlohmann::json::parse(bio::to_json(c).dump()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string error_message(std::string_view text) {
  return dump(ojson{{"kind", "error"}, {"message", std::string(text)}});
}

bio::EmgCalibration live_emg_calibration(const EngineConfig& cfg, std::uint64_t seed) {
  synth::EmgSynth emg(derive_seed(seed, 40), cfg.emg_rate);
  bio::EmgPipeline pipe(cfg.dc_window_samples());
  const auto pass_ticks = static_cast<std::size_t>(std::llround(2.0 / cfg.tick_period()));
  for (std::size_t n = 0; n < 2 * pass_ticks; ++n) {
    const double level = n < pass_ticks ? 0.0 : 1.0;
    pipe.step(emg.batch(cfg.emg_batch_length(n), level));
  }
  return *pipe.extrema();
}

bio::Calibration live_calibration(const EngineConfig& cfg, std::uint64_t seed) {
  bio::Calibration c;
  c.concentration = bio::calibrate_intervals(std::vector<double>{kLiveBlinkMean, kLiveBlinkMean}, cfg.c_multiplier);
  c.emg = live_emg_calibration(cfg, seed);
  return c;
}

Session::Session(SessionOptions options)
    : options_(std::move(options)), config_(options_.base_config), seed_(options_.default_seed) {}

std::vector<std::string> Session::handle(std::string_view text) {
  if (closed_) return {};
  try {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!msg.is_object()) throw Malformed("message must be a JSON object");
    if (!msg.contains("kind") || !msg["kind"].is_string()) throw Malformed("message needs a string 'kind'");
    const auto kind = msg["kind"].get<std::string>();
    if (kind == "hello") {
      reject_unknown(msg, {"kind", "client"});
      return {};
    }
    if (kind == "configure") return configure(msg);
    if (kind == "input") return apply_input(msg);
    if (kind == "reset") {
      reject_unknown(msg, {"kind"});
      if (!configured()) return {error_message("reset before configure")};
      flush_recording();
      restart();
      return {};
    }
    throw Malformed("unknown message kind '" + kind + "'");
  } catch (const Malformed& e) {
    closed_ = true;
    return {error_message(e.what())};
  } catch (const nlohmann::json::exception& e) {
    closed_ = true;
    return {error_message(std::string("malformed message: ") + e.what())};
  }
}

std::vector<std::string> Session::configure(const nlohmann::json& msg) {
  reject_unknown(msg, {"kind", "condition", "config", "calibration", "snapshot_rate", "seed"});

  FactorCondition condition;
  if (msg.contains("condition")) condition = read_condition(msg["condition"]);

  EngineConfig cfg = options_.base_config;
  if (msg.contains("config")) {
    if (!msg["config"].is_object()) throw Malformed("config must be an object");
    nlohmann::json merged = nlohmann::json::parse(to_json(cfg).dump());
    merged.merge_patch(msg["config"]);
    try {
      cfg = config_from_json(merged);
    } catch (const ValidationError& e) {
      throw Malformed(e.what());
    }
  }
  cfg = canonical_config(cfg);

  std::uint64_t seed = options_.default_seed;
  if (msg.contains("seed")) {
    if (!msg["seed"].is_number_unsigned()) throw Malformed("seed must be a non-negative integer");
    seed = msg["seed"].get<std::uint64_t>();
  }

  bio::Calibration calib;
  if (msg.contains("calibration")) {
    try {
      calib = bio::calibration_from_json(msg["calibration"]);
    } catch (const ValidationError& e) {
      throw Malformed(e.what());
    }
    if (!calib.emg) calib.emg = live_emg_calibration(cfg, seed);
  } else {
    calib = live_calibration(cfg, seed);
  }

  std::size_t stride = 1;
  if (msg.contains("snapshot_rate")) {
    const auto& r = msg["snapshot_rate"];
    if (!r.is_number() || !(r.get<double>() > 0.0)) throw Malformed("snapshot_rate must be a positive number");
    stride = static_cast<std::size_t>(std::max(1.0, std::round(cfg.tick_rate / r.get<double>())));
  }

  if (configured()) flush_recording();
  config_ = cfg;
  condition_ = condition;
  calibration_ = canonical_calibration(calib);
  seed_ = seed;
  stride_ = stride;
  restart();
  return {};
}

std::vector<std::string> Session::apply_input(const nlohmann::json& msg) {
  reject_unknown(msg, {"kind", "hand_delta", "openness", "blink", "strain", "gaze_point"});
  // Validate everything before touching state.
  LiveInput next = input_;
  if (msg.contains("hand_delta")) next.hand = next.hand + read_point(msg, "hand_delta");
  if (msg.contains("openness")) next.openness = read_unit_interval(msg, "openness");
  if (msg.contains("strain")) next.strain = read_unit_interval(msg, "strain");
  if (msg.contains("gaze_point")) next.gaze_point = read_point(msg, "gaze_point");
  if (msg.contains("blink") && read_bool(msg, "blink")) next.blink_pending = true;
  if (!configured()) return {error_message("input before configure")};
  input_ = next;
  return {};
}

void Session::restart() {
  engine_.emplace(config_, condition_, calibration_);
  emg_.emplace(derive_seed(seed_, 41), config_.emg_rate);
  eye_.emplace(derive_seed(seed_, 42));
  input_ = LiveInput{};
  frames_.clear();
  tick_ = 0;
  completed_sent_ = false;
}

SensorFrame Session::next_frame() const {
  // Work on copies so this stays side-effect free.
  auto emg = *emg_;
  auto eye = *eye_;
  if (input_.blink_pending) eye.trigger();
  SensorFrame f;
  f.t = static_cast<double>(tick_) * config_.tick_period();
  f.hand_pos = input_.hand;
  f.palm_normal = unit(input_.gaze_point - input_.hand).value_or(Vec3{0.0, 0.0, 1.0});
  f.hand_openness = input_.openness;
  f.gaze_origin = synth::kHeadPosition;
  f.gaze_dir = unit(input_.gaze_point - synth::kHeadPosition).value_or(Vec3{0.0, 0.0, 1.0});
  f.eye_openness = eye.next();
  f.emg_batch = emg.batch(config_.emg_batch_length(tick_), input_.strain);
  return normalize(f);
}

std::vector<std::string> Session::tick() {
  if (!configured() || closed_) return {};
  const SensorFrame frame = next_frame();
  // Advance the generators the same way next_frame did.
  if (input_.blink_pending) eye_->trigger();
  eye_->next();
  emg_->batch(config_.emg_batch_length(tick_), input_.strain);
  input_.blink_pending = false;

  const EngineSnapshot snap = engine_->tick(frame);
  frames_.push_back(frame);

  std::vector<std::string> out;
  if (tick_ % stride_ == 0) out.push_back(dump(ojson{{"kind", "snapshot"}, {"snapshot", to_json(snap)}}));
  for (const auto& e : snap.events) {
    out.push_back(dump(ojson{{"kind", "task_event"},
                             {"event", "snap"},
                             {"id", e.id},
                             {"level", e.level},
                             {"t", jsonu::num(e.t)}}));
  }
  if (snap.complete && !completed_sent_) {
    completed_sent_ = true;
    out.push_back(dump(ojson{{"kind", "task_event"},
                             {"event", "complete"},
                             {"t", jsonu::num(snap.t)},
                             {"elapsed", jsonu::num(snap.elapsed)}}));
  }
  ++tick_;
  return out;
}

void Session::write_recording(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  save_trace(frames_, dir / cli::kTraceFile);
  if (calibration_) bio::save_calibration(*calibration_, dir / cli::kCalibrationFile);
  save_config(config_, dir / "config.json");
  write_text(dir / cli::kManifestFile, ojson{{"version", 1},
                                             {"source", "bridge"},
                                             {"condition", to_json(condition_)},
                                             {"label", condition_label(condition_)},
                                             {"seed", seed_},
                                             {"ticks", frames_.size()}}
                                           .dump(2));
}

std::optional<fs::path> Session::flush_recording() {
  if (!options_.record_dir || frames_.empty()) return std::nullopt;
  const fs::path dir = *options_.record_dir / ("recording-" + std::to_string(recordings_++));
  write_recording(dir);
  return dir;
}

}  // namespace tk::bridge
