#include "telekinesis/commands.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>

#include "telekinesis/analysis.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/operator.hpp"
#include "telekinesis/rng.hpp"
#include "telekinesis/trace_io.hpp"

namespace tk::cli {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  s = first == std::string_view::npos ? std::string_view{} : s.substr(first, s.find_last_not_of(" \t") - first + 1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

FactorCondition parse_condition(std::string_view text) {
  FactorCondition c;
  std::string s(text);
  if (s.empty()) return c;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    start = comma == std::string::npos ? s.size() + 1 : comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("condition item '" + item + "' must look like key=yes|no");
    const std::string key = lower(item.substr(0, eq));
    const std::string val = lower(item.substr(eq + 1));
    bool on;
    if (val == "yes" || val == "true" || val == "1" || val == "on") {
      on = true;
    } else if (val == "no" || val == "false" || val == "0" || val == "off") {
      on = false;
    } else {
      throw UsageError("condition value '" + item.substr(eq + 1) + "' must be yes or no");
    }
    if (key == "c" || key == "concentration") {
      c.concentration = on;
    } else if (key == "s" || key == "strain") {
      c.strain = on;
    } else if (key == "e" || key == "energy") {
      c.energy = on;
    } else {
      throw UsageError("unknown condition key '" + item.substr(0, eq) + "' (expected c, s or e)");
    }
  }
  return c;
}

void RunManifest::check() const {
  if (trace_path.has_value() == seed.has_value())
    throw UsageError("give exactly one of --trace or --seed");
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  auto opt_path = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json(nullptr);
  };
  return {
      {"version", 1},
      {"config", opt_path(m.config_path)},
      {"condition", tk::to_json(m.condition)},
      {"trace", opt_path(m.trace_path)},
      {"seed", m.seed ? nlohmann::ordered_json(*m.seed) : nlohmann::ordered_json(nullptr)},
      {"calibration", opt_path(m.calibration_path)},
      {"out", m.out_dir.string()},
      {"reports", {std::string(kSnapshotsFile), std::string(kReportFile)}},
  };
}

EngineConfig resolve_config(const std::optional<fs::path>& path) {
  if (!path) return EngineConfig{};
  return load_config(*path);
}

bio::Calibration cmd_calibrate(const fs::path& trace, const fs::path& out, const std::optional<fs::path>& config_path) {
  const EngineConfig cfg = resolve_config(config_path);
  const auto frames = load_trace(trace, cfg);
  const auto calib = bio::calibrate_trace(frames, cfg);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  bio::save_calibration(calib, out);
  // Hand back the persisted numbers.
  return bio::calibration_from_json(nlohmann::json::parse(bio::to_json(calib).dump()));
}

RunOutcome run_frames(const EngineConfig& cfg, const FactorCondition& condition,
                      const std::optional<bio::Calibration>& calibration, std::span<const SensorFrame> frames,
                      const fs::path& out_dir) {
  ensure_dir(out_dir);
  Engine engine(cfg, condition, calibration);
  RunOutcome outcome;
  outcome.snapshots = out_dir / kSnapshotsFile;
  outcome.report_path = out_dir / kReportFile;
  std::ofstream snaps(outcome.snapshots, std::ios::binary);
  if (!snaps) throw IoError("cannot write " + outcome.snapshots.string());
  outcome.report = replay(engine, frames, [&](const EngineSnapshot& s) { snaps << snapshot_line(s) << '\n'; });
  snaps.flush();
  if (!snaps) throw IoError("write failed for " + outcome.snapshots.string());
  write_json_file(outcome.report_path, tk::to_json(outcome.report));
  return outcome;
}

RunOutcome cmd_run(const RunManifest& manifest) {
  manifest.check();
  const EngineConfig cfg = resolve_config(manifest.config_path);
  std::optional<bio::Calibration> calib;
  if (manifest.calibration_path) calib = bio::load_calibration(*manifest.calibration_path);

  ensure_dir(manifest.out_dir);
  write_json_file(manifest.out_dir / kManifestFile, to_json(manifest));

  if (!calib && (manifest.condition.concentration || manifest.condition.strain))
    throw CalibrationError("condition " + condition_label(manifest.condition) +
                           " needs a calibration file (--calibration)");
  std::vector<SensorFrame> frames;
  if (manifest.trace_path) {
    frames = load_trace(*manifest.trace_path, cfg);
  } else {
    frames = synth::synthesize_operator(manifest.condition, cfg, *manifest.seed,
                                        calib ? calib : std::optional(synth::default_calibration(cfg, *manifest.seed)));
    save_trace(frames, manifest.out_dir / kTraceFile);
  }
  return run_frames(cfg, manifest.condition, calib, frames, manifest.out_dir);
}

std::vector<FactorCondition> condition_order(std::uint64_t master_seed) {
  std::vector<FactorCondition> order;
  for (int i = 0; i < kConditionCount; ++i) order.push_back(FactorCondition::from_index(i));
  Rng rng(derive_seed(master_seed, 0xBA7C));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  return order;
}

std::uint64_t condition_seed(std::uint64_t master_seed, const FactorCondition& c) {
  return derive_seed(master_seed, 0xC0DE00 + static_cast<std::uint64_t>(c.index()));
}

BatchOutcome cmd_batch(const std::optional<fs::path>& config_path, std::uint64_t master_seed, const fs::path& out_dir,
                       bool parallel) {
  ensure_dir(out_dir);
  BatchOutcome batch;
  batch.order = condition_order(master_seed);

  // One resting calibration shared by every condition, as for a participant.
  const EngineConfig cfg = resolve_config(config_path);
  const fs::path calib_path = out_dir / kCalibrationFile;
  const fs::path rest_path = out_dir / "calibration_trace.jsonl";
  save_trace(synth::synthesize_calibration(cfg, derive_seed(master_seed, 0xCA1B)), rest_path);
  cmd_calibrate(rest_path, calib_path, config_path);

  auto run_one = [&](const FactorCondition& c) {
    RunManifest m;
    m.calibration_path = calib_path;
    m.config_path = config_path;
    m.condition = c;
    m.seed = condition_seed(master_seed, c);
    m.out_dir = out_dir / condition_slug(c);
    return cmd_run(m);
  };

  if (parallel) {
    std::vector<std::future<RunOutcome>> futures;
    for (const auto& c : batch.order) futures.push_back(std::async(std::launch::async, run_one, c));
    for (auto& f : futures) batch.runs.push_back(f.get());
  } else {
    for (const auto& c : batch.order) batch.runs.push_back(run_one(c));
  }

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < batch.order.size(); ++i) {
    const auto& c = batch.order[i];
    runs.push_back({{"position", i},
                    {"condition", tk::to_json(c)},
                    {"label", condition_label(c)},
                    {"seed", condition_seed(master_seed, c)},
                    {"dir", condition_slug(c)},
                    {"complete", batch.runs[i].report.complete}});
  }
  write_json_file(out_dir / "batch.json",
                  {{"version", 1}, {"master_seed", master_seed}, {"runs", runs}});
  return batch;
}

nlohmann::ordered_json cmd_analyze(const fs::path& csv, const std::optional<fs::path>& out) {
  const auto table = stats::load_observations(csv);
  const auto result = stats::art_anova(table);
  auto j = stats::to_json(result, "aligned rank transform + three-way anova");
  if (out) {
    if (out->has_parent_path()) ensure_dir(out->parent_path());
    write_json_file(*out, j);
  }
  return j;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  return kExitRuntime;
}

}  // namespace tk::cli
