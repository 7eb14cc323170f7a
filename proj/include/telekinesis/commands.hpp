#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/biosignal.hpp"
#include "telekinesis/config.hpp"
#include "telekinesis/engine.hpp"
#include "telekinesis/types.hpp"

namespace tk::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitRuntime = 4;

// "c=yes,s=no,e=yes". Keys c/concentration, s/strain, e/energy; values
// yes/no/true/false/1/0. Omitted keys default to no. Unknown keys throw UsageError.
FactorCondition parse_condition(std::string_view text);

struct RunManifest {
  std::optional<std::filesystem::path> config_path;
  FactorCondition condition;
  std::optional<std::filesystem::path> trace_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> calibration_path;
  std::filesystem::path out_dir = "out";

  // Exactly one of trace_path / seed. Throws UsageError.
  void check() const;
};

nlohmann::ordered_json to_json(const RunManifest& m);

EngineConfig resolve_config(const std::optional<std::filesystem::path>& path);

// Output file names inside a run directory.
inline constexpr std::string_view kSnapshotsFile = "snapshots.jsonl";
inline constexpr std::string_view kReportFile = "report.json";
inline constexpr std::string_view kTraceFile = "trace.jsonl";
inline constexpr std::string_view kCalibrationFile = "calibration.json";
inline constexpr std::string_view kManifestFile = "manifest.json";

// Calibrates from the first 60 s of a resting trace and writes the JSON file.
bio::Calibration cmd_calibrate(const std::filesystem::path& trace, const std::filesystem::path& out,
                               const std::optional<std::filesystem::path>& config_path = std::nullopt);

struct RunOutcome {
  RunReport report;
  std::filesystem::path snapshots;
  std::filesystem::path report_path;
};

// Runs the engine over a recorded trace, or over a synthesized operator when
// a seed is given. Conditions with concentration or strain need a calibration
// file; without one the synthesized operator paces itself on the resting
// calibration of its own seed.
RunOutcome cmd_run(const RunManifest& manifest);

// Replays frames and writes snapshots + report into out_dir.
RunOutcome run_frames(const EngineConfig& cfg, const FactorCondition& condition,
                      const std::optional<bio::Calibration>& calibration, std::span<const SensorFrame> frames,
                      const std::filesystem::path& out_dir);

struct BatchOutcome {
  std::vector<FactorCondition> order;  // execution order
  std::vector<RunOutcome> runs;        // in execution order
};

// Fisher-Yates permutation of the 8 conditions drawn from the master seed.
std::vector<FactorCondition> condition_order(std::uint64_t master_seed);

// Per-condition operator seed, independent of where the condition falls in the order.
std::uint64_t condition_seed(std::uint64_t master_seed, const FactorCondition& c);

// Synthesizes and calibrates one resting trace for the batch, then runs all
// eight conditions against it, each in its own directory.
BatchOutcome cmd_batch(const std::optional<std::filesystem::path>& config_path, std::uint64_t master_seed,
                       const std::filesystem::path& out_dir, bool parallel = true);

// ART ANOVA of a CSV table; writes the JSON report and returns it.
nlohmann::ordered_json cmd_analyze(const std::filesystem::path& csv, const std::optional<std::filesystem::path>& out);

// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

}  // namespace tk::cli
