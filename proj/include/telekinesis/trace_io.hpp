#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telekinesis/config.hpp"
#include "telekinesis/types.hpp"

namespace tk {

// Tolerance on the norm of unit vectors read back from 9-digit text.
inline constexpr double kPersistedUnitTolerance = 1e-6;

// Rounds every number in the frame to the persisted precision.
SensorFrame normalize(const SensorFrame& f);

nlohmann::ordered_json frame_to_json(const SensorFrame& f);
SensorFrame frame_from_json(const nlohmann::json& j);

// Checks a frame sequence against the SensorFrame invariants for the given
// rates: finite fields, unit directions, openness in [0,1], one tick between
// consecutive timestamps, and EMG batch lengths following the sample schedule.
// Throws ValidationError naming the offending (1-based) frame.
void validate_trace(std::span<const SensorFrame> frames, const EngineConfig& cfg = {});

// JSONL, one frame per line. Blank lines are not allowed.
std::vector<SensorFrame> read_trace(std::istream& in, const EngineConfig& cfg = {});
std::vector<SensorFrame> load_trace(const std::filesystem::path& path, const EngineConfig& cfg = {});

void write_trace(std::ostream& out, std::span<const SensorFrame> frames);
void save_trace(std::span<const SensorFrame> frames, const std::filesystem::path& path);

}  // namespace tk
