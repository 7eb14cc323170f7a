#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "telekinesis/analysis.hpp"
#include "telekinesis/biosignal.hpp"
#include "telekinesis/bridge/session.hpp"
#include "telekinesis/commands.hpp"
#include "telekinesis/engine.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/manipulation.hpp"
#include "telekinesis/operator.hpp"
#include "telekinesis/trace_io.hpp"

namespace py = pybind11;
using namespace tk;

namespace {

using Triple = std::array<double, 3>;
using ConditionTuple = std::tuple<bool, bool, bool>;

Vec3 v3(const Triple& a) { return {a[0], a[1], a[2]}; }
Triple arr(const Vec3& v) { return {v.x, v.y, v.z}; }

FactorCondition cond(const ConditionTuple& c) { return {std::get<0>(c), std::get<1>(c), std::get<2>(c)}; }
ConditionTuple tup(const FactorCondition& c) { return {c.concentration, c.strain, c.energy}; }

EngineConfig config_of(const std::optional<std::string>& text) {
  if (!text) return EngineConfig{};
  try {
    return config_from_json(nlohmann::json::parse(*text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

std::optional<bio::Calibration> calibration_of(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  try {
    return bio::calibration_from_json(nlohmann::json::parse(*text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("calibration: ") + e.what());
  }
}

std::vector<SensorFrame> frames_of(const std::vector<std::string>& lines, const EngineConfig& cfg) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  std::istringstream in(text);
  return read_trace(in, cfg);
}

std::vector<std::string> lines_of(const std::vector<SensorFrame>& frames) {
  std::vector<std::string> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(frame_to_json(f).dump());
  return out;
}

stats::ObservationTable table_of(const std::string& csv) {
  std::istringstream in(csv);
  return stats::read_observations(in);
}

class PyEngine {
 public:
  PyEngine(const std::optional<std::string>& config, const ConditionTuple& condition,
           const std::optional<std::string>& calibration)
      : engine_(config_of(config), cond(condition), calibration_of(calibration)) {}

  std::string tick(const std::string& frame) {
    try {
      return snapshot_line(engine_.tick(frame_from_json(nlohmann::json::parse(frame))));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("frame: ") + e.what());
    }
  }

  std::vector<std::string> replay(const std::vector<std::string>& frames) {
    std::vector<std::string> out;
    for (const auto& f : frames_of(frames, engine_.config())) out.push_back(snapshot_line(engine_.tick(f)));
    return out;
  }

  std::string report() const { return to_json(engine_.report()).dump(); }
  std::uint64_t ticks() const { return engine_.ticks(); }

 private:
  Engine engine_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Telekinesis interaction engine";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", error.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", validation.ptr());
  py::register_exception<FrameOrderError>(m, "FrameOrderError", validation.ptr());
  py::register_exception<DegenerateDataError>(m, "DegenerateDataError", validation.ptr());

  m.def("parse_condition", [](const std::string& text) { return tup(cli::parse_condition(text)); },
        py::arg("text"));
  m.def("condition_label", [](const ConditionTuple& c) { return condition_label(cond(c)); }, py::arg("condition"));
  m.def("default_config", [] { return to_json(EngineConfig{}).dump(); });
  m.def("validate_config", [](const std::string& text) { return to_json(config_of(text)).dump(); },
        py::arg("config"));

  m.def(
      "manipulation_step",
      [](const Triple& prev_hand, const Triple& object, double prev_m, const Triple& prev_dir, const Triple& hand,
         bool active, double k, double sim_th, double m_th) {
        const manip::ManipulationState s{v3(prev_hand), prev_m, v3(prev_dir), v3(object)};
        const auto r = manip::step_detailed(s, v3(hand), active, {k, sim_th, m_th});
        py::dict d;
        d["object"] = arr(r.state.object_pos);
        d["delta"] = arr(r.delta);
        d["dir"] = arr(r.dir);
        d["m_raw"] = r.m_raw;
        d["m_eff"] = r.m_eff;
        d["sim"] = r.sim;
        return d;
      },
      py::arg("prev_hand"), py::arg("object"), py::arg("prev_m"), py::arg("prev_dir"), py::arg("hand"),
      py::arg("active"), py::arg("k") = 1.0, py::arg("sim_th") = 0.7, py::arg("m_th") = 0.002);

  m.def(
      "synthesize_operator",
      [](const ConditionTuple& c, std::uint64_t seed, const std::optional<std::string>& config,
         const std::optional<std::string>& calibration) {
        return lines_of(synth::synthesize_operator(cond(c), config_of(config), seed, calibration_of(calibration)));
      },
      py::arg("condition"), py::arg("seed"), py::arg("config") = py::none(), py::arg("calibration") = py::none());
  m.def(
      "synthesize_calibration",
      [](std::uint64_t seed, double duration, const std::optional<std::string>& config) {
        return lines_of(synth::synthesize_calibration(config_of(config), seed, duration));
      },
      py::arg("seed"), py::arg("duration") = 90.0, py::arg("config") = py::none());
  m.def(
      "calibrate",
      [](const std::vector<std::string>& frames, const std::optional<std::string>& config) {
        const auto cfg = config_of(config);
        return bio::to_json(bio::calibrate_trace(frames_of(frames, cfg), cfg)).dump();
      },
      py::arg("frames"), py::arg("config") = py::none());

  py::class_<PyEngine>(m, "Engine")
      .def(py::init<const std::optional<std::string>&, const ConditionTuple&, const std::optional<std::string>&>(),
           py::arg("config") = py::none(), py::arg("condition") = ConditionTuple{false, false, false},
           py::arg("calibration") = py::none())
      .def("tick", &PyEngine::tick, py::arg("frame"))
      .def("replay", &PyEngine::replay, py::arg("frames"))
      .def("report", &PyEngine::report)
      .def_property_readonly("ticks", &PyEngine::ticks);

  py::class_<bridge::Session>(m, "Session")
      .def(py::init([](const std::optional<std::string>& config, std::uint64_t seed) {
             bridge::SessionOptions opt;
             opt.base_config = config_of(config);
             opt.default_seed = seed;
             return bridge::Session(opt);
           }),
           py::arg("config") = py::none(), py::arg("seed") = 1)
      .def("handle", &bridge::Session::handle, py::arg("message"))
      .def("tick", &bridge::Session::tick)
      .def_property_readonly("configured", &bridge::Session::configured)
      .def_property_readonly("closed", &bridge::Session::closed)
      .def("frames", [](const bridge::Session& s) { return lines_of(s.frames()); });

  m.def("anova", [](const std::string& csv) { return stats::to_json(stats::anova3(table_of(csv)), "anova").dump(); },
        py::arg("csv"));
  m.def(
      "art_anova",
      [](const std::string& csv) {
        return stats::to_json(stats::art_anova(table_of(csv)), "aligned rank transform + three-way anova").dump();
      },
      py::arg("csv"));
  m.def("f_upper_tail", &stats::f_upper_tail, py::arg("F"), py::arg("df1"), py::arg("df2"));
}
