#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "telekinesis/commands.hpp"
#include "telekinesis/errors.hpp"
#include "telekinesis/operator.hpp"
#include "telekinesis/trace_io.hpp"

#ifdef TK_HAVE_BRIDGE
#include "telekinesis/bridge/server.hpp"
#endif

namespace fs = std::filesystem;
using namespace tk;

namespace {

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void print_run(const cli::RunOutcome& r) {
  std::cout << condition_label(r.report.condition) << " complete=" << (r.report.complete ? "yes" : "no");
  if (r.report.completion_time) std::cout << " time=" << *r.report.completion_time << "s";
  std::cout << " ticks=" << r.report.stats.ticks << " report=" << r.report_path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Telekinesis interaction engine: calibration, replay, batches and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "telekinesis 0.1.0");

  std::string config;
  std::string condition;
  std::string trace;
  std::string calibration;
  std::string out;
  std::uint64_t seed = 0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Engine configuration JSON (defaults when omitted)")->check(CLI::ExistingFile);
  };

  auto* calibrate = app.add_subcommand("calibrate", "Derive the resting blink and EMG calibration from a trace");
  calibrate->add_option("--trace", trace, "Resting trace (JSON lines), at least 60 s")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", out, "Calibration JSON to write")->default_val("calibration.json");
  add_config(calibrate);

  auto* run = app.add_subcommand("run", "Run the engine over a trace or a synthesized operator");
  run->add_option("--condition", condition, "Factor condition, e.g. c=yes,s=no,e=yes")->default_val("");
  auto* trace_opt = run->add_option("--trace", trace, "Recorded trace to replay")->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Synthesize the operator from this seed instead of a trace");
  trace_opt->excludes(seed_opt);
  run->add_option("--calibration", calibration, "Calibration JSON (needed when c or s is yes)")
      ->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->default_val("out");
  add_config(run);

  bool serial = false;
  auto* batch = app.add_subcommand("batch", "Run all eight conditions in a seeded random order");
  batch->add_option("--seed", seed, "Master seed")->required();
  batch->add_option("--out", out, "Output directory")->default_val("out");
  batch->add_flag("--serial", serial, "Run conditions one after another instead of in parallel");
  add_config(batch);

  std::string csv;
  auto* analyze = app.add_subcommand("analyze", "Aligned rank transform ANOVA of a questionnaire table");
  analyze->add_option("csv", csv, "CSV: participant,concentration,strain,energy,response")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--out", out, "Also write the JSON result here");

  bool resting = false;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic trace (operator run or resting calibration)");
  synth_cmd->add_option("--seed", seed, "Seed")->required();
  synth_cmd->add_option("--out", out, "Trace file to write")->required();
  synth_cmd->add_option("--condition", condition, "Factor condition for the operator")->default_val("");
  synth_cmd->add_option("--calibration", calibration, "Calibration the operator paces itself on")
      ->check(CLI::ExistingFile);
  synth_cmd->add_flag("--resting", resting, "Write a 90 s resting trace for calibrate instead");
  add_config(synth_cmd);

  unsigned short port = 8765;
  std::string address = "127.0.0.1";
  std::string static_dir;
  std::string record_dir;
  auto* serve = app.add_subcommand("serve", "Serve live sessions over a websocket at /session");
  serve->add_option("--port", port, "TCP port")->default_val(8765);
  serve->add_option("--address", address, "Bind address")->default_val("127.0.0.1");
  serve->add_option("--static-dir", static_dir, "Directory with the browser client")->check(CLI::ExistingDirectory);
  serve->add_option("--record-dir", record_dir, "Record every session's frames here for offline replay");
  serve->add_option("--seed", seed, "Default session seed")->default_val(1);
  add_config(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*calibrate) {
      const auto c = cli::cmd_calibrate(trace, out, opt_path(config));
      std::cout << "mean_interval=" << c.concentration.mean_interval << "s c_th=" << c.concentration.c_th << "s";
      if (c.emg) std::cout << " f_min=" << c.emg->f_min << " f_max=" << c.emg->f_max;
      std::cout << " -> " << out << '\n';
    } else if (*run) {
      cli::RunManifest m;
      m.config_path = opt_path(config);
      m.condition = cli::parse_condition(condition);
      m.trace_path = opt_path(trace);
      if (seed_opt->count() > 0) m.seed = seed;
      m.calibration_path = opt_path(calibration);
      m.out_dir = out;
      print_run(cli::cmd_run(m));
    } else if (*batch) {
      const auto b = cli::cmd_batch(opt_path(config), seed, out, !serial);
      for (const auto& r : b.runs) print_run(r);
    } else if (*analyze) {
      std::cout << cli::cmd_analyze(csv, opt_path(out)).dump(2) << '\n';
    } else if (*synth_cmd) {
      const EngineConfig cfg = cli::resolve_config(opt_path(config));
      std::vector<SensorFrame> frames;
      if (resting) {
        frames = synth::synthesize_calibration(cfg, seed);
      } else {
        std::optional<bio::Calibration> calib;
        if (!calibration.empty()) calib = bio::load_calibration(calibration);
        frames = synth::synthesize_operator(cli::parse_condition(condition), cfg, seed, calib);
      }
      save_trace(frames, out);
      std::cout << frames.size() << " frames -> " << out << '\n';
    } else if (*serve) {
#ifdef TK_HAVE_BRIDGE
      bridge::ServerOptions opts;
      opts.address = address;
      opts.port = port;
      opts.static_dir = opt_path(static_dir);
      opts.record_dir = opt_path(record_dir);
      opts.config = cli::resolve_config(opt_path(config));
      opts.seed = seed;
      bridge::Server server(opts);
      std::cout << "listening on " << address << ':' << port << " (websocket /session)" << std::endl;
      server.run();
#else
      throw UsageError("this build has no bridge service");
#endif
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
