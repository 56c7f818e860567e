// nvmri: simulate, analyze and reconstruct NV-pair imaging scenarios.
//
// exit codes: 0 ok, 1 other failure, 2 config, 3 fit did not converge, 4 I/O

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nvmri/cli/config.hpp"
#include "nvmri/cli/exit_codes.hpp"
#include "nvmri/cli/io.hpp"
#include "nvmri/cli/pipeline.hpp"
#include "nvmri/cli/report.hpp"

namespace {

using namespace nvmri;
using namespace nvmri::cli;

struct Args {
  std::string verb;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool no_noise = false;
  std::string format;
};

ScenarioConfig load_config(const Args& a) {
  if (a.config.empty()) throw ConfigError("--config is required for '" + a.verb + "'");
  if (!fs::exists(a.config)) throw ConfigError("config file not found: " + a.config);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(a.config));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  Overrides ov;
  ov.seed = a.seed;
  ov.no_noise = a.no_noise;
  if (!a.out_dir.empty()) ov.out_dir = a.out_dir;
  if (!a.format.empty()) ov.format = a.format == "json" ? TraceFormat::json : TraceFormat::csv;
  try {
    return parse_config(doc, ov);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void write_error(const fs::path& dir, const std::string& stage, const std::string& kind, const std::string& what, int code) {
  if (dir.empty()) return;
  try {
    write_json(dir / "error.json", {{"stage", stage}, {"kind", kind}, {"message", what}, {"exit_code", code}});
  } catch (const std::exception&) {
    // the original failure matters more than this one
  }
}

int execute(const Args& a, fs::path& dir, std::string& stage) {
  if (a.verb == "report") {
    if (!a.out_dir.empty()) {
      dir = a.out_dir;
    } else {
      dir = load_config(a).out_dir;
    }
    stage = "report";
    std::cout << render_report(dir);
    return kExitOk;
  }

  stage = "config";
  const ScenarioConfig cfg = load_config(a);
  (void)thread_count();  // reject a bad NVMRI_THREADS before any work
  dir = cfg.out_dir;
  std::vector<StageTiming> timings;
  auto run_stage = [&](const char* name, auto&& fn) {
    stage = name;
    timings.push_back({name, timed(fn)});
  };

  const bool all = a.verb == "run";
  if (all || a.verb == "simulate") run_stage("simulate", [&] { run_simulate(cfg, dir); });
  if (all || a.verb == "analyze") run_stage("analyze", [&] { run_analyze(cfg, dir); });
  if ((all && cfg.reconstruction) || a.verb == "reconstruct") {
    run_stage("reconstruct", [&] { run_reconstruct(cfg, dir); });
  } else if (all) {
    std::error_code ec;
    fs::remove(dir / "report.json", ec);
  }
  stage = "manifest";
  write_manifest(cfg, dir, timings);
  std::error_code ec;
  fs::remove(dir / "error.json", ec);
  if (all) std::cout << render_report(dir);
  else std::cout << a.verb << ": wrote " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV-pair sub-wavelength imaging: simulation, fitting and position reconstruction"};
  app.require_subcommand(1, 1);
  Args a;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", a.config, "scenario JSON file");
    if (needs_config) c->check(CLI::ExistingFile);
    sub->add_option("--out-dir", a.out_dir, "output directory (overrides the config)");
    if (needs_config) {
      sub->add_option("--seed", a.seed, "noise seed (overrides the config)");
      sub->add_flag("--no-noise", a.no_noise, "simulate noiseless traces");
      sub->add_option("--format", a.format, "trace file format")->check(CLI::IsMember({"csv", "json"}));
    }
  };
  for (const auto& [name, help] : {std::pair{"simulate", "write simulated traces"},
                                   std::pair{"analyze", "fit the traces in the output directory"},
                                   std::pair{"reconstruct", "invert fitted slopes to NV positions"},
                                   std::pair{"run", "simulate, analyze and reconstruct"}}) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, true);
    sub->callback([&a, n = std::string(name)] { a.verb = n; });
  }
  auto* rep = app.add_subcommand("report", "summarize an output directory");
  add_common(rep, false);
  rep->callback([&a] { a.verb = "report"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  fs::path dir;
  std::string stage = "startup";
  try {
    return execute(a, dir, stage);
  } catch (const std::exception& e) {
    const auto f = classify(e);
    std::cerr << "nvmri: " << stage << ": " << e.what() << "\n";
    write_error(dir, stage, f.kind, e.what(), f.code);
    return f.code;
  }
}
