#pragma once

// Stages behind the CLI verbs. Each stage reads what the previous one wrote
// in the output directory, so they can be run one at a time or chained.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nvmri/cli/config.hpp"
#include "nvmri/cli/io.hpp"
#include "nvmri/nvmri.hpp"

namespace nvmri::cli {

using nlohmann::json;

/// Worker count from NVMRI_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("NVMRI_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("NVMRI_THREADS must be an integer in 1..1024");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// fn(i) for i in [0, n). Results are keyed by index by the caller, so the
/// schedule does not change the output. The lowest-index failure is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const auto workers = std::min<std::size_t>(n, thread_count());
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::string config_hash(const ScenarioConfig& c) { return hex64(fnv1a(c.effective.dump())); }

namespace detail {

inline const std::vector<double>& currents_of(const ScenarioConfig& c, const std::string& mod) {
  static const std::vector<double> none{0.0};
  if (mod == "cw_esr") return c.cw_esr->currents_a;
  if (mod == "eseem") return c.eseem->currents_a;
  if (mod == "rabi") return c.rabi->currents_a;
  return none;
}

inline std::uint32_t stream_base(const std::string& mod) {
  if (mod == "cw_esr") return 100000;
  if (mod == "eseem") return 200000;
  if (mod == "rabi") return 300000;
  return 400000;
}

inline std::string value_unit(const std::string& mod) { return mod == "antibunching" ? "g2" : "signal"; }

inline int component_count(const ScenarioConfig& c, const std::optional<int>& n) {
  return n ? *n : static_cast<int>(c.scene.nvs.size());
}

inline Trace simulate_point(const ScenarioConfig& c, const std::string& mod, std::size_t k) {
  const double current = currents_of(c, mod)[k];
  SimulationOptions opt;
  opt.noise = c.noise;
  opt.stream = stream_base(mod) + static_cast<std::uint32_t>(k) + 1;
  if (mod == "cw_esr") {
    opt.model = c.cw_esr->model;
    const auto grid = c.cw_esr->frequency_grid_mhz.values();
    return simulate_cw_esr(c.scene, grid, current, c.cw_esr->linewidth_mhz, c.cw_esr->extra_broadening_mhz, opt);
  }
  if (mod == "eseem") {
    opt.model = c.eseem->model;
    const auto grid = c.eseem->time_grid_ns.values();
    return simulate_eseem(c.scene, current, grid, c.eseem->chirp, opt);
  }
  if (mod == "rabi") {
    const auto grid = c.rabi->time_grid_ns.values();
    return simulate_rabi(c.scene, current, grid, c.rabi->power_jitter_rms, opt, RabiOptions{c.rabi->repetitions});
  }
  const auto& a = *c.antibunching;
  const auto lags = a.lag_grid_ns.values();
  return simulate_antibunching(a.n_emitters, a.tau0_ns, a.signal_fraction, lags);
}

inline json analyze_point(const ScenarioConfig& c, const std::string& mod, const Trace& tr, double current) {
  json out{{"current_a", current}, {"warnings", tr.warnings}};
  if (mod == "cw_esr") {
    const auto fit = fit_lorentzians(tr, component_count(c, c.cw_esr->n_peaks));
    json centers = json::array(), widths = json::array(), amps = json::array();
    for (const auto& p : fit.peaks) {
      centers.push_back(p.center_mhz);
      widths.push_back(p.fwhm_mhz);
      amps.push_back(p.amplitude);
    }
    out["centers_mhz"] = centers;
    out["fwhm_mhz"] = widths;
    out["amplitudes"] = amps;
    out["splittings_mhz"] = fit.splittings();
    out["degenerate"] = fit.degenerate;
    out["residual_rms"] = fit.residual_rms;
    return out;
  }
  if (mod == "antibunching") {
    std::size_t zero = 0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      if (std::abs(tr.axis[i]) < std::abs(tr.axis[zero])) zero = i;
    }
    const double rho = c.antibunching->signal_fraction;
    out["g2_zero"] = tr.values[zero];
    out["lag_at_zero_ns"] = tr.axis[zero];
    out["signal_fraction"] = rho;
    out["emitters"] = estimate_emitter_count(tr.values[zero], rho);
    return out;
  }

  // Time-domain tones: ESEEM (DC gradient) or Rabi (MW stripline).
  const bool eseem = mod == "eseem";
  const int n = component_count(c, eseem ? c.eseem->n_tones : c.rabi->n_tones);
  std::optional<double> node;
  if (n >= 2) node = detect_first_node(tr);
  Trace work = tr;
  if (eseem && c.eseem->chirp_extent_ns > 0.0) work = compensate_chirp(tr, c.eseem->chirp_extent_ns);
  SinusoidFitOptions fo;
  if (!eseem) fo.decay_shape = c.rabi->decay_shape;
  const auto fit = fit_sinusoids(work, n, eseem ? c.eseem->with_decay : c.rabi->with_decay, fo);
  json freqs = json::array(), amps = json::array(), decays = json::array(), diffs = json::array();
  for (std::size_t i = 0; i < fit.tones.size(); ++i) {
    freqs.push_back(fit.tones[i].frequency_mhz);
    amps.push_back(fit.tones[i].amplitude);
    decays.push_back(fit.tones[i].decay_per_ns);
    if (i > 0) diffs.push_back(fit.tones[i - 1].frequency_mhz - fit.tones[i].frequency_mhz);
  }
  out["tones_mhz"] = freqs;
  out["amplitudes"] = amps;
  out["decay_per_ns"] = decays;
  out["differences_mhz"] = diffs;
  out["residual_rms"] = fit.residual_rms;
  out["node_ns"] = node ? json(*node) : json(nullptr);
  return out;
}

}  // namespace detail

// ---- simulate -------------------------------------------------------------

inline json run_simulate(const ScenarioConfig& c, const fs::path& dir) {
  json index{{"config_hash", config_hash(c)},
             {"format", c.format == TraceFormat::csv ? "csv" : "json"},
             {"traces", json::array()}};
  for (const auto& mod : active_modalities(c)) {
    const auto& currents = detail::currents_of(c, mod);
    std::vector<Trace> traces(currents.size());
    parallel_for(currents.size(), [&](std::size_t k) { traces[k] = detail::simulate_point(c, mod, k); });
    for (std::size_t k = 0; k < traces.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "traces/%s_%03zu.%s", mod.c_str(), k, c.format == TraceFormat::csv ? "csv" : "json");
      if (c.format == TraceFormat::csv) {
        write_atomic(dir / name, trace_to_csv(traces[k], detail::value_unit(mod)));
      } else {
        write_json(dir / name, trace_to_json(traces[k], detail::value_unit(mod)));
      }
      index["traces"].push_back({{"modality", mod}, {"index", k}, {"current_a", currents[k]}, {"file", name}});
    }
  }
  write_json(dir / "traces" / "index.json", index);
  return index;
}

// ---- analyze --------------------------------------------------------------

inline Trace load_trace(const fs::path& dir, const json& entry) {
  const auto file = entry.at("file").get<std::string>();
  const fs::path p = dir / file;
  if (p.extension() == ".csv") return trace_from_csv(read_file(p), p.string());
  return trace_from_json(read_json(p), p.string());
}

inline json run_analyze(const ScenarioConfig& c, const fs::path& dir) {
  const auto index = read_json(dir / "traces" / "index.json");
  if (index.value("config_hash", "") != config_hash(c)) {
    throw ConfigError("traces in " + dir.string() + " were simulated from a different config; rerun simulate");
  }
  const auto& entries = index.at("traces");
  std::vector<json> results(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    const auto tr = load_trace(dir, e);
    results[i] = detail::analyze_point(c, e.at("modality").get<std::string>(), tr, e.at("current_a").get<double>());
  });

  json fits{{"config_hash", config_hash(c)}, {"modalities", json::object()}};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto mod = entries[i].at("modality").get<std::string>();
    auto& m = fits["modalities"][mod];
    if (!m.contains("points")) {
      const auto tr = load_trace(dir, entries[i]);
      m["axis_span"] = tr.axis.back() - tr.axis.front();
      m["axis_unit"] = tr.axis_kind == AxisKind::time ? "ns" : "MHz";
      m["points"] = json::array();
    }
    m["points"].push_back(results[i]);
  }
  write_json(dir / "fits.json", fits);
  return fits;
}

// ---- reconstruct ----------------------------------------------------------

namespace detail {

struct SlopeSet {
  std::vector<double> currents;
  std::vector<double> slopes;
  double residual = 0.0;
};

/// Adjacent-pair differences per point, nearest NV first.
inline std::vector<std::vector<double>> pair_differences(const std::string& mod, const json& points) {
  std::vector<std::vector<double>> out;
  if (mod != "cw_esr") {
    for (const auto& p : points) out.push_back(p.at("differences_mhz").get<std::vector<double>>());
    return out;
  }
  // CW: the nearest NV moves most. Lines moving down with current are
  // ordered lowest first, otherwise highest first.
  const auto first = points.front().at("centers_mhz").get<std::vector<double>>();
  const auto last = points.back().at("centers_mhz").get<std::vector<double>>();
  double drift = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) drift += last[i] - first[i];
  for (const auto& p : points) {
    auto s = p.at("splittings_mhz").get<std::vector<double>>();
    if (drift > 0.0) std::reverse(s.begin(), s.end());
    out.push_back(s);
  }
  return out;
}

inline SlopeSet fit_slopes(const std::vector<double>& currents, const std::vector<std::vector<double>>& diffs,
                           const std::vector<bool>& use) {
  SlopeSet s;
  std::vector<std::vector<double>> ys;
  for (std::size_t k = 0; k < currents.size(); ++k) {
    if (!use[k]) continue;
    s.currents.push_back(currents[k]);
    ys.push_back(diffs[k]);
  }
  if (s.currents.empty()) throw NotIdentifiableError("no sweep point resolves the NV tones");
  const std::size_t pairs = ys.front().size();
  for (std::size_t p = 0; p < pairs; ++p) {
    std::vector<double> y;
    for (const auto& row : ys) y.push_back(row[p]);
    const auto line = fit_line_through_origin(s.currents, y);
    s.slopes.push_back(line.slope);
    s.residual = std::max(s.residual, line.residual_rms);
  }
  return s;
}

}  // namespace detail

inline json reconstruct_modality(const ScenarioConfig& c, const std::string& mod, const json& m) {
  const auto& rc = *c.reconstruction;
  const bool dc = mod != "rabi";
  const auto theta_deg = dc ? rc.theta_dc_deg : rc.theta_mw_deg;
  const auto anchor = dc ? rc.anchor_dc_um : rc.anchor_mw_um;
  if (!theta_deg || !anchor) {
    throw ConfigError(std::string("reconstruction of ") + mod + " needs " + (dc ? "theta_dc_deg and anchor_dc_um" : "theta_mw_deg and anchor_mw_um"));
  }
  const auto& points = m.at("points");
  if (points.size() < 1) throw NotIdentifiableError(mod + " sweep has no points");
  const auto diffs = detail::pair_differences(mod, points);
  if (diffs.front().empty()) throw NotIdentifiableError(mod + " needs at least two NV components to reconstruct");
  std::vector<double> currents;
  for (const auto& p : points) currents.push_back(p.at("current_a").get<double>());

  const bool time_domain = mod != "cw_esr";
  const double window = m.at("axis_span").get<double>();
  std::vector<bool> use(points.size(), true);
  std::optional<double> first_resolved;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!(currents[k] > 0.0)) use[k] = false;
    if (!time_domain && points[k].at("degenerate").get<bool>()) use[k] = false;
    if (time_domain) {
      for (double d : diffs[k]) use[k] = use[k] && node_within_window(d, window);
    }
  }
  auto slopes = detail::fit_slopes(currents, diffs, use);
  std::size_t min_pair = 0;
  for (std::size_t p = 1; p < slopes.slopes.size(); ++p) {
    if (slopes.slopes[p] < slopes.slopes[min_pair]) min_pair = p;
  }
  if (time_domain) {
    // Settle the first resolved current from the fitted slope, then keep
    // every point from there up.
    for (std::size_t k = 0; k < points.size() && !first_resolved; ++k) {
      if (currents[k] > 0.0 && node_within_window(slopes.slopes[min_pair] * currents[k], window)) first_resolved = currents[k];
    }
    if (!first_resolved) throw NotIdentifiableError(mod + ": no current in the sweep resolves the closest pair");
    for (std::size_t k = 0; k < points.size(); ++k) use[k] = currents[k] >= *first_resolved;
    slopes = detail::fit_slopes(currents, diffs, use);
  }

  std::vector<double> weights;
  if (c.scene.nvs.size() == slopes.slopes.size() + 1) {
    for (const auto& nv : c.scene.nvs) weights.push_back(nv.weight);
  }
  const double theta = radians(*theta_deg);
  ReconstructionReport rep;
  if (dc) {
    rep = invert_positions_dc(slopes.slopes, theta, *anchor, c.scene.constants, weights);
  } else {
    if (slopes.slopes.size() != 1) throw InvalidArgumentError("MW reconstruction handles one NV pair");
    rep = invert_positions_mw(slopes.slopes[0], theta, *anchor, c.scene.constants, weights);
  }

  json out{{"slopes_mhz_per_a", slopes.slopes},
           {"slope_fit_residual_mhz", slopes.residual},
           {"currents_used_a", slopes.currents},
           {"radial_positions_um", rep.radial_positions_um},
           {"separations_nm", rep.separations_nm},
           {"theta_deg", *theta_deg},
           {"anchor_um", *anchor},
           {"inversion_residual_mhz_per_a", rep.fit_residual},
           {"resolution_nm", nullptr}};
  if (first_resolved) {
    const double i_max = currents.back();
    const double res = estimate_resolution(rep.separations_nm[min_pair], *first_resolved, i_max);
    out["first_resolved_current_a"] = *first_resolved;
    out["max_current_a"] = i_max;
    out["window_ns"] = window;
    out["resolution_nm"] = res;
    if (rc.optical_wavelength_nm && rc.mw_effective_wavelength_um && rc.mw_freespace_wavelength_cm) {
      json ratios = json::array();
      for (const auto& r : wavelength_ratios(res, *rc.optical_wavelength_nm, *rc.mw_effective_wavelength_um, *rc.mw_freespace_wavelength_cm)) {
        ratios.push_back({{"label", r.label}, {"wavelength_nm", r.wavelength_nm}, {"ratio", r.raw}, {"rounded", r.rounded}});
      }
      out["wavelength_ratios"] = ratios;
    }
  }
  return out;
}

inline json run_reconstruct(const ScenarioConfig& c, const fs::path& dir) {
  if (!c.reconstruction) throw ConfigError("config has no 'reconstruction' block");
  const auto fits = read_json(dir / "fits.json");
  if (fits.value("config_hash", "") != config_hash(c)) {
    throw ConfigError("fits in " + dir.string() + " came from a different config; rerun analyze");
  }
  json report{{"config_hash", config_hash(c)}, {"modalities", json::object()}};
  for (const auto& [mod, m] : fits.at("modalities").items()) {
    if (mod == "antibunching") continue;
    report["modalities"][mod] = reconstruct_modality(c, mod, m);
  }
  const auto& mods = report["modalities"];
  const char* dc_mod = mods.contains("eseem") ? "eseem" : (mods.contains("cw_esr") ? "cw_esr" : nullptr);
  if (dc_mod && mods.contains("rabi")) {
    const auto a = mods[dc_mod]["separations_nm"].get<std::vector<double>>();
    const auto b = mods["rabi"]["separations_nm"].get<std::vector<double>>();
    json parity{{"dc_modality", dc_mod}, {"dc_separations_nm", a}, {"mw_separations_nm", b}};
    if (a.size() == b.size()) {
      double worst = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      parity["max_abs_difference_nm"] = worst;
    } else {
      parity["max_abs_difference_nm"] = nullptr;
    }
    report["dc_mw_parity"] = parity;
  }
  write_json(dir / "report.json", report);
  return report;
}

// ---- manifest -------------------------------------------------------------

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

/// Records the stages run so far. Stages from an earlier invocation with the
/// same config are kept; a different config starts a fresh manifest.
inline json write_manifest(const ScenarioConfig& c, const fs::path& dir, const std::vector<StageTiming>& stages) {
  std::map<std::string, double> timings;
  const fs::path path = dir / "manifest.json";
  if (fs::exists(path)) {
    try {
      const auto old = read_json(path);
      if (old.value("config_hash", "") == config_hash(c)) {
        for (const auto& s : old.at("stages")) timings[s.at("name").get<std::string>()] = s.at("seconds").get<double>();
      }
    } catch (const std::exception&) {
      timings.clear();
    }
  }
  for (const auto& s : stages) timings[s.name] = s.seconds;

  json m{{"tool", "nvmri"},
         {"version", kVersion},
         {"scenario", c.name},
         {"experiment", to_string(c.experiment)},
         {"config_hash", config_hash(c)},
         {"seed", c.seed},
         {"noise", c.noise},
         {"config", c.effective},
         {"stages", json::array()},
         {"outputs", json::array()}};
  static const char* order[] = {"simulate", "analyze", "reconstruct"};
  for (const char* name : order) {
    if (timings.contains(name)) m["stages"].push_back({{"name", name}, {"seconds", timings[name]}});
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir);
    if (rel == "manifest.json" || rel == "error.json" || rel.extension() == ".tmp") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto text = read_file(dir / f);
    m["outputs"].push_back({{"path", f.generic_string()}, {"bytes", text.size()}, {"fnv1a", hex64(fnv1a(text))}});
  }
  write_json(path, m);
  return m;
}

/// Runs fn and returns its wall time in seconds.
template <class Fn>
double timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace nvmri::cli
