#pragma once

// Scenario configuration: JSON in, validated structs out. Unknown keys are
// rejected so a typo never silently falls back to a default.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvmri/scene.hpp"
#include "nvmri/signal_forge.hpp"
#include "nvmri/sinusoid_fit.hpp"

namespace nvmri::cli {

/// Config did not parse or failed validation (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment { cw_esr, eseem, rabi, antibunching, full_pipeline };
enum class TraceFormat { csv, json };

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
  std::vector<double> values() const { return uniform_grid(start, stop, step); }
};

struct CwEsrConfig {
  std::vector<double> currents_a;
  GridSpec frequency_grid_mhz;
  double linewidth_mhz = 5.0;
  double extra_broadening_mhz = 0.0;
  std::optional<int> n_peaks;
  TransitionModel model = TransitionModel::secular;
};

struct EseemConfig {
  std::vector<double> currents_a;
  GridSpec time_grid_ns;
  TransitionModel model = TransitionModel::full;
  std::optional<ChirpArtifact> chirp;
  std::optional<int> n_tones;
  bool with_decay = false;
  double chirp_extent_ns = 0.0;
};

struct RabiConfig {
  std::vector<double> currents_a;
  GridSpec time_grid_ns;
  double power_jitter_rms = 0.0;
  std::size_t repetitions = RabiOptions{}.repetitions;
  std::optional<int> n_tones;
  bool with_decay = false;
  DecayShape decay_shape = DecayShape::gaussian;
};

struct AntibunchingConfig {
  int n_emitters = 1;
  double tau0_ns = 12.0;
  double signal_fraction = 1.0;
  GridSpec lag_grid_ns{-100.0, 100.0, 1.0};
};

struct ReconstructionConfig {
  std::optional<double> theta_dc_deg;
  std::optional<double> theta_mw_deg;
  std::optional<double> anchor_dc_um;
  std::optional<double> anchor_mw_um;
  std::optional<double> optical_wavelength_nm;
  std::optional<double> mw_effective_wavelength_um;
  std::optional<double> mw_freespace_wavelength_cm;
};

struct ScenarioConfig {
  std::string name;
  Experiment experiment = Experiment::eseem;
  std::uint64_t seed = 0;
  bool noise = true;
  Scene scene;
  std::optional<CwEsrConfig> cw_esr;
  std::optional<EseemConfig> eseem;
  std::optional<RabiConfig> rabi;
  std::optional<AntibunchingConfig> antibunching;
  std::optional<ReconstructionConfig> reconstruction;
  std::string out_dir = "nvmri_out";
  TraceFormat format = TraceFormat::csv;
  /// The document as loaded, with command-line overrides applied.
  nlohmann::json effective;
};

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::cw_esr: return "cw_esr";
    case Experiment::eseem: return "eseem";
    case Experiment::rabi: return "rabi";
    case Experiment::antibunching: return "antibunching";
    case Experiment::full_pipeline: return "full_pipeline";
  }
  return "?";
}

namespace detail {

using nlohmann::json;

/// Typed access to one JSON object with a dotted path for messages.
class Node {
 public:
  Node(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.contains(k)) throw ConfigError("unknown key '" + k + "' in " + path_);
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string path(const std::string& k) const { return path_ + "." + k; }

  double number(const std::string& k) const {
    const auto& v = require(k);
    if (!v.is_number()) throw ConfigError(path(k) + " must be a number");
    return v.get<double>();
  }
  double number(const std::string& k, double fallback) const { return has(k) ? number(k) : fallback; }
  std::optional<double> maybe_number(const std::string& k) const {
    return has(k) ? std::optional<double>(number(k)) : std::nullopt;
  }
  double positive(const std::string& k) const {
    const double v = number(k);
    if (!(v > 0.0)) throw ConfigError(path(k) + " must be positive");
    return v;
  }
  double positive(const std::string& k, double fallback) const { return has(k) ? positive(k) : fallback; }

  std::int64_t integer(const std::string& k) const {
    const auto& v = require(k);
    if (!v.is_number_integer()) throw ConfigError(path(k) + " must be an integer");
    return v.get<std::int64_t>();
  }
  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError(path(k) + " must be true or false");
    return j_.at(k).get<bool>();
  }
  std::string string(const std::string& k) const {
    const auto& v = require(k);
    if (!v.is_string()) throw ConfigError(path(k) + " must be a string");
    return v.get<std::string>();
  }
  std::string choice(const std::string& k, const std::set<std::string>& options, const std::string& fallback) const {
    if (!has(k)) return fallback;
    const auto s = string(k);
    if (!options.contains(s)) throw ConfigError(path(k) + " has unsupported value '" + s + "'");
    return s;
  }
  std::vector<double> numbers(const std::string& k) const {
    const auto& v = require(k);
    if (!v.is_array()) throw ConfigError(path(k) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path(k) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::optional<int> count(const std::string& k) const {
    if (!has(k)) return std::nullopt;
    const auto v = integer(k);
    if (v < 1 || v > 16) throw ConfigError(path(k) + " must lie in 1..16");
    return static_cast<int>(v);
  }

 private:
  const json& require(const std::string& k) const {
    if (!j_.contains(k)) throw ConfigError("missing key " + path(k));
    return j_.at(k);
  }

  const json& j_;
  std::string path_;
};

inline GridSpec parse_grid(const json& j, const std::string& path) {
  const Node n(j, path, {"start", "stop", "step"});
  GridSpec g{n.number("start"), n.number("stop"), n.positive("step")};
  if (g.stop < g.start) throw ConfigError(path + ".stop must not be below start");
  if ((g.stop - g.start) / g.step > 1e7) throw ConfigError(path + " has more than 1e7 points");
  return g;
}

inline std::vector<double> parse_currents(const Node& n) {
  auto c = n.numbers("currents_a");
  if (c.empty()) throw ConfigError(n.path("currents_a") + " must not be empty");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] >= 0.0)) throw ConfigError(n.path("currents_a") + " entries must be >= 0");
    if (i > 0 && !(c[i] > c[i - 1])) throw ConfigError(n.path("currents_a") + " must be strictly increasing");
  }
  return c;
}

inline TransitionModel parse_model(const Node& n, TransitionModel fallback) {
  const auto s = n.choice("transition_model", {"full", "secular"}, fallback == TransitionModel::full ? "full" : "secular");
  return s == "full" ? TransitionModel::full : TransitionModel::secular;
}

inline Scene parse_scene(const json& j) {
  const Node n(j, "scene", {"nvs", "dc_wire", "mw_wire", "bias", "constants", "readout"});
  Scene s;
  const auto& nvs = n.raw("nvs");
  if (!nvs.is_array() || nvs.empty()) throw ConfigError("scene.nvs must be a non-empty array");
  for (std::size_t i = 0; i < nvs.size(); ++i) {
    const std::string p = "scene.nvs[" + std::to_string(i) + "]";
    const Node v(nvs[i], p, {"r_dc_um", "theta_dc_deg", "r_mw_um", "theta_mw_deg", "weight", "t2_ns"});
    NVCenter nv;
    nv.r_dc_um = v.positive("r_dc_um", nv.r_dc_um);
    nv.theta_dc_rad = radians(v.number("theta_dc_deg", degrees(nv.theta_dc_rad)));
    nv.r_mw_um = v.positive("r_mw_um", nv.r_mw_um);
    nv.theta_mw_rad = radians(v.number("theta_mw_deg", degrees(nv.theta_mw_rad)));
    nv.weight = v.positive("weight", nv.weight);
    nv.t2_ns = v.positive("t2_ns", nv.t2_ns);
    for (double th : {nv.theta_dc_rad, nv.theta_mw_rad}) {
      if (th < 0.0 || th > std::numbers::pi + 1e-12) throw ConfigError(p + " angles must lie in [0, 180] degrees");
    }
    s.nvs.push_back(nv);
  }
  auto wire = [&](const char* key, WireKind kind) {
    WireSpec w{0.0, 0.0, 0.0, kind};
    if (n.has(key)) {
      const Node wn(n.raw(key), n.path(key), {"center_x_um", "center_z_um"});
      w.center_x_um = wn.number("center_x_um", 0.0);
      w.center_z_um = wn.number("center_z_um", 0.0);
    }
    return w;
  };
  s.dc_wire = wire("dc_wire", WireKind::dc_gradient);
  s.mw_wire = wire("mw_wire", WireKind::mw_stripline);
  if (n.has("bias")) {
    const Node b(n.raw("bias"), "scene.bias", {"magnitude_gauss", "direction"});
    s.bias.magnitude_gauss = b.number("magnitude_gauss", 0.0);
    if (b.has("direction")) {
      const auto d = b.numbers("direction");
      if (d.size() != 3) throw ConfigError("scene.bias.direction must have three components");
      const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      if (!(norm > 0.0)) throw ConfigError("scene.bias.direction must be non-zero");
      s.bias.direction = {d[0] / norm, d[1] / norm, d[2] / norm};
    }
  }
  if (n.has("constants")) {
    const Node c(n.raw("constants"), "scene.constants", {"zero_field_splitting_mhz", "gamma_mhz_per_gauss"});
    s.constants.zero_field_splitting_mhz = c.positive("zero_field_splitting_mhz", s.constants.zero_field_splitting_mhz);
    s.constants.gamma_mhz_per_gauss = c.positive("gamma_mhz_per_gauss", s.constants.gamma_mhz_per_gauss);
  }
  if (n.has("readout")) {
    const Node r(n.raw("readout"), "scene.readout", {"snr", "mean_counts_per_point", "contrast"});
    const double contrast = r.positive("contrast", s.readout.contrast);
    if (r.has("snr") && r.has("mean_counts_per_point")) {
      throw ConfigError("scene.readout takes snr or mean_counts_per_point, not both");
    }
    if (r.has("snr")) {
      s.readout = ReadoutModel::for_snr(r.positive("snr"), contrast);
    } else {
      s.readout.mean_counts_per_point = r.positive("mean_counts_per_point", s.readout.mean_counts_per_point);
      s.readout.contrast = contrast;
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  return s;
}

}  // namespace detail

struct Overrides {
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
  std::optional<std::string> out_dir;
  std::optional<TraceFormat> format;
};

/// Build a validated scenario from a parsed document.
inline ScenarioConfig parse_config(const nlohmann::json& doc, const Overrides& ov = {}) {
  using detail::Node;
  const Node top(doc, "config",
                 {"$schema", "name", "description", "experiment", "seed", "noise", "scene", "cw_esr", "eseem", "rabi",
                  "antibunching", "reconstruction", "output"});
  ScenarioConfig c;
  c.name = top.has("name") ? top.string("name") : "scenario";
  if (top.has("description")) (void)top.string("description");
  const auto kind =
      top.choice("experiment", {"cw_esr", "eseem", "rabi", "antibunching", "full_pipeline"}, "");
  if (kind.empty()) throw ConfigError("missing key config.experiment");
  if (kind == "cw_esr") c.experiment = Experiment::cw_esr;
  if (kind == "eseem") c.experiment = Experiment::eseem;
  if (kind == "rabi") c.experiment = Experiment::rabi;
  if (kind == "antibunching") c.experiment = Experiment::antibunching;
  if (kind == "full_pipeline") c.experiment = Experiment::full_pipeline;

  if (top.has("seed")) {
    const auto s = top.integer("seed");
    if (s < 0) throw ConfigError("config.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.noise = top.boolean("noise", true);
  c.scene = detail::parse_scene(doc.at("scene"));

  if (top.has("cw_esr")) {
    const Node n(doc.at("cw_esr"), "cw_esr",
                 {"currents_a", "frequency_grid_mhz", "linewidth_mhz", "extra_broadening_mhz", "n_peaks",
                  "transition_model"});
    CwEsrConfig m;
    m.currents_a = detail::parse_currents(n);
    m.frequency_grid_mhz = detail::parse_grid(n.raw("frequency_grid_mhz"), "cw_esr.frequency_grid_mhz");
    m.linewidth_mhz = n.positive("linewidth_mhz", m.linewidth_mhz);
    m.extra_broadening_mhz = n.number("extra_broadening_mhz", 0.0);
    if (m.extra_broadening_mhz < 0.0) throw ConfigError("cw_esr.extra_broadening_mhz must be >= 0");
    m.n_peaks = n.count("n_peaks");
    m.model = detail::parse_model(n, TransitionModel::secular);
    c.cw_esr = m;
  }
  if (top.has("eseem")) {
    const Node n(doc.at("eseem"), "eseem",
                 {"currents_a", "time_grid_ns", "transition_model", "chirp", "n_tones", "with_decay", "chirp_extent_ns"});
    EseemConfig m;
    m.currents_a = detail::parse_currents(n);
    m.time_grid_ns = detail::parse_grid(n.raw("time_grid_ns"), "eseem.time_grid_ns");
    m.model = detail::parse_model(n, TransitionModel::full);
    if (n.has("chirp")) {
      const Node ch(n.raw("chirp"), "eseem.chirp", {"duration_ns", "depth_mhz"});
      m.chirp = ChirpArtifact{ch.number("duration_ns"), ch.number("depth_mhz")};
      if (m.chirp->duration_ns < 0.0) throw ConfigError("eseem.chirp.duration_ns must be >= 0");
    }
    m.n_tones = n.count("n_tones");
    m.with_decay = n.boolean("with_decay", false);
    m.chirp_extent_ns = n.number("chirp_extent_ns", 0.0);
    if (m.chirp_extent_ns < 0.0 || m.chirp_extent_ns >= m.time_grid_ns.stop - m.time_grid_ns.start) {
      throw ConfigError("eseem.chirp_extent_ns must lie in [0, time span)");
    }
    c.eseem = m;
  }
  if (top.has("rabi")) {
    const Node n(doc.at("rabi"), "rabi",
                 {"currents_a", "time_grid_ns", "power_jitter_rms", "repetitions", "n_tones", "with_decay", "decay_shape"});
    RabiConfig m;
    m.currents_a = detail::parse_currents(n);
    m.time_grid_ns = detail::parse_grid(n.raw("time_grid_ns"), "rabi.time_grid_ns");
    if (m.time_grid_ns.start < 0.0) throw ConfigError("rabi.time_grid_ns.start must be >= 0");
    m.power_jitter_rms = n.number("power_jitter_rms", 0.0);
    if (m.power_jitter_rms < 0.0) throw ConfigError("rabi.power_jitter_rms must be >= 0");
    if (n.has("repetitions")) {
      const auto r = n.integer("repetitions");
      if (r < 1) throw ConfigError("rabi.repetitions must be >= 1");
      m.repetitions = static_cast<std::size_t>(r);
    }
    m.n_tones = n.count("n_tones");
    m.with_decay = n.boolean("with_decay", false);
    m.decay_shape = n.choice("decay_shape", {"exponential", "gaussian"}, "gaussian") == "gaussian"
                        ? DecayShape::gaussian
                        : DecayShape::exponential;
    c.rabi = m;
  }
  if (top.has("antibunching")) {
    const Node n(doc.at("antibunching"), "antibunching", {"n_emitters", "tau0_ns", "signal_fraction", "lag_grid_ns"});
    AntibunchingConfig m;
    if (n.has("n_emitters")) {
      const auto e = n.integer("n_emitters");
      if (e < 1) throw ConfigError("antibunching.n_emitters must be >= 1");
      m.n_emitters = static_cast<int>(e);
    }
    m.tau0_ns = n.positive("tau0_ns", m.tau0_ns);
    m.signal_fraction = n.positive("signal_fraction", m.signal_fraction);
    if (m.signal_fraction > 1.0) throw ConfigError("antibunching.signal_fraction must be <= 1");
    if (n.has("lag_grid_ns")) m.lag_grid_ns = detail::parse_grid(n.raw("lag_grid_ns"), "antibunching.lag_grid_ns");
    c.antibunching = m;
  }
  if (top.has("reconstruction")) {
    const Node n(doc.at("reconstruction"), "reconstruction",
                 {"theta_dc_deg", "theta_mw_deg", "anchor_dc_um", "anchor_mw_um", "optical_wavelength_nm",
                  "mw_effective_wavelength_um", "mw_freespace_wavelength_cm"});
    ReconstructionConfig r;
    r.theta_dc_deg = n.maybe_number("theta_dc_deg");
    r.theta_mw_deg = n.maybe_number("theta_mw_deg");
    if (n.has("anchor_dc_um")) r.anchor_dc_um = n.positive("anchor_dc_um");
    if (n.has("anchor_mw_um")) r.anchor_mw_um = n.positive("anchor_mw_um");
    if (n.has("optical_wavelength_nm")) r.optical_wavelength_nm = n.positive("optical_wavelength_nm");
    if (n.has("mw_effective_wavelength_um")) r.mw_effective_wavelength_um = n.positive("mw_effective_wavelength_um");
    if (n.has("mw_freespace_wavelength_cm")) r.mw_freespace_wavelength_cm = n.positive("mw_freespace_wavelength_cm");
    c.reconstruction = r;
  }
  if (top.has("output")) {
    const Node n(doc.at("output"), "output", {"dir", "format"});
    if (n.has("dir")) c.out_dir = n.string("dir");
    c.format = n.choice("format", {"csv", "json"}, "csv") == "json" ? TraceFormat::json : TraceFormat::csv;
  }

  const bool wanted[] = {c.experiment == Experiment::cw_esr, c.experiment == Experiment::eseem,
                         c.experiment == Experiment::rabi, c.experiment == Experiment::antibunching};
  const bool present[] = {c.cw_esr.has_value(), c.eseem.has_value(), c.rabi.has_value(), c.antibunching.has_value()};
  const char* names[] = {"cw_esr", "eseem", "rabi", "antibunching"};
  if (c.experiment == Experiment::full_pipeline) {
    if (!(present[0] || present[1] || present[2] || present[3])) {
      throw ConfigError("full_pipeline needs at least one modality block");
    }
  } else {
    for (int i = 0; i < 4; ++i) {
      if (wanted[i] && !present[i]) throw ConfigError(std::string("experiment ") + names[i] + " needs a '" + names[i] + "' block");
    }
  }

  if (ov.seed) c.seed = *ov.seed;
  if (ov.no_noise) c.noise = false;
  if (ov.out_dir) c.out_dir = *ov.out_dir;
  if (ov.format) c.format = *ov.format;
  c.scene.readout.rng_seed = c.seed;

  c.effective = doc;
  c.effective["seed"] = c.seed;
  c.effective["noise"] = c.noise;
  c.effective.erase("output");
  return c;
}

/// Modalities this scenario runs, in a fixed order.
inline std::vector<std::string> active_modalities(const ScenarioConfig& c) {
  std::vector<std::string> out;
  const bool all = c.experiment == Experiment::full_pipeline;
  if (c.cw_esr && (all || c.experiment == Experiment::cw_esr)) out.emplace_back("cw_esr");
  if (c.eseem && (all || c.experiment == Experiment::eseem)) out.emplace_back("eseem");
  if (c.rabi && (all || c.experiment == Experiment::rabi)) out.emplace_back("rabi");
  if (c.antibunching && (all || c.experiment == Experiment::antibunching)) out.emplace_back("antibunching");
  return out;
}

}  // namespace nvmri::cli
