#pragma once

// Plain-text summary of an output directory, built from manifest.json plus
// whatever fits.json / report.json the run produced.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "nvmri/cli/io.hpp"

namespace nvmri::cli {

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string list(const nlohmann::json& arr, int digits) {
  std::string s;
  for (const auto& v : arr) {
    if (!s.empty()) s += "  ";
    s += v.is_null() ? "-" : fixed(v.get<double>(), digits);
  }
  return s;
}

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace detail

inline std::string render_report(const fs::path& dir) {
  using nlohmann::json;
  using detail::fixed;
  using detail::list;
  using detail::pad;
  if (!fs::exists(dir / "manifest.json")) throw IoError("no manifest.json in " + dir.string());
  const auto manifest = read_json(dir / "manifest.json");
  std::string out;
  out += "scenario   " + manifest.value("scenario", std::string("?")) + " (" + manifest.value("experiment", std::string("?")) + ")\n";
  out += "version    " + manifest.value("version", std::string("?")) + "\n";
  out += "config     " + manifest.value("config_hash", std::string("?")) + "\n";
  out += "seed       " + std::to_string(manifest.value("seed", 0ull)) + (manifest.value("noise", true) ? "" : " (noise off)") + "\n";
  for (const auto& s : manifest.at("stages")) {
    out += "stage      " + pad(s.at("name").get<std::string>(), 12) + fixed(s.at("seconds").get<double>(), 2) + " s\n";
  }

  if (fs::exists(dir / "fits.json")) {
    const auto fits = read_json(dir / "fits.json");
    for (const auto& [mod, m] : fits.at("modalities").items()) {
      out += "\n[" + mod + "]\n";
      for (const auto& p : m.at("points")) {
        if (mod == "antibunching") {
          out += "  g2(0) " + fixed(p.at("g2_zero").get<double>(), 3) + "  signal fraction " +
                 fixed(p.at("signal_fraction").get<double>(), 2) + "  emitters " + std::to_string(p.at("emitters").get<int>()) + "\n";
          continue;
        }
        out += "  I " + pad(fixed(p.at("current_a").get<double>() * 1000.0, 1) + " mA", 11);
        if (mod == "cw_esr") {
          out += "centers " + list(p.at("centers_mhz"), 2) + " MHz   splittings " + list(p.at("splittings_mhz"), 2) + " MHz";
          if (p.at("degenerate").get<bool>()) out += "   (degenerate)";
        } else {
          out += "tones " + list(p.at("tones_mhz"), 3) + " MHz   node ";
          out += p.at("node_ns").is_null() ? std::string("none") : fixed(p.at("node_ns").get<double>(), 0) + " ns";
        }
        out += "\n";
      }
    }
  }

  if (fs::exists(dir / "report.json")) {
    const auto rep = read_json(dir / "report.json");
    for (const auto& [mod, r] : rep.at("modalities").items()) {
      out += "\n[" + mod + " positions]\n";
      out += "  slopes       " + list(r.at("slopes_mhz_per_a"), 3) + " MHz/A\n";
      out += "  radii        " + list(r.at("radial_positions_um"), 4) + " um\n";
      out += "  separations  " + list(r.at("separations_nm"), 1) + " nm\n";
      if (!r.at("resolution_nm").is_null()) {
        out += "  resolution   " + fixed(r.at("resolution_nm").get<double>(), 1) + " nm (first resolved at " +
               fixed(r.at("first_resolved_current_a").get<double>() * 1000.0, 1) + " mA of " +
               fixed(r.at("max_current_a").get<double>() * 1000.0, 1) + " mA)\n";
      }
      if (r.contains("wavelength_ratios")) {
        for (const auto& w : r.at("wavelength_ratios")) {
          out += "  " + pad(w.at("label").get<std::string>(), 13) + "wavelength / " + fixed(w.at("ratio").get<double>(), 1) +
                 " (about 1/" + fixed(w.at("rounded").get<double>(), 0) + ")\n";
        }
      }
    }
    if (rep.contains("dc_mw_parity")) {
      const auto& p = rep.at("dc_mw_parity");
      out += "\n[dc/mw parity]\n";
      out += "  dc " + list(p.at("dc_separations_nm"), 1) + " nm   mw " + list(p.at("mw_separations_nm"), 1) + " nm";
      if (!p.at("max_abs_difference_nm").is_null()) out += "   max diff " + fixed(p.at("max_abs_difference_nm").get<double>(), 1) + " nm";
      out += "\n";
    }
  }
  return out;
}

}  // namespace nvmri::cli
