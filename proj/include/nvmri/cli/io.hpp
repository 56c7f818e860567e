#pragma once

// File output for the CLI. Every file goes through write_atomic so a crash
// never leaves a half-written result behind.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "nvmri/error.hpp"
#include "nvmri/trace.hpp"

namespace nvmri::cli {

/// Reading or writing a file failed (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

namespace fs = std::filesystem;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place");
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

inline nlohmann::json read_json(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_atomic(path, j.dump(2) + "\n"); }

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string axis_column(const Trace& tr) { return tr.axis_kind == AxisKind::time ? "time_ns" : "frequency_mhz"; }

/// CSV: '#' comment lines carry units and metadata, then a header row and
/// axis,value,sigma rows.
inline std::string trace_to_csv(const Trace& tr, const std::string& value_unit) {
  std::string out;
  out += "# axis_unit=" + std::string(tr.axis_kind == AxisKind::time ? "ns" : "MHz") + " value_unit=" + value_unit + "\n";
  out += "# noise=" + std::string(tr.noise_applied ? "true" : "false") + " seed=" + std::to_string(tr.seed_used) + "\n";
  for (const auto& w : tr.warnings) out += "# warning=" + w + "\n";
  out += axis_column(tr) + ",value,sigma\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out += fmt_double(tr.axis[i]) + "," + fmt_double(tr.values[i]) + "," +
           fmt_double(tr.sigma.empty() ? 0.0 : tr.sigma[i]) + "\n";
  }
  return out;
}

inline Trace trace_from_csv(const std::string& text, const std::string& source) {
  Trace tr;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  auto num = [&](std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      throw IoError(source + ":" + std::to_string(lineno) + ": bad number '" + std::string(s) + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# warning=", 0) == 0) tr.warnings.push_back(line.substr(10));
      if (line.find("noise=true") != std::string::npos) tr.noise_applied = true;
      if (const auto p = line.find("seed="); p != std::string::npos) tr.seed_used = std::stoull(line.substr(p + 5));
      continue;
    }
    if (!header) {
      if (line.rfind("time_ns,", 0) == 0) {
        tr.axis_kind = AxisKind::time;
      } else if (line.rfind("frequency_mhz,", 0) == 0) {
        tr.axis_kind = AxisKind::frequency;
      } else {
        throw IoError(source + ": missing CSV header");
      }
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw IoError(source + ":" + std::to_string(lineno) + ": expected three columns");
    const std::string_view sv(line);
    tr.axis.push_back(num(sv.substr(0, c1)));
    tr.values.push_back(num(sv.substr(c1 + 1, c2 - c1 - 1)));
    tr.sigma.push_back(num(sv.substr(c2 + 1)));
  }
  if (!header || tr.axis.empty()) throw IoError(source + ": no samples");
  return tr;
}

inline nlohmann::json trace_to_json(const Trace& tr, const std::string& value_unit) {
  return {{"axis_name", axis_column(tr)},
          {"value_unit", value_unit},
          {"noise", tr.noise_applied},
          {"seed", tr.seed_used},
          {"warnings", tr.warnings},
          {"axis", tr.axis},
          {"values", tr.values},
          {"sigma", tr.sigma}};
}

inline Trace trace_from_json(const nlohmann::json& j, const std::string& source) {
  try {
    Trace tr;
    tr.axis_kind = j.at("axis_name").get<std::string>() == "time_ns" ? AxisKind::time : AxisKind::frequency;
    tr.noise_applied = j.at("noise").get<bool>();
    tr.seed_used = j.at("seed").get<std::uint64_t>();
    tr.warnings = j.at("warnings").get<std::vector<std::string>>();
    tr.axis = j.at("axis").get<std::vector<double>>();
    tr.values = j.at("values").get<std::vector<double>>();
    tr.sigma = j.at("sigma").get<std::vector<double>>();
    return tr;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(source + ": malformed trace: " + e.what());
  }
}

}  // namespace nvmri::cli
