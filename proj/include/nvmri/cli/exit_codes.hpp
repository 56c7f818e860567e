#pragma once

#include <exception>
#include <filesystem>
#include <string>

#include "nvmri/cli/config.hpp"
#include "nvmri/cli/io.hpp"

namespace nvmri::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFit = 3;
inline constexpr int kExitIo = 4;

struct Failure {
  int code = kExitOther;
  std::string kind;
};

/// Exit code and error.json kind for an exception escaping a stage.
inline Failure classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return {kExitConfig, "config"};
  if (dynamic_cast<const NonConvergenceError*>(&e)) return {kExitFit, "non_convergence"};
  if (dynamic_cast<const IoError*>(&e)) return {kExitIo, "io"};
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return {kExitIo, "io"};
  return {kExitOther, "error"};
}

}  // namespace nvmri::cli
