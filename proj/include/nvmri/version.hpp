#pragma once

namespace nvmri {
inline constexpr const char* kVersion = "0.1.0";
}
