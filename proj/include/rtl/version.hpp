#pragma once

#include <cstdlib>
#include <string>

namespace rtl {

inline constexpr const char* kToolName = "rtl";
inline constexpr const char* kToolVersion = "1.0.0";

inline std::string tool_banner() {
  return std::string(kToolName) + " " + kToolVersion;
}

// Verbosity from the RTL_LOG environment variable:
//   0 (or "quiet"/"off") silent, 1 per-episode progress (default),
//   2 (or "debug") adds per-step detail.
inline int log_level() {
  static int level = [] {
    const char* env = std::getenv("RTL_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "0" || v == "quiet" || v == "off") return 0;
    if (v == "2" || v == "debug") return 2;
    return 1;
  }();
  return level;
}

}  // namespace rtl
