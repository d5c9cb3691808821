#pragma once

#include <string>

namespace svkit {

/// Shortest round-trip decimal representation ("nan", "inf" for non-finite).
std::string fmt_double(double x);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace svkit
