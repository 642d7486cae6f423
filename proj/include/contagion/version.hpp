#pragma once

namespace contagion {

inline constexpr const char* kToolName = "contagion";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace contagion
