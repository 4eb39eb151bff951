#pragma once

namespace epifit {

inline constexpr const char* kToolName = "epifit";
inline constexpr const char* kToolVersion = "1.0.0";

} // namespace epifit
