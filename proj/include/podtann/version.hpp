#pragma once

namespace podtann {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

} // namespace podtann
