#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace corridor {

// Simulation time in whole seconds since midnight. The simulator steps at 1 Hz.
using Seconds = std::int64_t;

inline constexpr Seconds kHour = 3600;
inline constexpr Seconds kMinute = 60;

// "HH:MM" or "HH:MM:SS"; throws ConfigError on malformed input.
Seconds parse_clock(std::string_view text);
std::string format_clock(Seconds t);

}  // namespace corridor
