#include "corridor/core/time.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

#include "corridor/core/error.hpp"

namespace corridor {

Seconds parse_clock(std::string_view text) {
  std::vector<int> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t colon = text.find(':', pos);
    const std::string_view field =
        text.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || value < 0) {
      throw ConfigError("malformed clock time '" + std::string(text) + "'");
    }
    parts.push_back(value);
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3 || parts[0] > 24 || parts[1] > 59 ||
      (parts.size() == 3 && parts[2] > 59)) {
    throw ConfigError("malformed clock time '" + std::string(text) + "'");
  }
  Seconds t = parts[0] * kHour + parts[1] * kMinute;
  if (parts.size() == 3) t += parts[2];
  if (t > 24 * kHour) throw ConfigError("clock time past 24:00 '" + std::string(text) + "'");
  return t;
}

std::string format_clock(Seconds t) {
  char buf[16];
  const auto h = static_cast<int>(t / kHour);
  const auto m = static_cast<int>((t % kHour) / kMinute);
  const auto s = static_cast<int>(t % kMinute);
  if (s == 0) {
    std::snprintf(buf, sizeof buf, "%02d:%02d", h, m);
  } else {
    std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", h, m, s);
  }
  return buf;
}

}  // namespace corridor
