#pragma once

#include <charconv>
#include <string>

namespace domslam {

/// 17 significant digits in %g style, which reads back as the same double.
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

}  // namespace domslam
