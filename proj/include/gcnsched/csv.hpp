#pragma once

#include <charconv>
#include <string>

namespace gcnsched {

/// Shortest round-trip decimal form, independent of the global locale.
inline std::string fmt(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

}  // namespace gcnsched
