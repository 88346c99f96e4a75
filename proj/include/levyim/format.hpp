#pragma once

#include <array>
#include <charconv>
#include <string>

namespace levyim {

/// Shortest round-trip decimal form; locale independent, so CSV output is byte-stable.
inline std::string fmt_double(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

}  // namespace levyim
