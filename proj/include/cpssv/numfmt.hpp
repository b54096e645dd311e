#pragma once

#include <charconv>
#include <string>

namespace cpssv {

/// Shortest fixed-notation text that parses back to exactly `v` ("1", "0.25").
inline std::string format_number(double v) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

/// As format_number but always carries a decimal point, so the text reads back as a real.
inline std::string format_real(double v) {
  std::string s = format_number(v);
  if (s.find('.') == std::string::npos && s.find_first_of("ni") == std::string::npos) s += ".0";
  return s;
}

}  // namespace cpssv
