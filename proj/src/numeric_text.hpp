#pragma once

// Text helpers shared by the writers. Doubles are printed in shortest
// round-trip form so output files are byte-stable and lossless.

#include <charconv>
#include <string>
#include <string_view>

namespace hace {

inline std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

inline std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace hace
