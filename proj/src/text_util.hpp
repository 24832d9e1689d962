#pragma once

// Small parsing/formatting helpers shared by the TSV readers and writers.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tweetembed/errors.hpp"

namespace tweetembed::detail {

inline std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  return split_on(line, '\t');
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::string where(std::string_view what, std::size_t line_no) {
  return std::string(what) + " line " + std::to_string(line_no);
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view context, int base = 10) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError(std::string(context) + ": expected an integer, got '" + std::string(text) +
                     "'");
  }
  return value;
}

inline double parse_double(std::string_view text, std::string_view context) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InputError(std::string(context) + ": expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

// Expects "key=value" and returns value.
inline std::string_view expect_key(std::string_view field, std::string_view key,
                                   std::string_view context) {
  if (!field.starts_with(key) || field.size() <= key.size() || field[key.size()] != '=') {
    throw InputError(std::string(context) + ": expected field '" + std::string(key) + "=...'");
  }
  return field.substr(key.size() + 1);
}

}  // namespace tweetembed::detail
