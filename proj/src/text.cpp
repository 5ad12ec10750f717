#include "ssv/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace ssv::text {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

namespace {

template <typename T>
bool parse_real(std::string_view token, T& out) {
  if (token.empty()) return false;
  // from_chars does not accept a leading '+'.
  if (token.front() == '+') token.remove_prefix(1);
  T value{};
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return false;
  out = value;
  return true;
}

}  // namespace

bool parse_float(std::string_view token, float& out) { return parse_real(token, out); }
bool parse_double(std::string_view token, double& out) { return parse_real(token, out); }

bool parse_u64(std::string_view token, unsigned long long& out) {
  if (token.empty()) return false;
  const auto* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_g(double value, int digits) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_percent(double fraction) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, "%.3f%%", fraction * 100.0);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace ssv::text
