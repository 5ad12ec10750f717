#pragma once

// Small helpers shared by the TSV readers and writers.

#include <string>
#include <string_view>
#include <vector>

namespace ssv::text {

std::vector<std::string_view> split(std::string_view line, char sep);

// Splits on runs of spaces; empty tokens are dropped.
std::vector<std::string_view> split_spaces(std::string_view line);

// Strips a trailing '\r' so CRLF files produce a clean diagnostic instead of
// an unparsable number.
std::string_view chomp(std::string_view line);

// Strict float parse of the whole token; rejects trailing garbage and
// non-finite values. Returns false on failure.
bool parse_float(std::string_view token, float& out);
bool parse_double(std::string_view token, double& out);
bool parse_u64(std::string_view token, unsigned long long& out);

// Shortest-exact style formatting with a fixed number of significant digits
// ("%.<digits>g").
std::string format_g(double value, int digits);

// Percent with three decimals: 0.09786 -> "9.786%".
std::string format_percent(double fraction);

}  // namespace ssv::text
