#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV readers and writers.
namespace metroflow::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<std::int64_t> to_int(std::string_view s);
std::optional<double> to_double(std::string_view s);

/// Shortest representation that round-trips exactly.
std::string format(double value);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double value, int digits);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace metroflow::text
