#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lrsched {

using Bytes = std::int64_t;
using Millicores = std::int64_t;

inline constexpr Bytes kKB = 1000;
inline constexpr Bytes kMB = 1000 * kKB;
inline constexpr Bytes kGB = 1000 * kMB;
inline constexpr Bytes kKiB = 1024;
inline constexpr Bytes kMiB = 1024 * kKiB;
inline constexpr Bytes kGiB = 1024 * kMiB;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits "12.5MB" into {12.5, "MB"}.
inline std::optional<std::pair<double, std::string_view>> split_quantity(std::string_view text) {
  text = trim(text);
  std::size_t i = 0;
  while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' ||
                             (i == 0 && (text[i] == '+' || text[i] == '-')))) {
    ++i;
  }
  if (i == 0) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + i, value);
  if (ec != std::errc{} || ptr != text.data() + i || !std::isfinite(value)) return std::nullopt;
  return std::pair{value, trim(text.substr(i))};
}

inline std::optional<double> byte_multiplier(std::string_view unit) {
  if (unit.empty() || unit == "B") return 1.0;
  if (unit == "KB" || unit == "kB") return double(kKB);
  if (unit == "MB") return double(kMB);
  if (unit == "GB") return double(kGB);
  if (unit == "KiB") return double(kKiB);
  if (unit == "MiB") return double(kMiB);
  if (unit == "GiB") return double(kGiB);
  return std::nullopt;
}

}  // namespace detail

/// Parses a byte quantity: a plain number of bytes or a number with one of
/// the suffixes B, KB, MB, GB (decimal) or KiB, MiB, GiB (binary).
inline Bytes parse_bytes(std::string_view text) {
  auto q = detail::split_quantity(text);
  if (!q) throw std::invalid_argument("not a byte quantity: '" + std::string(text) + "'");
  auto mult = detail::byte_multiplier(q->second);
  if (!mult) throw std::invalid_argument("unknown byte unit '" + std::string(q->second) + "'");
  if (q->first < 0) throw std::invalid_argument("negative byte quantity: '" + std::string(text) + "'");
  return static_cast<Bytes>(std::llround(q->first * *mult));
}

/// Parses "500m" (millicores) or "2" / "0.5" (cores).
inline Millicores parse_millicores(std::string_view text) {
  auto q = detail::split_quantity(text);
  if (!q) throw std::invalid_argument("not a CPU quantity: '" + std::string(text) + "'");
  if (q->first < 0) throw std::invalid_argument("negative CPU quantity: '" + std::string(text) + "'");
  if (q->second == "m") return static_cast<Millicores>(std::llround(q->first));
  if (q->second.empty()) return static_cast<Millicores>(std::llround(q->first * 1000.0));
  throw std::invalid_argument("unknown CPU unit '" + std::string(q->second) + "'");
}

/// Parses a bandwidth such as "10MB/s" into bytes per second. The "/s"
/// suffix is optional.
inline double parse_bandwidth(std::string_view text) {
  auto q = detail::split_quantity(text);
  if (!q) throw std::invalid_argument("not a bandwidth: '" + std::string(text) + "'");
  std::string_view unit = q->second;
  if (unit.size() >= 2 && unit.substr(unit.size() - 2) == "/s") unit.remove_suffix(2);
  auto mult = detail::byte_multiplier(unit);
  if (!mult) throw std::invalid_argument("unknown bandwidth unit '" + std::string(q->second) + "'");
  if (q->first <= 0) throw std::invalid_argument("bandwidth must be positive: '" + std::string(text) + "'");
  return q->first * *mult;
}

}  // namespace lrsched
