#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include "scour/error.hpp"

namespace scour {

using TimePoint = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kHour{3600};
inline constexpr double kDaysPerYear = 365.2425;

namespace detail {

inline bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

}  // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SS` with an optional trailing `Z`. Only UTC is accepted.
inline TimePoint parse_timestamp(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  const bool shape_ok = s.size() >= 19 && s[4] == '-' && s[7] == '-' &&
                        (s[10] == 'T' || s[10] == ' ') && s[13] == ':' && s[16] == ':';
  if (!shape_ok || !detail::parse_fixed(s, 0, 4, y) || !detail::parse_fixed(s, 5, 2, mo) ||
      !detail::parse_fixed(s, 8, 2, d) || !detail::parse_fixed(s, 11, 2, h) ||
      !detail::parse_fixed(s, 14, 2, mi) || !detail::parse_fixed(s, 17, 2, sec)) {
    throw Error("timestamp", "malformed timestamp '" + std::string(s) + "'");
  }
  const auto rest = s.substr(19);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
    throw Error("timestamp", "non-UTC timestamp '" + std::string(s) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) {
    throw Error("timestamp", "invalid calendar value in '" + std::string(s) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

inline TimePoint start_of_year(int y) {
  using namespace std::chrono;
  return sys_days{year{y} / January / 1};
}

inline int year_of(TimePoint t) {
  using namespace std::chrono;
  return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

inline unsigned month_of(TimePoint t) {
  using namespace std::chrono;
  return static_cast<unsigned>(year_month_day{floor<days>(t)}.month());
}

/// Fraction of a 365.2425-day year elapsed since Jan 1 00:00 UTC of the same calendar year.
inline double year_fraction(TimePoint t) {
  const auto elapsed = (t - start_of_year(year_of(t))).count();
  return static_cast<double>(elapsed) / (kDaysPerYear * 86400.0);
}

/// (sin 2πτ, cos 2πτ)
inline std::pair<double, double> cyclic_year(double tau) {
  const double a = 2.0 * std::numbers::pi * tau;
  return {std::sin(a), std::cos(a)};
}

}  // namespace scour
