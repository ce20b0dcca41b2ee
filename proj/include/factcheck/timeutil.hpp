#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace factcheck {

/// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

class TimeParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

UnixSeconds days_from_civil(int year, unsigned month, unsigned day);

/// Accepts `YYYY-MM-DD` (midnight UTC), `YYYY-MM-DDTHH:MM[:SS][Z]` with an
/// optional `+HH:MM` / `-HH:MM` offset, or a bare integer of epoch seconds.
UnixSeconds parse_timestamp(std::string_view text);
/// Date-only or date-time ISO-8601, never a bare integer.
UnixSeconds parse_iso8601(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(UnixSeconds t);

inline constexpr UnixSeconds kSecondsPerDay = 86400;

}  // namespace factcheck
