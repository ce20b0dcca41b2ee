#include "factcheck/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace factcheck {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw TimeParseError("timestamp truncated: " + std::string(text));
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') throw TimeParseError("bad digit in timestamp: " + std::string(text));
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw TimeParseError("malformed timestamp: " + std::string(text));
  }
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

}  // namespace

// Howard Hinnant's days_from_civil.
UnixSeconds days_from_civil(int year, unsigned month, unsigned day) {
  const int y = year - (month <= 2 ? 1 : 0);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<UnixSeconds>(era) * 146097 + static_cast<UnixSeconds>(doe) - 719468;
}

UnixSeconds parse_iso8601(std::string_view text) {
  const int year = parse_fixed(text, 0, 4);
  expect(text, 4, '-');
  const auto month = static_cast<unsigned>(parse_fixed(text, 5, 2));
  expect(text, 7, '-');
  const auto day = static_cast<unsigned>(parse_fixed(text, 8, 2));
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
    throw TimeParseError("invalid calendar date: " + std::string(text));
  }
  UnixSeconds t = days_from_civil(year, month, day) * kSecondsPerDay;
  if (text.size() == 10) return t;

  if (text[10] != 'T' && text[10] != ' ') throw TimeParseError("malformed timestamp: " + std::string(text));
  const int hour = parse_fixed(text, 11, 2);
  expect(text, 13, ':');
  const int minute = parse_fixed(text, 14, 2);
  std::size_t pos = 16;
  int second = 0;
  if (pos < text.size() && text[pos] == ':') {
    second = parse_fixed(text, pos + 1, 2);
    pos += 3;
  }
  if (hour > 23 || minute > 59 || second > 60) {
    throw TimeParseError("invalid time of day: " + std::string(text));
  }
  t += hour * 3600 + minute * 60 + second;

  if (pos == text.size()) return t;
  if (text[pos] == 'Z' && pos + 1 == text.size()) return t;
  if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
    const int oh = parse_fixed(text, pos + 1, 2);
    expect(text, pos + 3, ':');
    const int om = parse_fixed(text, pos + 4, 2);
    const int offset = oh * 3600 + om * 60;
    return text[pos] == '+' ? t - offset : t + offset;
  }
  throw TimeParseError("malformed timestamp: " + std::string(text));
}

UnixSeconds parse_timestamp(std::string_view text) {
  if (text.empty()) throw TimeParseError("empty timestamp");
  const auto digits = text.front() == '-' ? text.substr(1) : text;
  const bool integer =
      !digits.empty() && digits.find_first_not_of("0123456789") == std::string_view::npos;
  if (integer) {
    UnixSeconds v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw TimeParseError("bad epoch seconds: " + std::string(text));
    }
    return v;
  }
  return parse_iso8601(text);
}

std::string format_iso8601(UnixSeconds t) {
  UnixSeconds days = t / kSecondsPerDay;
  UnixSeconds rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  // civil_from_days
  const UnixSeconds z = days + 719468;
  const UnixSeconds era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const auto y = static_cast<long long>(yoe) + era * 400 + (m <= 2 ? 1 : 0);

  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace factcheck
