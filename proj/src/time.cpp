// Copyright 2026 The pedwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pedwatch/time.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "pedwatch/error.hpp"

namespace pedwatch {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

int digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw Error(ErrorCode::Parse, "truncated timestamp '" + std::string(text) + "'");
  }
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw Error(ErrorCode::Parse, "malformed timestamp '" + std::string(text) + "'");
    }
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(ErrorCode::Parse, "malformed timestamp '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  CivilTime c;
  c.year = digits(text, 0, 4);
  expect(text, 4, '-');
  c.month = digits(text, 5, 2);
  expect(text, 7, '-');
  c.day = digits(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
    throw Error(ErrorCode::Parse, "malformed timestamp '" + std::string(text) + "'");
  }
  c.hour = digits(text, 11, 2);
  expect(text, 13, ':');
  c.minute = digits(text, 14, 2);
  expect(text, 16, ':');
  c.second = digits(text, 17, 2);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    double scale = 0.1;
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      c.second += (text[pos] - '0') * scale;
      scale /= 10.0;
      ++pos;
    }
    if (pos == start) {
      throw Error(ErrorCode::Parse, "empty fraction in timestamp '" + std::string(text) + "'");
    }
  }
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour > 23 || c.minute > 59 ||
      c.second >= 61.0) {
    throw Error(ErrorCode::Parse, "out-of-range field in timestamp '" + std::string(text) + "'");
  }
  static constexpr int kMonthDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (c.year % 4 == 0 && c.year % 100 != 0) || c.year % 400 == 0;
  if (c.day > kMonthDays[c.month - 1] || (c.month == 2 && c.day == 29 && !leap)) {
    throw Error(ErrorCode::Parse, "no such day in timestamp '" + std::string(text) + "'");
  }
  const int offset = parse_utc_offset(text.substr(pos));
  return from_civil(c, offset);
}

std::string format_rfc3339(Timestamp t, int utc_offset_minutes) {
  const double rounded_ms = std::round(t * 1000.0) / 1000.0;
  CivilTime c = to_civil(rounded_ms, utc_offset_minutes);
  char buf[64];
  const double whole = std::floor(c.second);
  const int millis = static_cast<int>(std::lround((c.second - whole) * 1000.0));
  if (millis == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", c.year, c.month, c.day, c.hour,
                  c.minute, static_cast<int>(whole));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03d", c.year, c.month, c.day,
                  c.hour, c.minute, static_cast<int>(whole), millis);
  }
  return std::string(buf) + format_utc_offset(utc_offset_minutes);
}

CivilTime to_civil(Timestamp t, int utc_offset_minutes) {
  const double local = t + utc_offset_minutes * 60.0;
  const double day_floor = std::floor(local / 86400.0);
  double sec_of_day = local - day_floor * 86400.0;
  if (sec_of_day >= 86400.0) {
    sec_of_day = 0.0;
  }
  CivilTime c;
  civil_from_days(static_cast<std::int64_t>(day_floor), c.year, c.month, c.day);
  c.hour = static_cast<int>(sec_of_day / 3600.0);
  c.minute = static_cast<int>((sec_of_day - c.hour * 3600.0) / 60.0);
  c.second = sec_of_day - c.hour * 3600.0 - c.minute * 60.0;
  return c;
}

Timestamp from_civil(const CivilTime& c, int utc_offset_minutes) {
  const auto days = days_from_civil(c.year, static_cast<unsigned>(c.month), static_cast<unsigned>(c.day));
  return static_cast<double>(days) * 86400.0 + c.hour * 3600.0 + c.minute * 60.0 + c.second -
         utc_offset_minutes * 60.0;
}

int parse_utc_offset(std::string_view text) {
  if (text == "Z" || text == "z") {
    return 0;
  }
  if (text.size() != 6 || (text[0] != '+' && text[0] != '-') || text[3] != ':') {
    throw Error(ErrorCode::Parse, "malformed UTC offset '" + std::string(text) + "'");
  }
  const int minutes = digits(text, 1, 2) * 60 + digits(text, 4, 2);
  return text[0] == '-' ? -minutes : minutes;
}

std::string format_utc_offset(int minutes) {
  if (minutes == 0) {
    return "Z";
  }
  char buf[16];
  const int a = minutes < 0 ? -minutes : minutes;
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", minutes < 0 ? '-' : '+', a / 60, a % 60);
  return buf;
}

int parse_clock_minutes(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') {
    throw Error(ErrorCode::Parse, "malformed clock time '" + std::string(text) + "'");
  }
  const int h = digits(text, 0, 2);
  const int m = digits(text, 3, 2);
  if (h > 24 || m > 59 || (h == 24 && m != 0)) {
    throw Error(ErrorCode::Parse, "clock time out of range '" + std::string(text) + "'");
  }
  return h * 60 + m;
}

std::string format_clock_minutes(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

double local_minute_of_day(Timestamp t, int utc_offset_minutes) {
  const double local = t + utc_offset_minutes * 60.0;
  const double sec = local - std::floor(local / 86400.0) * 86400.0;
  return sec / 60.0;
}

Timestamp floor_to_interval(Timestamp t, double interval_s, int utc_offset_minutes) {
  const double local = t + utc_offset_minutes * 60.0;
  return std::floor(local / interval_s) * interval_s - utc_offset_minutes * 60.0;
}

}  // namespace pedwatch
