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

#pragma once

#include <string>
#include <string_view>

namespace pedwatch {

// Seconds since the Unix epoch, UTC.
using Timestamp = double;

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  double second = 0.0;
};

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+hh:mm|-hh:mm)". A space may replace 'T'.
Timestamp parse_rfc3339(std::string_view text);

// Whole seconds print without a fraction; otherwise millisecond precision.
std::string format_rfc3339(Timestamp t, int utc_offset_minutes);

CivilTime to_civil(Timestamp t, int utc_offset_minutes);
Timestamp from_civil(const CivilTime& civil, int utc_offset_minutes);

// "+hh:mm", "-hh:mm" or "Z".
int parse_utc_offset(std::string_view text);
std::string format_utc_offset(int minutes);

// "HH:MM" local clock -> minutes after midnight.
int parse_clock_minutes(std::string_view text);
std::string format_clock_minutes(int minutes);

// Minutes after local midnight (fractional).
double local_minute_of_day(Timestamp t, int utc_offset_minutes);

// Start of the reporting interval containing t, aligned to local clock multiples of `interval_s`.
Timestamp floor_to_interval(Timestamp t, double interval_s, int utc_offset_minutes);

}  // namespace pedwatch
