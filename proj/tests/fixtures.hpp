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

// Shared test data: the 15-hour day of reports used for the report-grammar
// and analyzer tests, and small helpers.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pedwatch/analyzer.hpp"
#include "pedwatch/core.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/model_client.hpp"
#include "pedwatch/reporter.hpp"
#include "pedwatch/time.hpp"

namespace pwtest {

using namespace pedwatch;

inline constexpr int kOrlandoOffset = -240;  // EDT
inline constexpr const char* kLocation = "Central Florida Blvd and N Alafaya Trail, Orlando, FL";

struct DayRow {
  int hour;  // local start hour
  std::optional<RainClass> weather;
  DryPhrase dry;
  std::int64_t pedestrians;
  std::int64_t violations;
  std::int64_t conflicts;
};

// June 2, 2024, 8 am to 11 pm.
inline const std::array<DayRow, 15> kDay = {{
    {8, RainClass::None, DryPhrase::ClearWeather, 15, 0, 0},
    {9, RainClass::Light, DryPhrase::NoRaining, 12, 3, 1},
    {10, RainClass::Moderate, DryPhrase::NoRaining, 7, 5, 2},
    {11, RainClass::Heavy, DryPhrase::NoRaining, 3, 3, 1},
    {12, RainClass::Moderate, DryPhrase::NoRaining, 3, 2, 2},
    {13, RainClass::Light, DryPhrase::NoRaining, 5, 1, 0},
    {14, RainClass::None, DryPhrase::NoRaining, 4, 0, 0},
    {15, RainClass::None, DryPhrase::NoRaining, 11, 2, 0},
    {16, RainClass::None, DryPhrase::NoRaining, 9, 0, 4},
    {17, RainClass::None, DryPhrase::NoRaining, 21, 4, 7},
    {18, RainClass::None, DryPhrase::NoRaining, 13, 0, 0},
    {19, RainClass::None, DryPhrase::NoRaining, 8, 0, 0},
    {20, RainClass::None, DryPhrase::NoRaining, 2, 1, 0},
    {21, RainClass::None, DryPhrase::NoRaining, 3, 2, 0},
    {22, RainClass::None, DryPhrase::NoRaining, 0, 0, 0},
}};

// Reference wording of the same day, one line per hour.
inline const std::array<const char*, 15> kDayText = {
    "On June 2, 2024, between 08:00 am and 09:00 am, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, clear weather, 15 pedestrians crossed with no crossing violations and no conflicts.",
    "On June 2, 2024, between 09:00 am and 10:00 am, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during light raining, 12 pedestrians crossed with 3 crossing violations and 1 conflict.",
    "On June 2, 2024, between 10:00 am and 11:00 am, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during moderate raining, 7 pedestrians crossed with 5 crossing violations and 2 conflicts.",
    "On June 2, 2024, between 11:00 am and 12:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during heavy raining, 3 pedestrians crossed with 3 crossing violations and 1 conflict.",
    "On June 2, 2024, between 12:00 pm and 01:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during moderate raining, 3 pedestrians crossed with 2 crossing violations and 2 conflicts.",
    "On June 2, 2024, between 01:00 pm and 02:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during light raining, 5 pedestrians crossed with 1 crossing violation and no conflicts.",
    "On June 2, 2024, between 02:00 pm and 03:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 4 pedestrians crossed with no crossing violations and no conflicts.",
    "On June 2, 2024, between 03:00 pm and 04:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 11 pedestrians crossed with 2 crossing violations and no conflicts.",
    "On June 2, 2024, between 04:00 pm and 05:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 9 pedestrians crossed with no crossing violations and 4 conflicts.",
    "On June 2, 2024, between 05:00 pm and 06:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 21 pedestrians crossed with 4 crossing violations and 7 conflicts.",
    "On June 2, 2024, between 06:00 pm and 07:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 13 pedestrians crossed with no crossing violations and no conflicts.",
    "On June 2, 2024, between 07:00 pm and 08:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 8 pedestrians crossed with no crossing violations and no conflicts.",
    "On June 2, 2024, between 08:00 pm and 09:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 2 pedestrians crossed with 1 crossing violation and no conflicts.",
    "On June 2, 2024, between 09:00 pm and 10:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 3 pedestrians crossed with 2 crossing violations and no conflicts.",
    "On June 2, 2024, between 10:00 pm and 11:00 pm, at Central Florida Blvd and N Alafaya Trail, Orlando, FL, during no raining, 0 pedestrians crossed with no crossing violations and no conflicts.",
};

inline Timestamp local_hour(int hour) {
  return from_civil({2024, 6, 2, hour, 0, 0.0}, kOrlandoOffset);
}

// Splits one row into a consistent aggregate: crossings alternate A/B,
// violations fill B first, hours from 8 pm on are night, conflicts split
// serious-first.
inline HourlyAggregate day_aggregate(const DayRow& row) {
  HourlyAggregate a;
  a.intersection_id = "cfb-alafaya";
  a.location_label = kLocation;
  a.utc_offset_minutes = kOrlandoOffset;
  a.hour_start = local_hour(row.hour);
  a.hour_end = a.hour_start + 3600.0;
  a.weather_class = row.weather;
  a.dry_phrase = row.dry;
  a.pedestrian_count = row.pedestrians;
  a.violation_count = row.violations;
  a.conflict_count = row.conflicts;
  a.serious_count = (row.conflicts + 1) / 2;
  a.slight_count = row.conflicts / 2;
  auto& A = a.per_crosswalk["A"];
  auto& B = a.per_crosswalk["B"];
  A.crossings = (row.pedestrians + 1) / 2;
  B.crossings = row.pedestrians / 2;
  B.violations = std::min(row.violations, B.crossings);
  A.violations = row.violations - B.violations;
  A.a_to_b = A.crossings / 2;
  A.b_to_a = A.crossings - A.a_to_b;
  B.a_to_b = B.crossings / 2;
  B.b_to_a = B.crossings - B.a_to_b;
  const bool night = row.hour >= 20;
  (night ? a.day_night.night_crossings : a.day_night.day_crossings) = row.pedestrians;
  (night ? a.day_night.night_violations : a.day_night.day_violations) = row.violations;
  return a;
}

// Crosswalk totals A = 11 crossings / 2 violations, B = 18 / 13, plus a side
// crosswalk C = 10 / 10 so that the 25 violations split 19 night / 6 day.
inline std::vector<HourlyAggregate> split_aggregates() {
  struct Row {
    int hour;
    CrosswalkTally a, b, c;
    std::int64_t day_v, night_v;
  };
  const std::vector<Row> rows = {
      {18, {6, 1, 3, 3}, {5, 3, 2, 3}, {2, 2, 1, 1}, 6, 0},
      {20, {3, 1, 2, 1}, {8, 6, 4, 4}, {4, 4, 2, 2}, 0, 11},
      {21, {2, 0, 1, 1}, {5, 4, 2, 3}, {4, 4, 2, 2}, 0, 8},
  };
  std::vector<HourlyAggregate> out;
  for (const auto& r : rows) {
    HourlyAggregate a;
    a.intersection_id = "cfb-alafaya";
    a.location_label = kLocation;
    a.utc_offset_minutes = kOrlandoOffset;
    a.hour_start = local_hour(r.hour);
    a.hour_end = a.hour_start + 3600.0;
    a.weather_class = RainClass::None;
    a.per_crosswalk = {{"A", r.a}, {"B", r.b}, {"C", r.c}};
    a.pedestrian_count = r.a.crossings + r.b.crossings + r.c.crossings;
    a.violation_count = r.a.violations + r.b.violations + r.c.violations;
    a.day_night.day_violations = r.day_v;
    a.day_night.night_violations = r.night_v;
    (r.hour >= 20 ? a.day_night.night_crossings : a.day_night.day_crossings) = a.pedestrian_count;
    out.push_back(a);
  }
  return out;
}

inline std::vector<HourlyReport> template_reports(const std::vector<HourlyAggregate>& aggs) {
  std::vector<HourlyReport> out;
  for (const auto& a : aggs) out.push_back(make_template_report(a));
  return out;
}

inline std::vector<HourlyReport> day_reports() {
  std::vector<HourlyAggregate> aggs;
  for (const auto& row : kDay) aggs.push_back(day_aggregate(row));
  return template_reports(aggs);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("pedwatch-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Scripted model client.
class FakeModel final : public ModelClient {
 public:
  explicit FakeModel(std::function<std::string(const std::vector<ChatMessage>&)> fn)
      : fn_(std::move(fn)) {}

  std::string complete(const std::vector<ChatMessage>& messages) override {
    ++calls;
    last = messages;
    return fn_(messages);
  }

  std::atomic<int> calls{0};
  std::vector<ChatMessage> last;

 private:
  std::function<std::string(const std::vector<ChatMessage>&)> fn_;
};

inline std::shared_ptr<FakeModel> down_model() {
  return std::make_shared<FakeModel>([](const std::vector<ChatMessage>&) -> std::string {
    throw Error(ErrorCode::Unavailable, "connection refused");
  });
}

}  // namespace pwtest
