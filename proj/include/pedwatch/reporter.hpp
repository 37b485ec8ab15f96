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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pedwatch/core.hpp"
#include "pedwatch/model_client.hpp"

namespace pedwatch {

inline constexpr double kReportInterval = 3600.0;

/// Rain class covering the most of [start, end); each sample holds until the
/// next one. Ties go to the heavier class. Empty when nothing covers the span.
std::optional<RainClass> dominant_rain_class(std::span<const WeatherSample> samples, Timestamp start,
                                             Timestamp end);

/// Throws Error(InvalidArgument) when an event or weather sample falls outside
/// [hour_start, hour_start + interval).
HourlyAggregate aggregate_hour(std::span<const CrossingEvent> crossings,
                               std::span<const ConflictEvent> conflicts,
                               std::span<const WeatherSample> weather, Timestamp hour_start,
                               const IntersectionGeometry& geometry,
                               double interval_s = kReportInterval);

/// Fields rendered into the report sentence.
struct ReportTemplateContext {
  std::string date;        // "June 2, 2024"
  std::string start_clock; // "08:00 am"
  std::string end_clock;
  std::string location;
  std::optional<std::string> weather;  // "clear weather", "during light raining", ...
  std::int64_t pedestrians = 0;
  std::int64_t violations = 0;
  std::int64_t conflicts = 0;
};

ReportTemplateContext make_template_context(const HourlyAggregate& agg);

std::string weather_phrase(RainClass c, DryPhrase dry);

std::string render_report(const HourlyAggregate& agg);

HourlyReport make_template_report(const HourlyAggregate& agg);

struct ReportCounts {
  std::int64_t pedestrians = 0;
  std::int64_t violations = 0;
  std::int64_t conflicts = 0;

  friend bool operator==(const ReportCounts&, const ReportCounts&) = default;
};

/// Pulls (pedestrians, violations, conflicts) out of report prose; "no"
/// reads as zero. Empty when a count is missing or stated inconsistently.
std::optional<ReportCounts> extract_counts(std::string_view text);

/// Model rewrite of a template report. Falls back to the template (source
/// Template) when the client is absent, fails, or changes any count.
HourlyReport polish_report(const HourlyReport& templated, ModelClient* client);

/// (bitrate * duration / 8) / report_bytes * 100.
double storage_ratio(double video_bitrate_bps, double duration_s, double report_bytes);

nlohmann::json report_to_json(const HourlyReport& report);
HourlyReport report_from_json(const nlohmann::json& j);
/// The aggregate fields of a record; "text" and "source" are not read.
HourlyAggregate aggregate_from_json(const nlohmann::json& j);

/// One persisted line, without the trailing newline.
std::string encode_report_record(const HourlyReport& report);

}  // namespace pedwatch
