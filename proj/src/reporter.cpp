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

#include "pedwatch/reporter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <regex>

#include <spdlog/spdlog.h>

#include "pedwatch/error.hpp"

namespace pedwatch {

using nlohmann::json;

std::optional<RainClass> dominant_rain_class(std::span<const WeatherSample> samples, Timestamp start,
                                             Timestamp end) {
  std::vector<WeatherSample> sorted(samples.begin(), samples.end());
  // Equal timestamps: the heavier class holds the interval, independent of input order.
  std::sort(sorted.begin(), sorted.end(), [](const WeatherSample& a, const WeatherSample& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.rain_class < b.rain_class;
  });
  std::array<double, 4> covered{};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double from = std::max(sorted[i].t, start);
    const double to = std::min(i + 1 < sorted.size() ? sorted[i + 1].t : end, end);
    if (to > from) {
      covered[static_cast<std::size_t>(sorted[i].rain_class)] += to - from;
    }
  }
  std::optional<RainClass> best;
  double best_cover = 0.0;
  for (std::size_t c = 0; c < covered.size(); ++c) {
    if (covered[c] > 0.0 && covered[c] >= best_cover) {
      best = static_cast<RainClass>(c);
      best_cover = covered[c];
    }
  }
  return best;
}

HourlyAggregate aggregate_hour(std::span<const CrossingEvent> crossings,
                               std::span<const ConflictEvent> conflicts,
                               std::span<const WeatherSample> weather, Timestamp hour_start,
                               const IntersectionGeometry& geometry, double interval_s) {
  const Timestamp hour_end = hour_start + interval_s;
  auto in_hour = [&](Timestamp t) { return t >= hour_start && t < hour_end; };

  HourlyAggregate agg;
  agg.intersection_id = geometry.intersection_id;
  agg.location_label = geometry.location_label;
  agg.utc_offset_minutes = geometry.utc_offset_minutes;
  agg.dry_phrase = geometry.dry_phrase;
  agg.hour_start = hour_start;
  agg.hour_end = hour_end;
  for (const auto& cw : geometry.crosswalks) {
    agg.per_crosswalk[cw.label];
  }

  for (const auto& c : crossings) {
    if (!in_hour(c.t_enter)) {
      throw Error(ErrorCode::InvalidArgument, "crossing by '" + c.ped_id + "' lies outside the hour");
    }
    ++agg.pedestrian_count;
    auto& tally = agg.per_crosswalk[c.crosswalk];
    ++tally.crossings;
    (c.direction == Direction::AtoB ? tally.a_to_b : tally.b_to_a)++;
    (c.daytime ? agg.day_night.day_crossings : agg.day_night.night_crossings)++;
    if (c.violation) {
      ++agg.violation_count;
      ++tally.violations;
      (c.daytime ? agg.day_night.day_violations : agg.day_night.night_violations)++;
    }
  }
  for (const auto& c : conflicts) {
    if (!in_hour(c.t_min_ttc)) {
      throw Error(ErrorCode::InvalidArgument,
                  "conflict " + c.ped_id + "/" + c.veh_id + " lies outside the hour");
    }
    if (c.severity == Severity::Serious) ++agg.serious_count;
    if (c.severity == Severity::Slight) ++agg.slight_count;
  }
  agg.conflict_count = agg.serious_count + agg.slight_count;
  for (const auto& w : weather) {
    if (!in_hour(w.t)) {
      throw Error(ErrorCode::InvalidArgument, "weather sample lies outside the hour");
    }
  }
  agg.weather_class = dominant_rain_class(weather, hour_start, hour_end);
  return agg;
}

namespace {

constexpr std::array<const char*, 12> kMonths = {"January", "February", "March",     "April",
                                                 "May",     "June",     "July",      "August",
                                                 "September", "October", "November", "December"};

std::string clock_12h(const CivilTime& c) {
  int h = c.hour % 12;
  if (h == 0) h = 12;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d %s", h, c.minute, c.hour < 12 ? "am" : "pm");
  return buf;
}

std::string counted(std::int64_t n, const char* singular, const char* plural) {
  if (n == 0) return std::string("no ") + plural;
  if (n == 1) return std::string("1 ") + singular;
  return std::to_string(n) + " " + plural;
}

}  // namespace

std::string weather_phrase(RainClass c, DryPhrase dry) {
  switch (c) {
    case RainClass::None: return dry == DryPhrase::ClearWeather ? "clear weather" : "during no raining";
    case RainClass::Light: return "during light raining";
    case RainClass::Moderate: return "during moderate raining";
    case RainClass::Heavy: return "during heavy raining";
  }
  return "clear weather";
}

ReportTemplateContext make_template_context(const HourlyAggregate& agg) {
  // Nudge by half a millisecond so float noise never drops a clock minute.
  const CivilTime start = to_civil(agg.hour_start + 5e-4, agg.utc_offset_minutes);
  const CivilTime end = to_civil(agg.hour_end + 5e-4, agg.utc_offset_minutes);
  ReportTemplateContext ctx;
  ctx.date = std::string(kMonths[static_cast<std::size_t>(start.month - 1)]) + " " +
             std::to_string(start.day) + ", " + std::to_string(start.year);
  ctx.start_clock = clock_12h(start);
  ctx.end_clock = clock_12h(end);
  ctx.location = agg.location_label;
  if (agg.weather_class) {
    ctx.weather = weather_phrase(*agg.weather_class, agg.dry_phrase);
  }
  ctx.pedestrians = agg.pedestrian_count;
  ctx.violations = agg.violation_count;
  ctx.conflicts = agg.conflict_count;
  return ctx;
}

std::string render_report(const HourlyAggregate& agg) {
  const auto ctx = make_template_context(agg);
  std::string out = "On " + ctx.date + ", between " + ctx.start_clock + " and " + ctx.end_clock +
                    ", at " + ctx.location + ", ";
  if (ctx.weather) {
    out += *ctx.weather + ", ";
  }
  out += std::to_string(ctx.pedestrians) + " pedestrians crossed with " +
         counted(ctx.violations, "crossing violation", "crossing violations") + " and " +
         counted(ctx.conflicts, "conflict", "conflicts") + ".";
  return out;
}

HourlyReport make_template_report(const HourlyAggregate& agg) {
  return {agg, render_report(agg), ReportSource::Template};
}

std::optional<ReportCounts> extract_counts(std::string_view text) {
  static const std::regex peds(R"((\d+)\s+pedestrians?\b)", std::regex::icase);
  static const std::regex viol(R"(\b(no|\d+)\s+(?:crossing\s+)?violations?\b)", std::regex::icase);
  static const std::regex conf(R"(\b(no|\d+)\s+conflicts?\b)", std::regex::icase);

  auto single = [&](const std::regex& re) -> std::optional<std::int64_t> {
    std::optional<std::int64_t> value;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
      const std::string token = (*it)[1].str();
      const std::int64_t v = (token == "no" || token == "No" || token == "NO") ? 0 : std::stoll(token);
      if (value && *value != v) return std::nullopt;
      value = v;
    }
    return value;
  };
  const auto p = single(peds);
  const auto v = single(viol);
  const auto c = single(conf);
  if (!p || !v || !c) return std::nullopt;
  return ReportCounts{*p, *v, *c};
}

HourlyReport polish_report(const HourlyReport& templated, ModelClient* client) {
  HourlyReport out = templated;
  out.source = ReportSource::Template;
  if (client == nullptr) {
    return out;
  }
  const std::vector<ChatMessage> messages = {
      {"system",
       "Rewrite the pedestrian activity report as one fluent sentence. Keep the date, time, "
       "location, weather and every count exactly as given."},
      {"user", templated.text}};
  std::string polished;
  try {
    polished = client->complete(messages);
  } catch (const std::exception& e) {
    spdlog::warn("report polishing failed, keeping template text: {}", e.what());
    return out;
  }
  const ReportCounts expected{templated.aggregate.pedestrian_count, templated.aggregate.violation_count,
                              templated.aggregate.conflict_count};
  const auto got = extract_counts(polished);
  if (polished.empty() || !got || *got != expected) {
    spdlog::warn("model output changed report counts; keeping template text");
    return out;
  }
  out.text = std::move(polished);
  out.source = ReportSource::ModelPolished;
  return out;
}

double storage_ratio(double video_bitrate_bps, double duration_s, double report_bytes) {
  if (!(video_bitrate_bps > 0.0) || !(duration_s > 0.0) || !(report_bytes > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "storage ratio inputs must be positive");
  }
  return (video_bitrate_bps * duration_s / 8.0) / report_bytes * 100.0;
}

json report_to_json(const HourlyReport& r) {
  const auto& a = r.aggregate;
  json per = json::object();
  for (const auto& [label, t] : a.per_crosswalk) {
    per[label] = {{"crossings", t.crossings},
                  {"violations", t.violations},
                  {"a_to_b", t.a_to_b},
                  {"b_to_a", t.b_to_a}};
  }
  json j;
  j["intersection_id"] = a.intersection_id;
  j["location"] = a.location_label;
  j["hour_start"] = format_rfc3339(a.hour_start, a.utc_offset_minutes);
  j["hour_end"] = format_rfc3339(a.hour_end, a.utc_offset_minutes);
  j["utc_offset"] = format_utc_offset(a.utc_offset_minutes);
  j["weather_class"] = a.weather_class ? json(std::string(to_string(*a.weather_class))) : json(nullptr);
  j["counts"] = {{"pedestrians", a.pedestrian_count},
                 {"violations", a.violation_count},
                 {"conflicts", a.conflict_count},
                 {"serious", a.serious_count},
                 {"slight", a.slight_count}};
  j["per_crosswalk"] = std::move(per);
  j["day"] = {{"day_crossings", a.day_night.day_crossings},
              {"night_crossings", a.day_night.night_crossings},
              {"day_violations", a.day_night.day_violations},
              {"night_violations", a.day_night.night_violations}};
  j["partial"] = a.partial;
  j["dry_weather_phrase"] = a.dry_phrase == DryPhrase::ClearWeather ? "clear weather" : "during no raining";
  j["text"] = r.text;
  j["source"] = std::string(to_string(r.source));
  return j;
}

HourlyAggregate aggregate_from_json(const json& j) {
  HourlyAggregate a;
  try {
    a.intersection_id = j.at("intersection_id").get<std::string>();
    a.location_label = j.value("location", std::string());
    a.utc_offset_minutes = parse_utc_offset(j.value("utc_offset", std::string("Z")));
    a.hour_start = parse_rfc3339(j.at("hour_start").get<std::string>());
    a.hour_end = parse_rfc3339(j.at("hour_end").get<std::string>());
    if (const auto& w = j.at("weather_class"); !w.is_null()) {
      a.weather_class = rain_class_from_string(w.get<std::string>());
      if (!a.weather_class) throw Error(ErrorCode::Parse, "unknown weather_class");
    }
    const auto& c = j.at("counts");
    a.pedestrian_count = c.at("pedestrians").get<std::int64_t>();
    a.violation_count = c.at("violations").get<std::int64_t>();
    a.conflict_count = c.at("conflicts").get<std::int64_t>();
    a.serious_count = c.value("serious", std::int64_t{0});
    a.slight_count = c.value("slight", std::int64_t{0});
    for (const auto& [label, t] : j.at("per_crosswalk").items()) {
      a.per_crosswalk[label] = {t.at("crossings").get<std::int64_t>(), t.at("violations").get<std::int64_t>(),
                                t.value("a_to_b", std::int64_t{0}), t.value("b_to_a", std::int64_t{0})};
    }
    const auto& d = j.at("day");
    a.day_night = {d.at("day_crossings").get<std::int64_t>(), d.at("night_crossings").get<std::int64_t>(),
                   d.at("day_violations").get<std::int64_t>(), d.at("night_violations").get<std::int64_t>()};
    a.partial = j.value("partial", false);
    a.dry_phrase = j.value("dry_weather_phrase", std::string("clear weather")) == "during no raining"
                       ? DryPhrase::NoRaining
                       : DryPhrase::ClearWeather;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("report record schema mismatch: ") + e.what());
  }
  return a;
}

HourlyReport report_from_json(const json& j) {
  HourlyReport r;
  r.aggregate = aggregate_from_json(j);
  try {
    r.text = j.at("text").get<std::string>();
    const auto source = j.at("source").get<std::string>();
    if (source == "template") {
      r.source = ReportSource::Template;
    } else if (source == "model") {
      r.source = ReportSource::ModelPolished;
    } else {
      throw Error(ErrorCode::Parse, "unknown report source '" + source + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("report record schema mismatch: ") + e.what());
  }
  if (r.text.empty()) {
    throw Error(ErrorCode::Parse, "report record has empty text");
  }
  return r;
}

std::string encode_report_record(const HourlyReport& report) { return report_to_json(report).dump(); }

}  // namespace pedwatch
