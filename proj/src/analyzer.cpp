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

#include "pedwatch/analyzer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "pedwatch/error.hpp"
#include "pedwatch/reporter.hpp"

namespace pedwatch {

using nlohmann::json;

double round1(double pct) { return std::round(pct * 10.0) / 10.0; }

namespace {

double pct(std::int64_t part, std::int64_t whole) {
  return whole > 0 ? round1(100.0 * static_cast<double>(part) / static_cast<double>(whole)) : 0.0;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::vector<HourlyReport> chronological(std::span<const HourlyReport> reports) {
  std::vector<HourlyReport> sorted(reports.begin(), reports.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const HourlyReport& a, const HourlyReport& b) {
    if (a.aggregate.hour_start != b.aggregate.hour_start) {
      return a.aggregate.hour_start < b.aggregate.hour_start;
    }
    return a.aggregate.intersection_id < b.aggregate.intersection_id;
  });
  return sorted;
}

std::string_view weather_label(RainClass c) {
  switch (c) {
    case RainClass::None: return "clear";
    case RainClass::Light: return "light rain";
    case RainClass::Moderate: return "moderate rain";
    case RainClass::Heavy: return "heavy rain";
  }
  return "clear";
}

}  // namespace

HistoricalStats compute_stats(std::span<const HourlyReport> reports) {
  if (reports.empty()) {
    throw Error(ErrorCode::InvalidArgument, "statistics need at least one report");
  }
  HistoricalStats s;
  s.report_count = reports.size();
  for (const auto& r : chronological(reports)) {
    const auto& a = r.aggregate;
    s.total_pedestrians += a.pedestrian_count;
    s.total_violations += a.violation_count;
    s.total_conflicts += a.conflict_count;
    s.serious_conflicts += a.serious_count;
    s.slight_conflicts += a.slight_count;
    for (const auto& [label, t] : a.per_crosswalk) {
      auto& cs = s.per_crosswalk[label];
      cs.crossings += t.crossings;
      cs.violations += t.violations;
      cs.a_to_b += t.a_to_b;
      cs.b_to_a += t.b_to_a;
    }
    s.day_violations += a.day_night.day_violations;
    s.night_violations += a.day_night.night_violations;
    if (a.weather_class) {
      auto& ws = s.by_weather[*a.weather_class];
      ++ws.hours;
      ws.crossings += a.pedestrian_count;
      ws.violations += a.violation_count;
    }
    s.series.push_back({a.hour_start, a.utc_offset_minutes, a.pedestrian_count, a.violation_count,
                        a.conflict_count, a.weather_class});
  }
  s.violation_pct = pct(s.total_violations, s.total_pedestrians);
  for (auto& [_, cs] : s.per_crosswalk) {
    cs.violation_pct = pct(cs.violations, cs.crossings);
  }
  const std::int64_t timed = s.day_violations + s.night_violations;
  s.day_pct = pct(s.day_violations, timed);
  s.night_pct = pct(s.night_violations, timed);
  for (auto& [_, ws] : s.by_weather) {
    ws.violation_pct = pct(ws.violations, ws.crossings);
    ws.share_pct = pct(ws.violations, s.total_violations);
  }
  return s;
}

json stats_to_json(const HistoricalStats& s) {
  json j;
  j["report_count"] = s.report_count;
  j["totals"] = {{"pedestrians", s.total_pedestrians}, {"violations", s.total_violations},
                 {"conflicts", s.total_conflicts},     {"serious", s.serious_conflicts},
                 {"slight", s.slight_conflicts},       {"violation_pct", s.violation_pct}};
  j["per_crosswalk"] = json::object();
  for (const auto& [label, cs] : s.per_crosswalk) {
    j["per_crosswalk"][label] = {{"crossings", cs.crossings}, {"violations", cs.violations},
                                 {"violation_pct", cs.violation_pct}, {"a_to_b", cs.a_to_b},
                                 {"b_to_a", cs.b_to_a}};
  }
  j["day_night"] = {{"day_violations", s.day_violations}, {"night_violations", s.night_violations},
                    {"day_pct", s.day_pct}, {"night_pct", s.night_pct}};
  j["by_weather"] = json::object();
  for (const auto& [c, ws] : s.by_weather) {
    j["by_weather"][std::string(to_string(c))] = {
        {"hours", ws.hours},           {"crossings", ws.crossings},
        {"violations", ws.violations}, {"violation_pct", ws.violation_pct},
        {"share_pct", ws.share_pct}};
  }
  j["series"] = json::array();
  for (const auto& p : s.series) {
    j["series"].push_back({{"hour_start", format_rfc3339(p.hour_start, p.utc_offset_minutes)},
                           {"pedestrians", p.pedestrians},
                           {"violations", p.violations},
                           {"conflicts", p.conflicts},
                           {"weather_class", p.weather ? json(std::string(to_string(*p.weather)))
                                                       : json(nullptr)}});
  }
  return j;
}

// ---- prompts --------------------------------------------------------------

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

AnalysisPrompt build_analysis_prompt(std::span<const HourlyReport> reports, std::string_view question,
                                     std::size_t budget_tokens) {
  if (question.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "analysis question is empty");
  }
  const auto sorted = chronological(reports);
  const std::string head = std::string(kAnalystPreamble) + " Reports:\n";
  const std::string tail = "\n" + std::string(question);

  std::vector<std::string> lines;
  lines.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    lines.push_back("report" + std::to_string(i + 1) + ": " + sorted[i].text + "\n");
  }

  // Prefix totals so a summary of reports [0, k) is O(1) to build.
  std::vector<std::int64_t> peds(sorted.size() + 1, 0), viol(sorted.size() + 1, 0),
      conf(sorted.size() + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    peds[i + 1] = peds[i] + sorted[i].aggregate.pedestrian_count;
    viol[i + 1] = viol[i] + sorted[i].aggregate.violation_count;
    conf[i + 1] = conf[i] + sorted[i].aggregate.conflict_count;
  }
  auto summary_line = [&](std::size_t k) {
    const auto& first = sorted.front().aggregate;
    const auto& last = sorted[k - 1].aggregate;
    return "report1-" + std::to_string(k) + " (summary of " + std::to_string(k) +
           " earlier hourly reports, " + format_rfc3339(first.hour_start, first.utc_offset_minutes) +
           " to " + format_rfc3339(last.hour_end, last.utc_offset_minutes) + "): " +
           std::to_string(peds[k]) + " pedestrians crossed with " + std::to_string(viol[k]) +
           " crossing violations and " + std::to_string(conf[k]) + " conflicts.\n";
  };

  // suffix[k] = bytes of lines[k..n)
  std::vector<std::size_t> suffix(lines.size() + 1, 0);
  for (std::size_t i = lines.size(); i-- > 0;) {
    suffix[i] = suffix[i + 1] + lines[i].size();
  }
  const std::size_t budget_chars = budget_tokens * 4;

  AnalysisPrompt out;
  out.no_data = sorted.empty();
  std::size_t k = 0;
  if (head.size() + suffix[0] + tail.size() > budget_chars) {
    k = 1;
    while (k <= lines.size() &&
           head.size() + summary_line(k).size() + suffix[k] + tail.size() > budget_chars) {
      ++k;
    }
    if (k > lines.size()) {
      throw Error(ErrorCode::InvalidArgument, "token budget too small for the analysis prompt");
    }
    out.compressed = true;
    out.compressed_reports = k;
  }

  out.text = head;
  if (k > 0) out.text += summary_line(k);
  for (std::size_t i = k; i < lines.size(); ++i) out.text += lines[i];
  out.text += tail;
  out.estimated_tokens = estimate_tokens(out.text);
  if (out.estimated_tokens > budget_tokens) {
    throw Error(ErrorCode::InvalidArgument, "token budget too small for the analysis prompt");
  }
  return out;
}

// ---- sessions -------------------------------------------------------------

std::string rule_based_summary(std::span<const HourlyReport> reports) {
  if (reports.empty()) {
    return std::string(kRuleBasedMarker) + ": no data available for the selected range.";
  }
  const auto s = compute_stats(reports);
  const auto sorted = chronological(reports);
  const auto& first = sorted.front().aggregate;
  const auto& last = sorted.back().aggregate;

  std::string out = std::string(kRuleBasedMarker) + " of " + std::to_string(s.report_count) +
                    " hourly reports";
  if (!first.location_label.empty()) out += " at " + first.location_label;
  out += " from " + format_rfc3339(first.hour_start, first.utc_offset_minutes) + " to " +
         format_rfc3339(last.hour_end, last.utc_offset_minutes) + ". ";
  out += std::to_string(s.total_pedestrians) + " pedestrians crossed with " +
         std::to_string(s.total_violations) + " crossing violations (" + fmt1(s.violation_pct) +
         "% of crossings) and " + std::to_string(s.total_conflicts) + " conflicts (" +
         std::to_string(s.serious_conflicts) + " serious, " + std::to_string(s.slight_conflicts) +
         " slight).";

  const std::pair<const std::string, CrosswalkStats>* worst = nullptr;
  for (const auto& entry : s.per_crosswalk) {
    out += " Crosswalk " + entry.first + ": " + std::to_string(entry.second.crossings) +
           " crossings, " + std::to_string(entry.second.violations) + " violations (" +
           fmt1(entry.second.violation_pct) + "%).";
    if (entry.second.crossings > 0 && (!worst || entry.second.violation_pct > worst->second.violation_pct)) {
      worst = &entry;
    }
  }
  if (worst && worst->second.violations > 0) {
    out += " Highest violation rate: crosswalk " + worst->first + " (" +
           fmt1(worst->second.violation_pct) + "%).";
  }
  if (s.day_violations + s.night_violations > 0) {
    out += " Violations by time of day: night " + fmt1(s.night_pct) + "%, day " + fmt1(s.day_pct) + "%.";
  }
  if (!s.by_weather.empty()) {
    out += " Violations by weather:";
    bool first_entry = true;
    for (const auto& [c, ws] : s.by_weather) {
      out += std::string(first_entry ? " " : "; ") + std::string(weather_label(c)) + " " +
             fmt1(ws.share_pct) + "% of violations, " + fmt1(ws.violation_pct) + "% of its " +
             std::to_string(ws.crossings) + " crossings";
      first_entry = false;
    }
    out += ".";
  }
  return out;
}

namespace {

Timestamp wall_now() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

void push_message(AnalysisSession& s, SessionMessage m) {
  if (!s.messages.empty()) m.t = std::max(m.t, s.messages.back().t);
  s.messages.push_back(std::move(m));
}

}  // namespace

AnalysisAnswer run_analysis(AnalysisSession& session, const ReportStore& store,
                            std::string_view question, ModelClient* client,
                            std::size_t budget_tokens) {
  const std::string q = question.find_first_not_of(" \t\r\n") == std::string_view::npos
                            ? std::string(kDefaultQuestion)
                            : std::string(question);
  const auto reports = store.query(session.intersection_id, session.from, session.to);
  push_message(session, {"user", q, wall_now(), ""});

  AnalysisAnswer answer;
  if (client != nullptr && !reports.empty()) {
    try {
      const auto prompt = build_analysis_prompt(reports, q, budget_tokens);
      std::vector<ChatMessage> messages;
      for (std::size_t i = 0; i + 1 < session.messages.size(); ++i) {
        messages.push_back({session.messages[i].role, session.messages[i].content});
      }
      messages.push_back({"user", prompt.text});
      answer = {client->complete(messages), "model"};
    } catch (const std::exception& e) {
      spdlog::warn("analysis model unavailable, answering with rule-based summary: {}", e.what());
    }
  }
  if (answer.provenance.empty()) {
    answer = {rule_based_summary(reports), "rule-based"};
  }
  push_message(session, {"assistant", answer.text, wall_now(), answer.provenance});
  return answer;
}

json session_to_json(const AnalysisSession& s) {
  json msgs = json::array();
  for (const auto& m : s.messages) {
    json jm = {{"role", m.role}, {"content", m.content}, {"t", format_rfc3339(m.t, 0)}};
    if (!m.provenance.empty()) jm["provenance"] = m.provenance;
    msgs.push_back(std::move(jm));
  }
  return {{"session_id", s.session_id},
          {"intersection", s.intersection_id},
          {"from", format_rfc3339(s.from, 0)},
          {"to", format_rfc3339(s.to, 0)},
          {"messages", std::move(msgs)}};
}

}  // namespace pedwatch
