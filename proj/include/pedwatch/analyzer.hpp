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
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedwatch/core.hpp"
#include "pedwatch/model_client.hpp"

namespace pedwatch {

// ---- report store ---------------------------------------------------------

/// Append-only line-delimited report files, one per intersection, under a
/// directory. Keys are (intersection_id, hour_start). One writer, many
/// readers; each append is fsynced before it becomes visible.
class ReportStore {
 public:
  explicit ReportStore(std::filesystem::path dir);

  /// Throws Error(DuplicateKey) if the key exists; the store is unchanged.
  void append(const HourlyReport& report);

  /// Reports with hour_start in [from, to), key-ordered. An empty
  /// intersection id selects all intersections. Throws for from > to.
  std::vector<HourlyReport> query(std::string_view intersection_id, Timestamp from, Timestamp to) const;

  std::vector<HourlyReport> all() const;

  std::optional<HourlyReport> get(std::string_view intersection_id, Timestamp hour_start) const;

  std::vector<std::string> intersections() const;
  std::size_t size() const;

  /// Picks up complete records appended by another process.
  void refresh();

  std::filesystem::path file_for(std::string_view intersection_id) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  using Key = std::pair<std::string, std::int64_t>;  // hour_start in ms

  static Key key_of(const HourlyReport& r);
  void load_file_locked(const std::filesystem::path& file);

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<Key, HourlyReport> index_;
  std::map<std::filesystem::path, std::uintmax_t> offsets_;
};

// ---- statistics -----------------------------------------------------------

/// Rounds to one decimal place.
double round1(double pct);

struct CrosswalkStats {
  std::int64_t crossings = 0;
  std::int64_t violations = 0;
  std::int64_t a_to_b = 0;
  std::int64_t b_to_a = 0;
  double violation_pct = 0.0;
};

struct WeatherStats {
  std::int64_t hours = 0;
  std::int64_t crossings = 0;
  std::int64_t violations = 0;
  double violation_pct = 0.0;  // violations / crossings in this class
  double share_pct = 0.0;      // share of all violations
};

struct HourlyPoint {
  Timestamp hour_start = 0.0;
  int utc_offset_minutes = 0;
  std::int64_t pedestrians = 0;
  std::int64_t violations = 0;
  std::int64_t conflicts = 0;
  std::optional<RainClass> weather;
};

struct HistoricalStats {
  std::size_t report_count = 0;
  std::int64_t total_pedestrians = 0;
  std::int64_t total_violations = 0;
  std::int64_t total_conflicts = 0;
  std::int64_t serious_conflicts = 0;
  std::int64_t slight_conflicts = 0;
  double violation_pct = 0.0;
  std::map<std::string, CrosswalkStats> per_crosswalk;
  std::int64_t day_violations = 0;
  std::int64_t night_violations = 0;
  double day_pct = 0.0;
  double night_pct = 0.0;
  std::map<RainClass, WeatherStats> by_weather;
  std::vector<HourlyPoint> series;  // chronological
};

/// Percentages are rounded to one decimal. Throws for an empty list.
HistoricalStats compute_stats(std::span<const HourlyReport> reports);

nlohmann::json stats_to_json(const HistoricalStats& s);

// ---- prompts --------------------------------------------------------------

inline constexpr std::string_view kAnalystPreamble =
    "You are professional traffic safety engineer. Analyze these reports and generate a report "
    "about the pedestrian safety status at that intersection.";

inline constexpr std::string_view kDefaultQuestion =
    "Summarize the pedestrian safety status at this intersection, including anomalies, patterns "
    "and the influence of weather and time of day.";

/// Four characters per token, rounded up.
std::size_t estimate_tokens(std::string_view text);

struct AnalysisPrompt {
  std::string text;
  bool no_data = false;
  bool compressed = false;
  std::size_t compressed_reports = 0;  // oldest reports folded into one summary line
  std::size_t estimated_tokens = 0;
};

/// Preamble, one "report{i}: ..." line per report in chronological order,
/// then the question. Over budget, the oldest reports are folded into one
/// summary line. Throws for an empty question or a budget too small for
/// preamble, summary and question.
AnalysisPrompt build_analysis_prompt(std::span<const HourlyReport> reports, std::string_view question,
                                     std::size_t budget_tokens = 4096);

// ---- sessions -------------------------------------------------------------

struct SessionMessage {
  std::string role;  // "user" | "assistant"
  std::string content;
  Timestamp t = 0.0;
  std::string provenance;  // assistant messages: "model" | "rule-based"
};

struct AnalysisSession {
  std::string session_id;
  std::string intersection_id;  // empty: all
  Timestamp from = 0.0;
  Timestamp to = 0.0;
  std::vector<SessionMessage> messages;
};

struct AnalysisAnswer {
  std::string text;
  std::string provenance;  // "model" | "rule-based"
};

inline constexpr std::string_view kRuleBasedMarker = "Rule-based summary";

/// Deterministic summary from structured fields only.
std::string rule_based_summary(std::span<const HourlyReport> reports);

/// Answers from the model when one is given and reachable, otherwise from
/// rule_based_summary. Both messages are appended to the session.
AnalysisAnswer run_analysis(AnalysisSession& session, const ReportStore& store,
                            std::string_view question, ModelClient* client,
                            std::size_t budget_tokens = 16384);

nlohmann::json session_to_json(const AnalysisSession& s);

}  // namespace pedwatch
