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

#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "pedwatch/analyzer.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/random.hpp"
#include "pedwatch/reporter.hpp"

using namespace pedwatch;

namespace {

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

HourlyReport report_at(const std::string& id, Timestamp hour, std::int64_t peds) {
  pwtest::DayRow row{8, RainClass::None, DryPhrase::ClearWeather, peds, peds / 3, 0};
  auto a = pwtest::day_aggregate(row);
  a.intersection_id = id;
  a.hour_start = hour;
  a.hour_end = hour + 3600.0;
  return make_template_report(a);
}

void fill(ReportStore& store) {
  for (const auto& r : pwtest::day_reports()) store.append(r);
}

}  // namespace

TEST_SUITE("analyzer") {

TEST_CASE("store append, get and duplicate rejection") {
  const auto dir = pwtest::temp_dir("store-dup");
  ReportStore store(dir);
  const auto r = pwtest::day_reports()[0];
  store.append(r);
  try {
    store.append(r);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateKey);
  }
  CHECK(store.size() == 1);
  const auto got = store.get(r.aggregate.intersection_id, r.aggregate.hour_start);
  REQUIRE(got);
  CHECK(got->text == r.text);
  CHECK_FALSE(store.get("elsewhere", r.aggregate.hour_start));
}

TEST_CASE("a reopened store recovers every record and drops a torn tail") {
  const auto dir = pwtest::temp_dir("store-crash");
  {
    ReportStore store(dir);
    for (int i = 0; i < 100; ++i) store.append(report_at("x", 1.7e9 + 3600.0 * i, i));
  }
  const auto file = ReportStore(dir).file_for("x");
  {
    std::ofstream out(file, std::ios::app | std::ios::binary);
    out << R"({"intersection_id": "x", "hour_start": "2030-)";  // interrupted write
  }
  ReportStore reopened(dir);
  CHECK(reopened.size() == 100);
  const auto all = reopened.all();
  for (int i = 0; i < 100; ++i) CHECK(all[i].aggregate.pedestrian_count == i);
  // The next append replaces the torn bytes.
  reopened.append(report_at("x", 1.7e9 + 3600.0 * 100, 7));
  CHECK(ReportStore(dir).size() == 101);
}

TEST_CASE("queries select a half-open range in key order") {
  const auto dir = pwtest::temp_dir("store-query");
  ReportStore store(dir);
  fill(store);
  CHECK(store.query("", std::numeric_limits<double>::lowest(), std::numeric_limits<double>::max()).size() == 15);
  const auto mid = store.query("cfb-alafaya", pwtest::local_hour(11), pwtest::local_hour(14));
  REQUIRE(mid.size() == 3);
  CHECK(mid[0].aggregate.hour_start == pwtest::local_hour(11));
  CHECK(mid[2].aggregate.hour_start == pwtest::local_hour(13));
  CHECK(store.query("nobody", 0, 1e12).empty());
  CHECK_THROWS_AS(store.query("", 10, 5), Error);
}

TEST_CASE("a reader sees records appended by another handle after refresh") {
  const auto dir = pwtest::temp_dir("store-refresh");
  ReportStore writer(dir);
  ReportStore reader(dir);
  writer.append(report_at("x", 1.7e9, 3));
  CHECK(reader.size() == 0);
  reader.refresh();
  CHECK(reader.size() == 1);
}

TEST_CASE("statistics of the crosswalk and day/night split") {
  const auto reports = pwtest::template_reports(pwtest::split_aggregates());
  const auto s = compute_stats(reports);
  CHECK(s.per_crosswalk.at("A").violation_pct == 18.2);
  CHECK(s.per_crosswalk.at("B").violation_pct == 72.2);
  CHECK(s.night_pct == 76.0);
  CHECK(s.day_pct == 24.0);
  CHECK(s.day_pct + s.night_pct == 100.0);
}

TEST_CASE("statistics agree with a direct recount of the day") {
  const auto s = compute_stats(pwtest::day_reports());
  std::int64_t peds = 0, viol = 0, conf = 0;
  std::map<RainClass, std::pair<std::int64_t, std::int64_t>> by_w;
  for (const auto& row : pwtest::kDay) {
    peds += row.pedestrians;
    viol += row.violations;
    conf += row.conflicts;
    by_w[*row.weather].first += row.pedestrians;
    by_w[*row.weather].second += row.violations;
  }
  CHECK(s.total_pedestrians == peds);
  CHECK(s.total_violations == viol);
  CHECK(s.total_conflicts == conf);
  CHECK(s.violation_pct == std::round(1000.0 * viol / peds) / 10.0);
  for (const auto& [c, pv] : by_w) {
    CHECK(s.by_weather.at(c).crossings == pv.first);
    CHECK(s.by_weather.at(c).violations == pv.second);
  }
  std::int64_t cw = 0;
  for (const auto& [_, c] : s.per_crosswalk) cw += c.crossings;
  CHECK(cw == peds);
  CHECK(s.series.size() == 15);
  CHECK_THROWS_AS(compute_stats(std::vector<HourlyReport>{}), Error);
}

TEST_CASE("statistics are invariant under report order") {
  auto reports = pwtest::day_reports();
  const auto base = stats_to_json(compute_stats(reports)).dump();
  Rng rng(13);
  for (int k = 0; k < 30; ++k) {
    for (std::size_t i = reports.size(); i > 1; --i) std::swap(reports[i - 1], reports[rng.below(i)]);
    CHECK(stats_to_json(compute_stats(reports)).dump() == base);
  }
}

TEST_CASE("prompt lays out one report line per hour") {
  const auto reports = pwtest::day_reports();
  const auto p = build_analysis_prompt(reports, "What happened?", 4096);
  CHECK_FALSE(p.compressed);
  std::string want = std::string(kAnalystPreamble) + " Reports:\n";
  for (std::size_t i = 0; i < 15; ++i) {
    want += "report" + std::to_string(i + 1) + ": " + pwtest::kDayText[i] + "\n";
  }
  want += "\nWhat happened?";
  CHECK(p.text == want);
  CHECK(p.estimated_tokens == (want.size() + 3) / 4);
}

TEST_CASE("prompt over budget folds the oldest reports") {
  std::vector<HourlyReport> many;
  for (int i = 0; i < 10000; ++i) many.push_back(report_at("x", 1.7e9 + 3600.0 * i, i % 30));
  const auto p = build_analysis_prompt(many, "Trends?", 4096);
  CHECK(p.compressed);
  CHECK(p.estimated_tokens <= 4096);
  CHECK(p.text.find("report1-" + std::to_string(p.compressed_reports) + " (summary of") != std::string::npos);
  CHECK(p.text.find("report10000: " + many.back().text) != std::string::npos);
  std::int64_t folded = 0;
  for (std::size_t i = 0; i < p.compressed_reports; ++i) folded += many[i].aggregate.pedestrian_count;
  CHECK(p.text.find(std::to_string(folded) + " pedestrians crossed") != std::string::npos);
}

TEST_CASE("prompt edge cases") {
  const auto empty = build_analysis_prompt({}, "Anything?", 4096);
  CHECK(empty.no_data);
  CHECK_THROWS_AS(build_analysis_prompt(pwtest::day_reports(), "  ", 4096), Error);
  CHECK_THROWS_AS(build_analysis_prompt(pwtest::day_reports(), "q", 10), Error);
}

TEST_CASE("analysis without a model is a rule-based summary with exact percentages") {
  const auto dir = pwtest::temp_dir("analysis-rule");
  ReportStore store(dir);
  fill(store);
  AnalysisSession s{"s1", "", std::numeric_limits<double>::lowest(), std::numeric_limits<double>::max(), {}};
  const auto a = run_analysis(s, store, "", nullptr);
  CHECK(a.provenance == "rule-based");
  CHECK(a.text.rfind(std::string(kRuleBasedMarker), 0) == 0);
  // 23 violations over 116 crossings.
  CHECK(a.text.find("116 pedestrians crossed with 23 crossing violations (" + fmt1(100.0 * 23 / 116) +
                    "% of crossings)") != std::string::npos);
  REQUIRE(s.messages.size() == 2);
  CHECK(s.messages[0].content == kDefaultQuestion);
  CHECK(s.messages[1].provenance == "rule-based");
}

TEST_CASE("analysis uses the model when reachable and falls back when not") {
  const auto dir = pwtest::temp_dir("analysis-model");
  ReportStore store(dir);
  fill(store);
  AnalysisSession s{"s1", "", std::numeric_limits<double>::lowest(), std::numeric_limits<double>::max(), {}};
  pwtest::FakeModel model([](const std::vector<ChatMessage>&) { return std::string("Rain drove violations."); });
  const auto a = run_analysis(s, store, "Why?", &model);
  CHECK(a.provenance == "model");
  CHECK(a.text == "Rain drove violations.");
  CHECK(model.last.back().content.find("report15: ") != std::string::npos);

  auto down = pwtest::down_model();
  const auto b = run_analysis(s, store, "Again?", down.get());
  CHECK(b.provenance == "rule-based");
  CHECK(s.messages.size() == 4);
  for (std::size_t i = 1; i < s.messages.size(); ++i) CHECK(s.messages[i].t >= s.messages[i - 1].t);
}

TEST_CASE("analysis over an empty range says so") {
  const auto dir = pwtest::temp_dir("analysis-empty");
  ReportStore store(dir);
  fill(store);
  AnalysisSession s{"s1", "", 0.0, 1.0, {}};
  const auto a = run_analysis(s, store, "Anything?", nullptr);
  CHECK(a.text.find("no data") != std::string::npos);
}

}  // TEST_SUITE
