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

#include "pedwatch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <spdlog/spdlog.h>

#include "pedwatch/error.hpp"
#include "pedwatch/reporter.hpp"

namespace pedwatch {

using nlohmann::json;

// ---- config ---------------------------------------------------------------

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open pipeline config '" + path.string() + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::Config, "pipeline config '" + path.string() + "' is not a JSON object");
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::Config, std::string(what) + " file '" + p.string() + "' does not exist");
    }
  };

  PipelineConfig c;
  try {
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      if (s.is_string()) {
        const auto sp = resolve(s.get<std::string>());
        must_exist(sp, "scenario");
        c.scenario = load_scenario(sp);
      } else {
        c.scenario = scenario_from_json(s);
      }
      c.geometry = canonical_geometry(*c.scenario);
      c.stream_epoch = c.scenario->start;
      c.fps = c.scenario->fps;
    } else {
      if (!j.contains("geometry")) throw Error(ErrorCode::Config, "pipeline config lacks 'geometry'");
      const auto gp = resolve(j["geometry"].get<std::string>());
      must_exist(gp, "geometry");
      c.geometry = load_geometry(gp);
      if (!j.contains("tracks")) throw Error(ErrorCode::Config, "pipeline config lacks 'tracks'");
      c.tracks = resolve(j["tracks"].get<std::string>());
      if (j.contains("phases")) {
        c.phases = resolve(j["phases"].get<std::string>());
        must_exist(*c.phases, "phase feed");
      }
      if (j.contains("weather")) {
        const auto& w = j["weather"];
        if (w.is_string()) {
          c.weather.file = resolve(w.get<std::string>());
          must_exist(*c.weather.file, "weather");
        } else {
          c.weather.url = w.at("url").get<std::string>();
          c.weather.key_param = w.value("key_param", c.weather.key_param);
        }
      }
      c.stream_epoch = parse_rfc3339(j.value("stream_epoch", std::string("1970-01-01T00:00:00Z")));
      c.fps = j.value("fps", c.fps);
    }
    c.store = resolve(j.value("store", std::string("store")));
    if (j.contains("model")) {
      const auto& m = j["model"];
      ModelClientConfig mc;
      mc.endpoint = m.at("endpoint").get<std::string>();
      mc.model = m.value("model", mc.model);
      mc.timeout_s = m.value("timeout_s", mc.timeout_s);
      if (const char* key = std::getenv("MODEL_API_KEY")) mc.api_key = key;
      c.model = mc;
    } else {
      c.model = model_config_from_env();
    }
    c.report_interval_s = j.value("report_interval_s", c.report_interval_s);
    c.close_lag_s = j.value("close_lag_s", c.close_lag_s);
    c.log_level = j.value("log_level", c.log_level);
    if (j.contains("monitor")) {
      const auto& m = j["monitor"];
      c.monitor.retire_gap_frames = m.value("retire_gap_frames", c.monitor.retire_gap_frames);
      c.monitor.kinematics_window = m.value("kinematics_window", c.monitor.kinematics_window);
      c.monitor.interaction_radius_m = m.value("interaction_radius_m", c.monitor.interaction_radius_m);
      c.monitor.episode_close_frames = m.value("episode_close_frames", c.monitor.episode_close_frames);
      c.monitor.right_turn_deg = m.value("right_turn_deg", c.monitor.right_turn_deg);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "pipeline config '" + path.string() + "': " + e.what());
  }
  if (!(c.report_interval_s > 0.0)) throw Error(ErrorCode::Config, "report_interval_s must be positive");
  if (!(c.close_lag_s >= 0.0)) throw Error(ErrorCode::Config, "close_lag_s must be non-negative");
  if (!(c.fps > 0.0)) throw Error(ErrorCode::Config, "fps must be positive");
  if (spdlog::level::from_str(c.log_level) == spdlog::level::off && c.log_level != "off") {
    throw Error(ErrorCode::Config, "unknown log_level '" + c.log_level + "'");
  }
  return c;
}

json metrics_to_json(const PipelineMetrics& m) {
  return {{"frames", m.frames},
          {"record_errors", m.record_errors},
          {"crossings", m.crossings},
          {"conflicts", m.conflicts},
          {"late_events", m.late_events},
          {"reports", m.reports},
          {"duplicate_reports", m.duplicate_reports},
          {"source_retries", m.source_retries},
          {"latency_ms", {{"mean", m.mean_latency_ms}, {"max", m.max_latency_ms}, {"p99", m.p99_latency_ms}}},
          {"wall_s", m.wall_s}};
}

// ---- pipeline -------------------------------------------------------------

struct Pipeline::Impl {
  struct Bucket {
    std::vector<CrossingEvent> crossings;
    std::vector<ConflictEvent> conflicts;
    std::vector<WeatherSample> weather;
  };

  Impl(const PipelineConfig& config, std::vector<PhaseWindow> phases,
       std::shared_ptr<WeatherSource> source, std::shared_ptr<ModelClient> model, ReportStore& store)
      : config(config),
        monitor(config.geometry, PhaseSchedule(std::move(phases)), config.monitor),
        weather(source ? std::make_unique<WeatherClient>(std::move(source)) : nullptr),
        model(std::move(model)),
        store(store) {}

  Timestamp interval_of(Timestamp t) const {
    return floor_to_interval(t, config.report_interval_s, config.geometry.utc_offset_minutes);
  }

  void route(MonitorOutput&& out) {
    for (auto& c : out.crossings) {
      ++metrics.crossings;
      const Timestamp key = interval_of(c.t_enter);
      if (next_open && key < *next_open) {
        ++metrics.late_events;
        spdlog::warn("crossing by '{}' arrived after its interval was reported", c.ped_id);
        continue;
      }
      buckets[key].crossings.push_back(std::move(c));
    }
    for (auto& c : out.conflicts) {
      if (c.severity != Severity::None) ++metrics.conflicts;
      const Timestamp key = interval_of(c.t_min_ttc);
      if (next_open && key < *next_open) {
        ++metrics.late_events;
        spdlog::warn("conflict {}/{} arrived after its interval was reported", c.ped_id, c.veh_id);
        continue;
      }
      buckets[key].conflicts.push_back(std::move(c));
    }
  }

  void poll_weather(Timestamp t) {
    if (!weather) return;
    const auto minute = static_cast<std::int64_t>(std::floor(t / 60.0));
    if (last_poll_minute && *last_poll_minute == minute) return;
    last_poll_minute = minute;
    try {
      WeatherSample s = weather->fetch(t);
      // Stamped at the poll so each sample lands in the interval it describes.
      s.t = static_cast<double>(minute) * 60.0;
      buckets[interval_of(s.t)].weather.push_back(s);
    } catch (const Error& e) {
      spdlog::debug("weather unavailable at {}: {}", format_rfc3339(t, 0), e.what());
    }
  }

  std::optional<HourlyReport> emit(Timestamp start) {
    Bucket bucket;
    if (auto it = buckets.find(start); it != buckets.end()) {
      bucket = std::move(it->second);
      buckets.erase(it);
    }
    HourlyAggregate agg = aggregate_hour(bucket.crossings, bucket.conflicts, bucket.weather, start,
                                         config.geometry, config.report_interval_s);
    agg.partial = *first_t > start + 1.0 || *last_t < agg.hour_end - 1.0;
    HourlyReport report = make_template_report(agg);
    if (model) report = polish_report(report, model.get());
    try {
      store.append(report);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DuplicateKey) throw;
      ++metrics.duplicate_reports;
      spdlog::warn("{}", e.what());
      return std::nullopt;
    }
    ++metrics.reports;
    spdlog::debug("report {}: {}", format_rfc3339(start, config.geometry.utc_offset_minutes), report.text);
    return report;
  }

  void record_latency(std::chrono::steady_clock::time_point began) {
    const std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - began;
    latencies.push_back(d.count());
  }

  PipelineConfig config;
  Monitor monitor;
  std::unique_ptr<WeatherClient> weather;
  std::shared_ptr<ModelClient> model;
  ReportStore& store;

  std::map<Timestamp, Bucket> buckets;
  std::optional<Timestamp> next_open;  // earliest interval not yet reported
  std::optional<Timestamp> first_t;
  std::optional<Timestamp> last_t;
  std::optional<std::int64_t> last_poll_minute;
  std::vector<double> latencies;
  PipelineMetrics metrics;
};

Pipeline::Pipeline(const PipelineConfig& config, std::vector<PhaseWindow> phases,
                   std::shared_ptr<WeatherSource> weather, std::shared_ptr<ModelClient> model,
                   ReportStore& store)
    : impl_(std::make_unique<Impl>(config, std::move(phases), std::move(weather), std::move(model), store)) {}

Pipeline::~Pipeline() = default;

std::vector<HourlyReport> Pipeline::process(const FrameDetections& frame) {
  const auto began = std::chrono::steady_clock::now();
  auto& s = *impl_;
  if (s.last_t && frame.t <= *s.last_t) {
    throw Error(ErrorCode::StreamOrder, "frame " + std::to_string(frame.frame) + " does not advance time");
  }
  if (!s.first_t) {
    s.first_t = frame.t;
    s.next_open = s.interval_of(frame.t);
  }
  s.last_t = frame.t;
  ++s.metrics.frames;

  s.poll_weather(frame.t);
  try {
    s.route(s.monitor.process(frame));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    ++s.metrics.record_errors;
    spdlog::warn("{}", e.what());
  }

  std::vector<HourlyReport> out;
  while (*s.next_open + s.config.report_interval_s + s.config.close_lag_s <= frame.t) {
    if (auto r = s.emit(*s.next_open)) out.push_back(std::move(*r));
    *s.next_open += s.config.report_interval_s;
  }
  s.record_latency(began);
  return out;
}

std::vector<HourlyReport> Pipeline::finish() {
  auto& s = *impl_;
  std::vector<HourlyReport> out;
  s.route(s.monitor.finish());
  if (!s.first_t) return out;
  const Timestamp last_interval = s.interval_of(*s.last_t);
  while (*s.next_open <= last_interval) {
    if (auto r = s.emit(*s.next_open)) out.push_back(std::move(*r));
    *s.next_open += s.config.report_interval_s;
  }
  return out;
}

PipelineMetrics Pipeline::metrics() const {
  PipelineMetrics m = impl_->metrics;
  const auto& lat = impl_->latencies;
  if (!lat.empty()) {
    double sum = 0.0;
    for (double v : lat) sum += v;
    m.mean_latency_ms = sum / static_cast<double>(lat.size());
    m.max_latency_ms = *std::max_element(lat.begin(), lat.end());
    std::vector<double> sorted = lat;
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
    m.p99_latency_ms = sorted[rank];
  }
  return m;
}

void Pipeline::count_record_errors(std::int64_t n) { impl_->metrics.record_errors += n; }

void Pipeline::count_source_retry() { ++impl_->metrics.source_retries; }

// ---- runner ---------------------------------------------------------------

namespace {

bool stopped(const RunOptions& o) { return o.stop && o.stop->load(); }

void tail_tracks(const PipelineConfig& config, const RunOptions& options, Pipeline& pipeline,
                 TrackStreamParser& parser) {
  using namespace std::chrono;
  std::ifstream in;
  std::string pending;
  std::size_t errors_seen = 0;
  auto backoff = milliseconds(50);
  double idle_s = 0.0;
  while (!stopped(options)) {
    if (!in.is_open()) {
      in.open(*config.tracks, std::ios::binary);
      if (!in) {
        pipeline.count_source_retry();
        spdlog::warn("track source '{}' unavailable; retrying in {} ms", config.tracks->string(),
                     backoff.count());
        std::this_thread::sleep_for(backoff);
        idle_s += duration<double>(backoff).count();
        backoff = std::min(backoff * 2, milliseconds(1000));
        if (options.live_idle_timeout_s > 0.0 && idle_s >= options.live_idle_timeout_s) return;
        continue;
      }
    }
    char buf[65536];
    in.read(buf, sizeof buf);
    const auto got = in.gcount();
    in.clear();
    if (got == 0) {
      std::this_thread::sleep_for(backoff);
      idle_s += duration<double>(backoff).count();
      backoff = std::min(backoff * 2, milliseconds(1000));
      if (options.live_idle_timeout_s > 0.0 && idle_s >= options.live_idle_timeout_s) return;
      continue;
    }
    backoff = milliseconds(50);
    idle_s = 0.0;
    pending.append(buf, static_cast<std::size_t>(got));
    std::size_t start = 0;
    for (auto nl = pending.find('\n'); nl != std::string::npos; nl = pending.find('\n', start)) {
      if (auto frame = parser.parse_line(std::string_view(pending).substr(start, nl - start))) {
        auto reports = pipeline.process(*frame);
        if (options.on_report) {
          for (const auto& r : reports) options.on_report(r);
        }
      }
      start = nl + 1;
    }
    pending.erase(0, start);
    pipeline.count_record_errors(static_cast<std::int64_t>(parser.errors().size() - errors_seen));
    errors_seen = parser.errors().size();
  }
}

}  // namespace

PipelineMetrics run_pipeline(const PipelineConfig& config_in, const RunOptions& options) {
  const auto began = std::chrono::steady_clock::now();
  PipelineConfig config = config_in;
  spdlog::set_level(spdlog::level::from_str(config.log_level));

  std::vector<FrameDetections> frames;
  std::vector<PhaseWindow> phases;
  std::shared_ptr<WeatherSource> weather;
  std::int64_t input_errors = 0;

  if (config.scenario) {
    ScenarioConfig sc_config = *config.scenario;
    if (options.seed) sc_config.seed = *options.seed;
    Scenario sc = generate_scenario(sc_config);
    frames = std::move(sc.frames);
    phases = std::move(sc.phases);
    weather = std::make_shared<FileWeatherSource>(std::move(sc.weather));
  } else {
    if (config.phases) {
      std::ifstream in(*config.phases);
      if (!in) throw Error(ErrorCode::Config, "cannot open phase feed '" + config.phases->string() + "'");
      PhaseFeed feed = parse_phase_feed(in, config.geometry);
      input_errors += static_cast<std::int64_t>(feed.errors.size());
      phases = std::move(feed.windows);
    }
    if (config.weather.file) {
      weather = std::make_shared<FileWeatherSource>(*config.weather.file);
    } else if (config.weather.url) {
      weather = std::make_shared<HttpWeatherSource>(*config.weather.url, config.weather.key_param);
    }
  }

  std::shared_ptr<ModelClient> model;
  if (config.model) model = std::make_shared<HttpModelClient>(*config.model);

  ReportStore store(config.store);
  Pipeline pipeline(config, std::move(phases), std::move(weather), std::move(model), store);
  pipeline.count_record_errors(input_errors);

  auto sink = [&](const FrameDetections& f) {
    if (stopped(options)) return;
    auto reports = pipeline.process(f);
    if (options.on_report) {
      for (const auto& r : reports) options.on_report(r);
    }
  };

  if (config.scenario) {
    if (options.mode == RunMode::Replay) {
      replay(frames, config.fps, options.replay_factor, sink);
    } else {
      for (const auto& f : frames) sink(f);
    }
  } else {
    TrackStreamParser parser(config.stream_epoch, config.geometry.homography);
    if (options.mode == RunMode::Live) {
      tail_tracks(config, options, pipeline, parser);
    } else {
      std::ifstream in(*config.tracks, std::ios::binary);
      if (!in) throw Error(ErrorCode::Config, "cannot open track stream '" + config.tracks->string() + "'");
      if (options.mode == RunMode::Replay) {
        std::vector<RecordError> errors;
        frames = parse_track_stream(in, config.stream_epoch, config.geometry.homography, &errors);
        pipeline.count_record_errors(static_cast<std::int64_t>(errors.size()));
        replay(frames, config.fps, options.replay_factor, sink);
      } else {
        std::string line;
        while (!stopped(options) && std::getline(in, line)) {
          if (auto f = parser.parse_line(line)) sink(*f);
        }
        pipeline.count_record_errors(static_cast<std::int64_t>(parser.errors().size()));
      }
    }
  }

  auto rest = pipeline.finish();
  if (options.on_report) {
    for (const auto& r : rest) options.on_report(r);
  }
  PipelineMetrics m = pipeline.metrics();
  m.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
  return m;
}

}  // namespace pedwatch
