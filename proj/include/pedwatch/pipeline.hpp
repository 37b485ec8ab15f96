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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pedwatch/analyzer.hpp"
#include "pedwatch/core.hpp"
#include "pedwatch/ingest.hpp"
#include "pedwatch/model_client.hpp"
#include "pedwatch/monitor.hpp"
#include "pedwatch/simulator.hpp"

namespace pedwatch {

struct WeatherEndpoint {
  std::optional<std::filesystem::path> file;
  std::optional<std::string> url;
  std::string key_param = "appid";
};

/// Paths are resolved against the config file's directory.
struct PipelineConfig {
  IntersectionGeometry geometry;
  std::optional<std::filesystem::path> tracks;
  std::optional<std::filesystem::path> phases;
  WeatherEndpoint weather;
  std::optional<ScenarioConfig> scenario;  // generate the inputs instead of reading them
  std::filesystem::path store;
  Timestamp stream_epoch = 0.0;
  double fps = 20.0;
  std::optional<ModelClientConfig> model;
  double report_interval_s = 3600.0;
  double close_lag_s = 120.0;  // stream time past an interval end before it is reported
  std::string log_level = "info";
  MonitorConfig monitor;
};

/// Throws Error(Config) naming the offending key or path.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

enum class RunMode { Batch, Replay, Live };

struct RunOptions {
  RunMode mode = RunMode::Batch;
  double replay_factor = 1.0;
  std::optional<std::uint64_t> seed;       // overrides the scenario seed
  double live_idle_timeout_s = 0.0;        // 0: tail until stopped
  const std::atomic<bool>* stop = nullptr;
  std::function<void(const HourlyReport&)> on_report;
};

struct PipelineMetrics {
  std::int64_t frames = 0;
  std::int64_t record_errors = 0;
  std::int64_t crossings = 0;
  std::int64_t conflicts = 0;  // severity Serious or Slight
  std::int64_t late_events = 0;
  std::int64_t reports = 0;
  std::int64_t duplicate_reports = 0;
  std::int64_t source_retries = 0;
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
  double p99_latency_ms = 0.0;
  double wall_s = 0.0;
};

nlohmann::json metrics_to_json(const PipelineMetrics& m);

/// ingest -> monitor -> reporter -> store, one frame at a time. Each interval
/// is reported once stream time passes its end by `close_lag_s`; finish()
/// reports whatever remains.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, std::vector<PhaseWindow> phases,
           std::shared_ptr<WeatherSource> weather, std::shared_ptr<ModelClient> model,
           ReportStore& store);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  std::vector<HourlyReport> process(const FrameDetections& frame);
  std::vector<HourlyReport> finish();

  PipelineMetrics metrics() const;
  void count_record_errors(std::int64_t n);
  void count_source_retry();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs the configured inputs to completion (or until stopped in live mode).
PipelineMetrics run_pipeline(const PipelineConfig& config, const RunOptions& options);

}  // namespace pedwatch
