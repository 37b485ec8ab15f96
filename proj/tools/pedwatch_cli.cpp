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

// Command-line front end. Talks to the library through the C API only.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pedwatch/pedwatch.h"

namespace {

int report_failure(pw_status s) {
  std::cerr << "pedwatch: " << pw_status_name(s) << ": " << pw_last_error() << '\n';
  return s == PW_ERR_CONFIG ? 2 : 1;
}

// Owns a string handed out by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { pw_string_free(p); }
};

struct StoreHandle {
  pw_store* p = nullptr;
  ~StoreHandle() { pw_store_close(p); }
};

struct Range {
  std::string from;
  std::string to;
  std::string intersection;
};

pw_status resolve_range(const Range& r, double* from, double* to) {
  *from = std::numeric_limits<double>::lowest();
  *to = std::numeric_limits<double>::max();
  if (!r.from.empty()) {
    if (auto s = pw_parse_time(r.from.c_str(), from); s != PW_OK) return s;
  }
  if (!r.to.empty()) {
    if (auto s = pw_parse_time(r.to.c_str(), to); s != PW_OK) return s;
  }
  return PW_OK;
}

void add_range(CLI::App* cmd, Range& r) {
  cmd->add_option("--from", r.from, "Range start (RFC 3339 or Unix seconds), inclusive");
  cmd->add_option("--to", r.to, "Range end (RFC 3339 or Unix seconds), exclusive");
  cmd->add_option("--intersection", r.intersection, "Intersection id; all when omitted");
}

void on_signal(int) { pw_request_stop(); }

void print_report(const char* record_json, void*) {
  const auto j = nlohmann::json::parse(record_json, nullptr, false);
  if (j.is_object() && j.contains("text")) {
    std::cout << j["text"].get<std::string>() << std::endl;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pedwatch: pedestrian safety monitoring and hourly reporting"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  app.set_version_flag("--version", std::string(pw_version()));

  // run
  auto* run = app.add_subcommand("run", "Run the monitoring pipeline");
  std::string run_config;
  std::optional<double> replay_factor;
  bool batch = false;
  bool live = false;
  std::optional<std::uint64_t> seed;
  double idle_timeout = 0.0;
  run->add_option("--config", run_config, "Pipeline config file")->required()->check(CLI::ExistingFile);
  auto* replay_opt = run->add_option("--replay", replay_factor, "Replay at this speed factor")
                         ->check(CLI::PositiveNumber);
  auto* batch_opt = run->add_flag("--batch", batch, "Process as fast as possible (default)");
  auto* live_opt = run->add_flag("--live", live, "Tail the track stream until interrupted");
  replay_opt->excludes(batch_opt)->excludes(live_opt);
  batch_opt->excludes(live_opt);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--idle-timeout", idle_timeout, "Live mode: stop after this many idle seconds");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
  std::string scenario_path, out_dir;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve reports, statistics and analysis over HTTP");
  std::string serve_config, bind_address = "127.0.0.1:8080";
  serve->add_option("--config", serve_config, "Config file with the store path")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--bind", bind_address, "host:port");

  // report
  auto* report = app.add_subcommand("report", "Print stored hourly reports");
  std::string report_store;
  Range report_range;
  bool report_json = false;
  report->add_option("--store", report_store, "Store directory")->required()->check(CLI::ExistingDirectory);
  add_range(report, report_range);
  report->add_flag("--json", report_json, "Print full records");

  // stats
  auto* stats = app.add_subcommand("stats", "Print historical statistics");
  std::string stats_store;
  Range stats_range;
  stats->add_option("--store", stats_store, "Store directory")->required()->check(CLI::ExistingDirectory);
  add_range(stats, stats_range);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Answer a question over stored reports");
  std::string analyze_store, question;
  Range analyze_range;
  bool use_model = false;
  analyze->add_option("--store", analyze_store, "Store directory")->required()->check(CLI::ExistingDirectory);
  add_range(analyze, analyze_range);
  analyze->add_option("--question", question, "Question; a general summary when omitted");
  analyze->add_flag("--model", use_model, "Use the model at MODEL_ENDPOINT when reachable");

  CLI11_PARSE(app, argc, argv);

  if (auto s = pw_set_log_level(log_level.c_str()); s != PW_OK) return report_failure(s);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  if (*run) {
    pw_run_options o;
    pw_run_options_init(&o);
    if (replay_factor) {
      o.mode = PW_MODE_REPLAY;
      o.replay_factor = *replay_factor;
    } else if (live) {
      o.mode = PW_MODE_LIVE;
      o.live_idle_timeout_s = idle_timeout;
    }
    if (seed) {
      o.has_seed = 1;
      o.seed = *seed;
    }
    o.on_report = print_report;
    LibString metrics;
    if (auto s = pw_run_pipeline(run_config.c_str(), &o, &metrics.p); s != PW_OK) return report_failure(s);
    std::cout << metrics.p << std::endl;
    return 0;
  }

  if (*simulate) {
    LibString summary;
    if (auto s = pw_simulate(scenario_path.c_str(), out_dir.c_str(), sim_seed ? 1 : 0, sim_seed.value_or(0),
                             &summary.p);
        s != PW_OK) {
      return report_failure(s);
    }
    std::cout << summary.p << std::endl;
    return 0;
  }

  if (*serve) {
    pw_service* service = nullptr;
    if (auto s = pw_service_create(serve_config.c_str(), &service); s != PW_OK) return report_failure(s);
    int port = 0;
    if (auto s = pw_service_bind(service, bind_address.c_str(), &port); s != PW_OK) {
      pw_service_destroy(service);
      return report_failure(s);
    }
    std::cerr << "listening on port " << port << std::endl;
    const auto s = pw_service_listen(service);
    pw_service_destroy(service);
    return s == PW_OK ? 0 : report_failure(s);
  }

  auto with_store = [](const std::string& dir, const Range& range, auto&& body) -> int {
    StoreHandle store;
    if (auto s = pw_store_open(dir.c_str(), &store.p); s != PW_OK) return report_failure(s);
    double from = 0.0, to = 0.0;
    if (auto s = resolve_range(range, &from, &to); s != PW_OK) return report_failure(s);
    const char* id = range.intersection.empty() ? nullptr : range.intersection.c_str();
    LibString out;
    if (auto s = body(store.p, id, from, to, &out.p); s != PW_OK) return report_failure(s);
    std::cout << out.p;
    if (out.p[0] != '\0' && out.p[std::char_traits<char>::length(out.p) - 1] != '\n') std::cout << '\n';
    return 0;
  };

  if (*report) {
    return with_store(report_store, report_range,
                      [&](pw_store* st, const char* id, double from, double to, char** out) {
                        return report_json ? pw_store_query_json(st, id, from, to, out)
                                           : pw_store_query_text(st, id, from, to, out);
                      });
  }
  if (*stats) {
    return with_store(stats_store, stats_range, pw_store_stats_json);
  }
  if (*analyze) {
    return with_store(analyze_store, analyze_range,
                      [&](pw_store* st, const char* id, double from, double to, char** out) {
                        return pw_analyze(st, id, from, to, question.c_str(), use_model ? 1 : 0, out);
                      });
  }
  return 0;
}
