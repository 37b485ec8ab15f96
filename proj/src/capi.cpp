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

#include "pedwatch/pedwatch.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "pedwatch/analyzer.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/monitor.hpp"
#include "pedwatch/pipeline.hpp"
#include "pedwatch/reporter.hpp"
#include "pedwatch/service.hpp"
#include "pedwatch/simulator.hpp"

using nlohmann::json;
using namespace pedwatch;

struct pw_store {
  std::unique_ptr<ReportStore> store;
};

struct pw_service {
  std::unique_ptr<Service> service;
};

namespace {

thread_local std::string g_last_error;
std::atomic<bool> g_stop{false};

pw_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return PW_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return PW_ERR_PARSE;
    case ErrorCode::Io: return PW_ERR_IO;
    case ErrorCode::DuplicateKey: return PW_ERR_DUPLICATE_KEY;
    case ErrorCode::NotFound: return PW_ERR_NOT_FOUND;
    case ErrorCode::Config: return PW_ERR_CONFIG;
    case ErrorCode::Unavailable: return PW_ERR_UNAVAILABLE;
    case ErrorCode::StreamOrder: return PW_ERR_STREAM_ORDER;
    case ErrorCode::Internal: return PW_ERR_INTERNAL;
  }
  return PW_ERR_INTERNAL;
}

pw_status fail(pw_status s, std::string message) {
  g_last_error = std::move(message);
  return s;
}

template <typename F>
pw_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return PW_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(PW_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PW_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PW_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

std::string_view id_or_all(const char* intersection) {
  return intersection == nullptr ? std::string_view() : std::string_view(intersection);
}

}  // namespace

extern "C" {

const char* pw_version(void) { return PEDWATCH_VERSION; }

const char* pw_last_error(void) { return g_last_error.c_str(); }

const char* pw_status_name(pw_status status) {
  switch (status) {
    case PW_OK: return "ok";
    case PW_ERR_INVALID_ARGUMENT: return to_string(ErrorCode::InvalidArgument);
    case PW_ERR_PARSE: return to_string(ErrorCode::Parse);
    case PW_ERR_IO: return to_string(ErrorCode::Io);
    case PW_ERR_DUPLICATE_KEY: return to_string(ErrorCode::DuplicateKey);
    case PW_ERR_NOT_FOUND: return to_string(ErrorCode::NotFound);
    case PW_ERR_CONFIG: return to_string(ErrorCode::Config);
    case PW_ERR_UNAVAILABLE: return to_string(ErrorCode::Unavailable);
    case PW_ERR_STREAM_ORDER: return to_string(ErrorCode::StreamOrder);
    case PW_ERR_INTERNAL: return to_string(ErrorCode::Internal);
  }
  return "unknown";
}

void pw_string_free(char* s) { std::free(s); }

pw_status pw_set_log_level(const char* level) {
  return guard([&] {
    require(level != nullptr, "level is null");
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string_view(level) != "off") {
      throw Error(ErrorCode::InvalidArgument, std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(parsed);
  });
}

pw_status pw_parse_time(const char* text, double* out) {
  return guard([&] {
    require(text != nullptr && out != nullptr, "null argument");
    char* end = nullptr;
    const double v = std::strtod(text, &end);
    if (end != text && *end == '\0') {
      *out = v;
    } else {
      *out = parse_rfc3339(text);
    }
  });
}

pw_status pw_compute_ttc(const pw_motion* ped, const pw_motion* veh, double radius, int* has_ttc,
                         double* ttc) {
  return guard([&] {
    require(ped && veh && has_ttc && ttc, "null argument");
    require(radius > 0.0, "radius must be positive");
    const AgentState p{"ped", AgentClass::Pedestrian, {ped->x, ped->y}, {ped->vx, ped->vy}, 0.0};
    const AgentState v{"veh", AgentClass::Vehicle, {veh->x, veh->y}, {veh->vx, veh->vy}, 0.0};
    const auto r = compute_ttc(p, v, radius);
    *has_ttc = r ? 1 : 0;
    *ttc = r.value_or(0.0);
  });
}

pw_status pw_classify_severity(double ttc, pw_severity* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    switch (classify_severity(ttc)) {
      case Severity::Serious: *out = PW_SEVERITY_SERIOUS; break;
      case Severity::Slight: *out = PW_SEVERITY_SLIGHT; break;
      case Severity::None: *out = PW_SEVERITY_NONE; break;
    }
  });
}

pw_status pw_storage_ratio(double bitrate_bps, double duration_s, double report_bytes, double* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = storage_ratio(bitrate_bps, duration_s, report_bytes);
  });
}

pw_status pw_render_report(const char* record_json, char** text_out) {
  return guard([&] {
    require(record_json && text_out, "null argument");
    *text_out = dup_string(render_report(aggregate_from_json(json::parse(record_json))));
  });
}

pw_status pw_store_open(const char* dir, pw_store** out) {
  return guard([&] {
    require(dir && out, "null argument");
    auto s = std::make_unique<pw_store>();
    s->store = std::make_unique<ReportStore>(dir);
    *out = s.release();
  });
}

void pw_store_close(pw_store* store) { delete store; }

pw_status pw_store_append_json(pw_store* store, const char* record_json) {
  return guard([&] {
    require(store && record_json, "null argument");
    store->store->append(report_from_json(json::parse(record_json)));
  });
}

pw_status pw_store_query_json(pw_store* store, const char* intersection, double from, double to,
                              char** json_out) {
  return guard([&] {
    require(store && json_out, "null argument");
    store->store->refresh();
    json list = json::array();
    for (const auto& r : store->store->query(id_or_all(intersection), from, to)) {
      list.push_back(report_to_json(r));
    }
    *json_out = dup_string(list.dump());
  });
}

pw_status pw_store_query_text(pw_store* store, const char* intersection, double from, double to,
                              char** text_out) {
  return guard([&] {
    require(store && text_out, "null argument");
    store->store->refresh();
    std::string text;
    for (const auto& r : store->store->query(id_or_all(intersection), from, to)) {
      text += r.text;
      text += '\n';
    }
    *text_out = dup_string(text);
  });
}

pw_status pw_store_stats_json(pw_store* store, const char* intersection, double from, double to,
                              char** json_out) {
  return guard([&] {
    require(store && json_out, "null argument");
    store->store->refresh();
    const auto reports = store->store->query(id_or_all(intersection), from, to);
    if (reports.empty()) throw Error(ErrorCode::NotFound, "no reports in range");
    *json_out = dup_string(stats_to_json(compute_stats(reports)).dump());
  });
}

pw_status pw_analyze(pw_store* store, const char* intersection, double from, double to,
                     const char* question, int use_model, char** json_out) {
  return guard([&] {
    require(store && json_out, "null argument");
    store->store->refresh();
    AnalysisSession session;
    session.session_id = "cli";
    session.intersection_id = std::string(id_or_all(intersection));
    session.from = from;
    session.to = to;
    std::unique_ptr<ModelClient> client;
    if (use_model) {
      if (auto cfg = model_config_from_env()) client = std::make_unique<HttpModelClient>(*cfg);
    }
    const auto answer =
        run_analysis(session, *store->store, question ? question : "", client.get());
    *json_out = dup_string(json{{"answer", answer.text}, {"provenance", answer.provenance}}.dump());
  });
}

void pw_run_options_init(pw_run_options* options) {
  if (options == nullptr) return;
  *options = pw_run_options{};
  options->mode = PW_MODE_BATCH;
  options->replay_factor = 1.0;
}

pw_status pw_run_pipeline(const char* config_path, const pw_run_options* options, char** metrics_json) {
  return guard([&] {
    require(config_path && metrics_json, "null argument");
    pw_run_options o;
    pw_run_options_init(&o);
    if (options) o = *options;
    RunOptions ro;
    switch (o.mode) {
      case PW_MODE_BATCH: ro.mode = RunMode::Batch; break;
      case PW_MODE_REPLAY: ro.mode = RunMode::Replay; break;
      case PW_MODE_LIVE: ro.mode = RunMode::Live; break;
      default: throw Error(ErrorCode::InvalidArgument, "unknown run mode");
    }
    require(o.mode != PW_MODE_REPLAY || o.replay_factor > 0.0, "replay factor must be positive");
    ro.replay_factor = o.replay_factor;
    if (o.has_seed) ro.seed = o.seed;
    ro.live_idle_timeout_s = o.live_idle_timeout_s;
    ro.stop = &g_stop;
    if (o.on_report) {
      ro.on_report = [cb = o.on_report, user = o.user](const HourlyReport& r) {
        cb(encode_report_record(r).c_str(), user);
      };
    }
    g_stop = false;
    const auto config = load_pipeline_config(config_path);
    const auto metrics = run_pipeline(config, ro);
    *metrics_json = dup_string(metrics_to_json(metrics).dump());
  });
}

void pw_request_stop(void) { g_stop = true; }

pw_status pw_simulate(const char* scenario_path, const char* out_dir, int has_seed, uint64_t seed,
                      char** summary_json) {
  return guard([&] {
    require(scenario_path && out_dir && summary_json, "null argument");
    ScenarioConfig config = load_scenario(scenario_path);
    if (has_seed) config.seed = seed;
    const Scenario sc = generate_scenario(config);
    write_scenario(sc, out_dir);
    std::int64_t detections = 0;
    for (const auto& f : sc.frames) detections += static_cast<std::int64_t>(f.detections.size());
    std::int64_t violations = 0;
    for (const auto& c : sc.truth.crossings) violations += c.violation ? 1 : 0;
    *summary_json = dup_string(json{{"frames", sc.frames.size()},
                                    {"detections", detections},
                                    {"crossings", sc.truth.crossings.size()},
                                    {"violations", violations},
                                    {"conflicts", sc.truth.conflicts.size()},
                                    {"hours", sc.truth.hours.size()},
                                    {"seed", config.seed},
                                    {"out", out_dir}}
                                   .dump());
  });
}

pw_status pw_service_create(const char* config_path, pw_service** out) {
  return guard([&] {
    require(config_path && out, "null argument");
    auto s = std::make_unique<pw_service>();
    s->service = std::make_unique<Service>(load_service_config(config_path));
    *out = s.release();
  });
}

pw_status pw_service_bind(pw_service* service, const char* address, int* port_out) {
  return guard([&] {
    require(service && address, "null argument");
    const auto [host, port] = parse_bind_address(address);
    const int bound = service->service->bind(host, port);
    if (port_out) *port_out = bound;
  });
}

pw_status pw_service_listen(pw_service* service) {
  return guard([&] {
    require(service != nullptr, "null argument");
    g_stop = false;
    std::atomic<bool> done{false};
    std::thread watcher([&] {
      while (!done) {
        if (g_stop) {
          service->service->stop();
          break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
    });
    try {
      service->service->listen();
    } catch (...) {
      done = true;
      watcher.join();
      throw;
    }
    done = true;
    watcher.join();
  });
}

void pw_service_stop(pw_service* service) {
  if (service) service->service->stop();
}

void pw_service_destroy(pw_service* service) { delete service; }

}  // extern "C"
