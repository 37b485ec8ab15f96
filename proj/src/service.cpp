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

#include "pedwatch/service.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "pedwatch/analyzer.hpp"
#include "pedwatch/error.hpp"
#include "pedwatch/reporter.hpp"

namespace pedwatch {

using nlohmann::json;

namespace {

// Query timestamps: RFC 3339 or Unix seconds. A '+' in an offset may arrive
// decoded as a space.
Timestamp parse_query_time(std::string text) {
  for (auto& ch : text) {
    if (ch == ' ') ch = '+';
  }
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  return parse_rfc3339(text);
}

struct Range {
  Timestamp from = std::numeric_limits<double>::lowest();
  Timestamp to = std::numeric_limits<double>::max();
  std::string intersection;
};

Range range_from(const httplib::Request& req) {
  Range r;
  if (req.has_param("from")) r.from = parse_query_time(req.get_param_value("from"));
  if (req.has_param("to")) r.to = parse_query_time(req.get_param_value("to"));
  if (req.has_param("intersection")) r.intersection = req.get_param_value("intersection");
  return r;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json series(std::vector<std::string> labels, std::vector<std::pair<std::string, std::vector<double>>> sets) {
  json out = {{"labels", std::move(labels)}, {"series", json::array()}};
  for (auto& [name, values] : sets) {
    out["series"].push_back({{"name", name}, {"values", std::move(values)}});
  }
  return out;
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Unavailable: return 503;
    case ErrorCode::Internal:
    case ErrorCode::Io: return 500;
    default: return 400;
  }
}

}  // namespace

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config '" + path.string() + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::Config, "config '" + path.string() + "' is not a JSON object");
  }
  ServiceConfig c;
  try {
    const std::filesystem::path store(j.value("store", std::string("store")));
    c.store = store.is_absolute() ? store : path.parent_path() / store;
    if (j.contains("model")) {
      ModelClientConfig mc;
      mc.endpoint = j["model"].at("endpoint").get<std::string>();
      mc.model = j["model"].value("model", mc.model);
      mc.timeout_s = j["model"].value("timeout_s", mc.timeout_s);
      if (const char* key = std::getenv("MODEL_API_KEY")) mc.api_key = key;
      c.model = mc;
    } else {
      c.model = model_config_from_env();
    }
    c.prompt_budget_tokens = j.value("prompt_budget_tokens", c.prompt_budget_tokens);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "config '" + path.string() + "': " + e.what());
  }
  if (!std::filesystem::is_directory(c.store)) {
    throw Error(ErrorCode::Config, "store '" + c.store.string() + "' does not exist");
  }
  return c;
}

std::pair<std::string, int> parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::Config, "bind address must be host:port, got '" + text + "'");
  }
  int port = 0;
  const auto* begin = text.data() + colon + 1;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, port);
  if (ec != std::errc() || ptr != end || port < 0 || port > 65535) {
    throw Error(ErrorCode::Config, "bad port in bind address '" + text + "'");
  }
  return {text.substr(0, colon), port};
}

struct Service::Impl {
  Impl(ServiceConfig c, std::shared_ptr<ModelClient> m)
      : config(std::move(c)), store(config.store), model(std::move(m)) {
    if (!model && config.model) model = std::make_shared<HttpModelClient>(*config.model);
    routes();
  }

  std::vector<HourlyReport> query(const Range& r) {
    if (r.from > r.to) throw Error(ErrorCode::InvalidArgument, "'from' is after 'to'");
    store.refresh();
    return store.query(r.intersection, r.from, r.to);
  }

  std::optional<HistoricalStats> stats(const httplib::Request& req) {
    const auto reports = query(range_from(req));
    if (reports.empty()) return std::nullopt;
    return compute_stats(reports);
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        reply(res, status_for(e.code()), {{"error", e.what()}, {"code", to_string(e.code())}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", e.what()}, {"code", "parse"}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}, {"code", "internal"}});
      }
    };
  }

  void routes() {
    server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      store.refresh();
      reply(res, 200, {{"status", "ok"}, {"reports", store.size()}});
    }));

    server.Get("/reports", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json list = json::array();
      for (const auto& r : query(range_from(req))) list.push_back(report_to_json(r));
      reply(res, 200, {{"reports", std::move(list)}});
    }));

    server.Get(R"(/reports/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Timestamp hour = parse_query_time(req.matches[1].str());
      store.refresh();
      std::vector<std::string> ids;
      if (req.has_param("intersection")) {
        ids.push_back(req.get_param_value("intersection"));
      } else {
        ids = store.intersections();
      }
      for (const auto& id : ids) {
        if (auto r = store.get(id, hour)) {
          reply(res, 200, report_to_json(*r));
          return;
        }
      }
      throw Error(ErrorCode::NotFound, "no report for hour " + req.matches[1].str());
    }));

    server.Get("/stats", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = stats(req);
      reply(res, 200, s ? stats_to_json(*s) : json{{"report_count", 0}});
    }));

    server.Get("/charts/violations-by-crosswalk",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::vector<std::string> labels;
                 std::vector<double> violation, safe;
                 if (const auto s = stats(req)) {
                   for (const auto& [label, cs] : s->per_crosswalk) {
                     labels.push_back(label);
                     violation.push_back(cs.violation_pct);
                     safe.push_back(cs.crossings > 0 ? round1(100.0 - cs.violation_pct) : 0.0);
                   }
                 }
                 reply(res, 200,
                       series(std::move(labels), {{"violation_pct", std::move(violation)},
                                                  {"safe_pct", std::move(safe)}}));
               }));

    server.Get("/charts/day-night", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<double> share = {0.0, 0.0}, counts = {0.0, 0.0};
      if (const auto s = stats(req)) {
        share = {s->day_pct, s->night_pct};
        counts = {static_cast<double>(s->day_violations), static_cast<double>(s->night_violations)};
      }
      reply(res, 200,
            series({"day", "night"}, {{"violation_share_pct", share}, {"violations", counts}}));
    }));

    server.Get("/charts/weather", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::vector<std::string> labels;
      std::vector<double> share, rate;
      if (const auto s = stats(req)) {
        for (const auto& [cls, ws] : s->by_weather) {
          labels.emplace_back(to_string(cls));
          share.push_back(ws.share_pct);
          rate.push_back(ws.violation_pct);
        }
      }
      reply(res, 200,
            series(std::move(labels), {{"violation_share_pct", std::move(share)},
                                       {"violation_pct", std::move(rate)}}));
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      AnalysisSession s;
      s.from = body.contains("from") ? parse_query_time(body["from"].get<std::string>())
                                     : std::numeric_limits<double>::lowest();
      s.to = body.contains("to") ? parse_query_time(body["to"].get<std::string>())
                                 : std::numeric_limits<double>::max();
      if (s.from > s.to) throw Error(ErrorCode::InvalidArgument, "'from' is after 'to'");
      s.intersection_id = body.value("intersection", std::string());
      std::lock_guard lock(sessions_mu);
      s.session_id = "s" + std::to_string(++session_counter);
      const std::string id = s.session_id;
      sessions.emplace(id, std::move(s));
      reply(res, 201, {{"session_id", id}});
    }));

    server.Post(R"(/sessions/([^/]+)/messages)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body);
                  const std::string question = body.at("question").get<std::string>();
                  store.refresh();
                  // Sessions are answered one at a time; the model call dominates anyway.
                  std::lock_guard lock(sessions_mu);
                  auto it = sessions.find(req.matches[1].str());
                  if (it == sessions.end()) {
                    throw Error(ErrorCode::NotFound, "no session '" + req.matches[1].str() + "'");
                  }
                  const auto answer = run_analysis(it->second, store, question, model.get(),
                                                   config.prompt_budget_tokens);
                  reply(res, 200, {{"answer", answer.text}, {"provenance", answer.provenance}});
                }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(sessions_mu);
      auto it = sessions.find(req.matches[1].str());
      if (it == sessions.end()) {
        throw Error(ErrorCode::NotFound, "no session '" + req.matches[1].str() + "'");
      }
      reply(res, 200, session_to_json(it->second));
    }));
  }

  ServiceConfig config;
  ReportStore store;
  std::shared_ptr<ModelClient> model;
  httplib::Server server;
  std::mutex sessions_mu;
  std::map<std::string, AnalysisSession> sessions;
  std::uint64_t session_counter = 0;
  std::atomic<int> port{0};
};

Service::Service(ServiceConfig config) : Service(std::move(config), nullptr) {}

Service::Service(ServiceConfig config, std::shared_ptr<ModelClient> model)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(model))) {}

Service::~Service() {
  stop();
}

int Service::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) {
    throw Error(ErrorCode::Unavailable, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->port = bound;
  spdlog::info("serving {} on {}:{}", impl_->config.store.string(), host, bound);
  return bound;
}

void Service::listen() {
  if (impl_->port == 0) throw Error(ErrorCode::InvalidArgument, "listen() before bind()");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

int Service::port() const noexcept { return impl_->port; }

}  // namespace pedwatch
