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

#include "pedwatch/model_client.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "pedwatch/error.hpp"

namespace pedwatch {

using nlohmann::json;

std::optional<ModelClientConfig> model_config_from_env() {
  const char* endpoint = std::getenv("MODEL_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    return std::nullopt;
  }
  ModelClientConfig cfg;
  cfg.endpoint = endpoint;
  if (const char* key = std::getenv("MODEL_API_KEY")) {
    cfg.api_key = key;
  }
  return cfg;
}

HttpModelClient::HttpModelClient(ModelClientConfig config) : config_(std::move(config)) {
  detail::split_url(config_.endpoint);  // validates early
}

std::string HttpModelClient::complete(const std::vector<ChatMessage>& messages) {
  const auto parts = detail::split_url(config_.endpoint);
  json body = {{"model", config_.model}, {"messages", json::array()}};
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }

  httplib::Client cli(parts.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_s));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = cli.Post(parts.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::Unavailable, "model endpoint unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::Unavailable, "model endpoint returned HTTP " + std::to_string(res->status));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    throw Error(ErrorCode::Unavailable, "model response is not a JSON object");
  }
  if (reply.contains("content") && reply["content"].is_string()) {
    return reply["content"].get<std::string>();
  }
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Unavailable, "model response lacks content");
  }
}

}  // namespace pedwatch
