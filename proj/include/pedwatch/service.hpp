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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "pedwatch/model_client.hpp"

namespace pedwatch {

struct ServiceConfig {
  std::filesystem::path store;
  std::optional<ModelClientConfig> model;
  std::size_t prompt_budget_tokens = 16384;
};

/// HTTP front end over a report store. Reads pick up records appended by a
/// concurrently running pipeline; sessions live in memory.
class Service {
 public:
  explicit Service(ServiceConfig config);
  /// Uses `model` for analysis answers instead of building one from config.
  Service(ServiceConfig config, std::shared_ptr<ModelClient> model);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving; port 0 picks a free port. Throws
  /// Error(Unavailable) when the address cannot be bound.
  int bind(const std::string& host, int port);

  /// Serves until stop(). Requires bind().
  void listen();

  void stop();

  int port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Reads "store" and "model" from a pipeline config file; other keys are
/// ignored. Without "model" the MODEL_* environment is used.
ServiceConfig load_service_config(const std::filesystem::path& path);

/// "host:port"; throws Error(Config) for anything else.
std::pair<std::string, int> parse_bind_address(const std::string& text);

}  // namespace pedwatch
