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

#include <optional>
#include <string>
#include <vector>

namespace pedwatch {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

/// Chat-completion backend. Implementations throw Error(Unavailable) on
/// transport failure or timeout.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct ModelClientConfig {
  std::string endpoint;  // full URL of the chat-completion route
  std::string model = "phi-3-mini";
  std::string api_key;
  double timeout_s = 10.0;
};

/// MODEL_ENDPOINT (required) and MODEL_API_KEY; empty when no endpoint is set.
std::optional<ModelClientConfig> model_config_from_env();

/// POSTs {model, messages:[{role, content}]} and reads {content}. An
/// OpenAI-style {choices:[{message:{content}}]} body is also accepted.
class HttpModelClient final : public ModelClient {
 public:
  explicit HttpModelClient(ModelClientConfig config);

  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  ModelClientConfig config_;
};

}  // namespace pedwatch
