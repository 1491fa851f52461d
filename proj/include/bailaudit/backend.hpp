#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bailaudit/prompting.hpp"
#include "bailaudit/types.hpp"
#include "json.hpp"

namespace bailaudit {

struct Completion {
  std::string text;
  int attempts = 1;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Must be safe to call concurrently.
  virtual Completion complete(const PromptBundle& bundle) const = 0;
  // Descriptor recorded in run manifests. Never contains secrets.
  virtual nlohmann::json describe() const = 0;
};

// Scripted stand-in for a model endpoint. The first rule whose predicate holds
// for the user text supplies the response. Predicates are case-insensitive
// substring tests: all of `contains` present, none of `absent` present.
struct MockRule {
  std::vector<std::string> contains;
  std::vector<std::string> absent;
  std::string response;

  bool catch_all() const noexcept { return contains.empty() && absent.empty(); }
};

class MockBackend final : public ModelBackend {
 public:
  // Throws ConfigError unless the last rule is a catch-all.
  explicit MockBackend(std::vector<MockRule> rules);

  // {"rules": [{"contains": [...], "absent": [...], "response": "..."}]}.
  // "contains" may also be a single string.
  static MockBackend from_json(const nlohmann::json& j);
  static MockBackend load(const std::string& path);

  Completion complete(const PromptBundle& bundle) const override;
  nlohmann::json describe() const override;

  const std::vector<MockRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<MockRule> rules_;
  std::vector<std::vector<std::string>> lowered_contains_;
  std::vector<std::vector<std::string>> lowered_absent_;
};

struct HttpChatConfig {
  std::string endpoint_url;  // full chat-completions URL
  std::string model_name;
  double timeout_seconds = 120.0;
  int max_retries = 3;
  double backoff_base_seconds = 1.0;
  double backoff_factor = 2.0;
  double temperature = 0.0;
  // Empty means read MODEL_API_KEY at construction.
  std::string api_key;
};

// OpenAI-style chat-completions client. The image travels as a base64 data
// URL content part ahead of the user text; the system text is the system
// message. Retries transport failures, 429 and 5xx with exponential backoff
// and jitter.
class HttpChatBackend final : public ModelBackend {
 public:
  // Throws ConfigError when the endpoint URL is empty or malformed.
  explicit HttpChatBackend(HttpChatConfig config);

  Completion complete(const PromptBundle& bundle) const override;
  nlohmann::json describe() const override;

  // Request body for a bundle. Throws IngestionError if the image cannot be read.
  nlohmann::json request_body(const PromptBundle& bundle) const;

 private:
  HttpChatConfig config_;
};

// Reads image bytes from a path or file:// URI and returns a data: URL.
std::string image_data_url(const std::string& image_ref);

struct PairRef {
  std::string image_id;
  std::string case_id;
};

struct RawResponse {
  PairRef pair_ref;
  Configuration configuration = Configuration::kAudit;
  std::string text;
  std::chrono::milliseconds latency{0};
  int attempt_count = 1;
};

RawResponse query_model(const ModelBackend& backend, const PromptBundle& bundle,
                        const PairRef& pair_ref, Configuration cfg);

}  // namespace bailaudit
