#include "bailaudit/backend.hpp"

#include <cmath>
#include <random>
#include <thread>

#include "bailaudit/errors.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/text.hpp"
#include "httplib.h"
#include "http_util.hpp"

namespace bailaudit {

using nlohmann::json;

MockBackend::MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {
  if (rules_.empty() || !rules_.back().catch_all())
    throw ConfigError("mock backend rules must end with a catch-all rule");
  for (const auto& r : rules_) {
    std::vector<std::string> c;
    std::vector<std::string> a;
    for (const auto& s : r.contains) c.push_back(text::to_lower(s));
    for (const auto& s : r.absent) a.push_back(text::to_lower(s));
    lowered_contains_.push_back(std::move(c));
    lowered_absent_.push_back(std::move(a));
  }
}

namespace {

std::vector<std::string> string_list(const json& rule, const char* key) {
  std::vector<std::string> out;
  const auto it = rule.find(key);
  if (it == rule.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
  } else if (it->is_array()) {
    for (const auto& v : *it) {
      if (!v.is_string()) throw ConfigError(std::string("mock rule '") + key + "' must hold strings");
      out.push_back(v.get<std::string>());
    }
  } else {
    throw ConfigError(std::string("mock rule '") + key + "' must be a string or a list");
  }
  return out;
}

}  // namespace

MockBackend MockBackend::from_json(const json& j) {
  const auto it = j.find("rules");
  if (it == j.end() || !it->is_array()) throw ConfigError("mock rules file needs a 'rules' array");
  std::vector<MockRule> rules;
  for (const auto& r : *it) {
    if (!r.is_object() || !r.contains("response") || !r["response"].is_string())
      throw ConfigError("every mock rule needs a string 'response'");
    rules.push_back(MockRule{string_list(r, "contains"), string_list(r, "absent"),
                             r["response"].get<std::string>()});
  }
  return MockBackend(std::move(rules));
}

MockBackend MockBackend::load(const std::string& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const IngestionError&) {
    throw ConfigError("cannot read mock rules file " + path);
  }
  try {
    return from_json(json::parse(content));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Completion MockBackend::complete(const PromptBundle& bundle) const {
  const std::string user = text::to_lower(bundle.user_text);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    bool hit = true;
    for (const auto& c : lowered_contains_[i]) hit = hit && user.find(c) != std::string::npos;
    for (const auto& a : lowered_absent_[i]) hit = hit && user.find(a) == std::string::npos;
    if (hit) return Completion{rules_[i].response, 1};
  }
  return Completion{rules_.back().response, 1};  // unreachable: last rule is a catch-all
}

json MockBackend::describe() const {
  json rules = json::array();
  for (const auto& r : rules_)
    rules.push_back({{"contains", r.contains}, {"absent", r.absent}, {"response", r.response}});
  return {{"kind", "mock"}, {"rules", rules}, {"rules_sha256", sha256_hex(rules.dump())}};
}

std::string image_data_url(const std::string& image_ref) {
  std::string path = image_ref;
  if (path.starts_with("file://")) path = path.substr(7);
  if (path.empty()) throw IngestionError(image_ref, "empty image reference");
  std::string bytes;
  try {
    bytes = text::read_file(path);
  } catch (const IngestionError&) {
    throw IngestionError(image_ref, "image is unreadable");
  }
  std::string mime = "image/jpeg";
  const std::string lower = text::to_lower(path);
  if (lower.ends_with(".png")) mime = "image/png";
  else if (lower.ends_with(".gif")) mime = "image/gif";
  else if (lower.ends_with(".webp")) mime = "image/webp";
  return "data:" + mime + ";base64," + base64_encode(bytes);
}

HttpChatBackend::HttpChatBackend(HttpChatConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) throw ConfigError("http_chat backend needs an endpoint URL");
  detail::split_url(config_.endpoint_url);
  if (config_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (config_.api_key.empty())
    if (const char* key = std::getenv("MODEL_API_KEY")) config_.api_key = key;
}

json HttpChatBackend::request_body(const PromptBundle& bundle) const {
  json user_content;
  if (bundle.image_ref.empty()) {
    user_content = bundle.user_text;
  } else {
    user_content = json::array({
        {{"type", "image_url"}, {"image_url", {{"url", image_data_url(bundle.image_ref)}}}},
        {{"type", "text"}, {"text", bundle.user_text}},
    });
  }
  return {{"model", config_.model_name},
          {"temperature", config_.temperature},
          {"messages", json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                    {{"role", "user"}, {"content", user_content}}})}};
}

namespace {

std::string extract_content(const std::string& body) {
  const json j = json::parse(body);
  const json& content = j.at("choices").at(0).at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  for (const auto& part : content)
    if (part.value("type", "") == "text") out += part.value("text", "");
  return out;
}

double jitter_factor() {
  thread_local std::mt19937 gen{std::random_device{}()};
  return 1.0 + std::uniform_real_distribution<double>(0.0, 0.25)(gen);
}

}  // namespace

Completion HttpChatBackend::complete(const PromptBundle& bundle) const {
  const std::string payload = request_body(bundle).dump();
  const auto url = detail::split_url(config_.endpoint_url);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_seconds));

  std::string last_error;
  const int max_attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(url.path, headers, payload, "application/json");
    bool retryable = false;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 200) {
      try {
        return Completion{extract_content(res->body), attempt};
      } catch (const json::exception& e) {
        throw BackendError(std::string("malformed chat-completions response: ") + e.what());
      }
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = res->status == 429 || res->status >= 500;
    }
    if (!retryable) throw BackendError("model endpoint rejected the request: " + last_error);
    if (attempt < max_attempts) {
      const double delay = config_.backoff_base_seconds *
                           std::pow(config_.backoff_factor, attempt - 1) * jitter_factor();
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  throw BackendError("model endpoint failed after " + std::to_string(max_attempts) +
                     " attempts: " + last_error);
}

json HttpChatBackend::describe() const {
  return {{"kind", "http_chat"},
          {"endpoint_url", config_.endpoint_url},
          {"model", config_.model_name},
          {"timeout_seconds", config_.timeout_seconds},
          {"max_retries", config_.max_retries},
          {"temperature", config_.temperature}};
}

RawResponse query_model(const ModelBackend& backend, const PromptBundle& bundle,
                        const PairRef& pair_ref, Configuration cfg) {
  const auto start = std::chrono::steady_clock::now();
  Completion c;
  try {
    c = backend.complete(bundle);
  } catch (const BackendError& e) {
    throw BackendError(std::string(e.what()) + " [pair " + pair_ref.image_id + "/" +
                       pair_ref.case_id + "]");
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return RawResponse{pair_ref, cfg, std::move(c.text), elapsed, c.attempts};
}

}  // namespace bailaudit
