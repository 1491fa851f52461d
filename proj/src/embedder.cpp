#include "bailaudit/embedder.hpp"

#include <cmath>

#include "bailaudit/errors.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/text.hpp"
#include "httplib.h"
#include "http_util.hpp"

namespace bailaudit {

using nlohmann::json;

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashingEmbedder::name() const { return "hash-v1/" + std::to_string(dimension_); }

std::vector<float> HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> acc(dimension_, 0.0);
  for (const auto& w : text::words(text)) {
    const std::uint64_t h = fnv1a64(w);
    acc[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(dimension_, 0.0f);
  if (norm > 0.0)
    for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
  detail::split_url(config_.endpoint_url);
  if (config_.dimension == 0) throw ConfigError("HTTP embedder needs a positive dimension");
  if (config_.api_key.empty())
    if (const char* key = std::getenv("MODEL_API_KEY")) config_.api_key = key;
}

std::string HttpEmbedder::name() const {
  return "http:" + config_.model + "/" + std::to_string(config_.dimension);
}

std::vector<float> HttpEmbedder::embed(std::string_view text) const {
  const auto url = detail::split_url(config_.endpoint_url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const json body = {{"model", config_.model}, {"input", std::string(text)}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError("embedding endpoint returned HTTP " + std::to_string(res->status));
  std::vector<float> out;
  try {
    const auto j = json::parse(res->body);
    for (const auto& v : j.at("data").at(0).at("embedding")) out.push_back(v.get<float>());
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embedding response: ") + e.what());
  }
  if (out.size() != config_.dimension)
    throw ConfigError("embedding endpoint returned dimension " + std::to_string(out.size()) +
                      ", expected " + std::to_string(config_.dimension));
  return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& name, const std::string& endpoint_url) {
  const auto slash = name.rfind('/');
  if (slash == std::string::npos) throw ConfigError("unrecognised embedder name '" + name + "'");
  std::size_t dim = 0;
  try {
    dim = std::stoul(name.substr(slash + 1));
  } catch (const std::exception&) {
    throw ConfigError("unrecognised embedder name '" + name + "'");
  }
  const std::string kind = name.substr(0, slash);
  if (kind == "hash-v1") return std::make_unique<HashingEmbedder>(dim);
  if (kind.starts_with("http:")) {
    if (endpoint_url.empty())
      throw ConfigError("embedder '" + name + "' needs an embedding endpoint URL");
    HttpEmbedderConfig cfg;
    cfg.endpoint_url = endpoint_url;
    cfg.model = kind.substr(5);
    cfg.dimension = dim;
    return std::make_unique<HttpEmbedder>(cfg);
  }
  throw ConfigError("unrecognised embedder name '" + name + "'");
}

}  // namespace bailaudit
