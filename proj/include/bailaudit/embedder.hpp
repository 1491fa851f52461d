#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace bailaudit {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<float> embed(std::string_view text) const = 0;
};

// Signed feature hashing over lowercase words, L2-normalized. Deterministic
// and offline. Empty text embeds to the zero vector.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 1024);

  std::string name() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

struct HttpEmbedderConfig {
  std::string endpoint_url;  // e.g. http://localhost:8000/v1/embeddings
  std::string model;
  std::size_t dimension = 0;
  double timeout_seconds = 60.0;
  std::string api_key;
};

// Client for an embeddings endpoint: POST {"model", "input"} and read
// data[0].embedding. Throws BackendError on transport failure and ConfigError
// when the returned dimension differs from the configured one.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);

  std::string name() const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::vector<float> embed(std::string_view text) const override;

 private:
  HttpEmbedderConfig config_;
};

// Recreates an embedder from its name() ("hash-v1/1024", "http:<model>/<dim>").
// HTTP embedders additionally need an endpoint.
std::unique_ptr<Embedder> make_embedder(const std::string& name,
                                        const std::string& endpoint_url = {});

}  // namespace bailaudit
