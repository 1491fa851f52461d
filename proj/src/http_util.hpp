#pragma once

#include <string>

namespace bailaudit::detail {

// "http://host:8000/v1/chat" -> {"http://host:8000", "/v1/chat"}.
struct SplitUrl {
  std::string origin;
  std::string path;
};

// Throws ConfigError when the URL has no scheme or host.
SplitUrl split_url(const std::string& url);

}  // namespace bailaudit::detail
