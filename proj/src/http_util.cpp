#include "http_util.hpp"

#include "bailaudit/errors.hpp"

namespace bailaudit::detail {

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0)
    throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  const auto host_start = scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  const std::string host = url.substr(host_start, path_start == std::string::npos
                                                      ? std::string::npos
                                                      : path_start - host_start);
  if (host.empty()) throw ConfigError("endpoint URL has no host: '" + url + "'");
  SplitUrl out;
  out.origin = scheme + "://" + host;
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return out;
}

}  // namespace bailaudit::detail
