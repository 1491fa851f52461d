#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bailaudit {

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string base64_encode(std::string_view bytes);

}  // namespace bailaudit
