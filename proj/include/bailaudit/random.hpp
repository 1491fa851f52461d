#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace bailaudit {

// Seeded randomness with a fully specified output sequence. std::mt19937_64
// is pinned by the standard; the bounded draw below avoids the
// implementation-defined std::uniform_int_distribution so results match
// across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n) via the high half of a 64x64 product. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(product >> 64);
  }

  // Fisher-Yates, swapping from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bailaudit
