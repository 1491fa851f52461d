#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bailaudit/corpus.hpp"
#include "bailaudit/embedder.hpp"
#include "bailaudit/offense.hpp"

namespace bailaudit {

enum class IndexTextKind { kFact, kTyped };

struct IndexEntry {
  std::string case_id;
  bool bail_granted = false;
  std::string text;
};

// Exact nearest-neighbour store over training facts. Vectors live in one
// contiguous row-major float32 block.
class PrecedentIndex {
 public:
  PrecedentIndex(std::string embedder_name, std::size_t dimension, IndexTextKind kind);

  const std::string& embedder_name() const noexcept { return embedder_name_; }
  std::size_t dimension() const noexcept { return dimension_; }
  IndexTextKind text_kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  std::span<const float> vector(std::size_t i) const;
  std::span<const float> vectors() const noexcept { return vectors_; }

  // Throws ConfigError on a dimension mismatch or a duplicate case_id.
  void add(IndexEntry entry, std::span<const float> vec);
  const IndexEntry* find(std::string_view case_id) const;

  // Binary file at `path` (magic, version, dimension, count, LE float32 rows)
  // plus a JSON sidecar at `path + ".json"` with entry metadata.
  void save(const std::string& path) const;
  static PrecedentIndex load(const std::string& path);

 private:
  std::string embedder_name_;
  std::size_t dimension_;
  IndexTextKind kind_;
  std::vector<IndexEntry> entries_;
  std::vector<float> vectors_;
};

// Throws ContaminationError if any fact is not in the training split.
PrecedentIndex build_index(std::span<const CaseFact> facts, const Embedder& embedder);
PrecedentIndex build_index(std::span<const TypedFact> facts, const Embedder& embedder);

struct Neighbor {
  std::string case_id;
  double distance = 0.0;
};

struct RetrievalResult {
  std::vector<Neighbor> ranked;
  std::size_t k = 0;
};

// Exact top-k under L2 distance, ties broken by ascending case_id. A stored
// entry whose case_id equals `exclude_case_id` is skipped.
RetrievalResult retrieve_top_k(const PrecedentIndex& index, std::span<const float> query,
                               std::size_t k = 3, std::string_view exclude_case_id = {});
RetrievalResult retrieve_top_k(const PrecedentIndex& index, const Embedder& embedder,
                               std::string_view query_text, std::size_t k = 3,
                               std::string_view exclude_case_id = {});

std::string_view to_string(IndexTextKind k) noexcept;

}  // namespace bailaudit
