#include "bailaudit/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "bailaudit/errors.hpp"
#include "bailaudit/kernels/l2.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'B', 'A', 'I', 'L', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr const char* kSidecarSchema = "bailaudit.index/1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

}  // namespace

std::string_view to_string(IndexTextKind k) noexcept {
  return k == IndexTextKind::kFact ? "fact" : "typed";
}

PrecedentIndex::PrecedentIndex(std::string embedder_name, std::size_t dimension,
                               IndexTextKind kind)
    : embedder_name_(std::move(embedder_name)), dimension_(dimension), kind_(kind) {
  if (dimension_ == 0) throw ConfigError("index dimension must be positive");
}

std::span<const float> PrecedentIndex::vector(std::size_t i) const {
  return std::span<const float>(vectors_).subspan(i * dimension_, dimension_);
}

void PrecedentIndex::add(IndexEntry entry, std::span<const float> vec) {
  if (vec.size() != dimension_)
    throw ConfigError("vector for " + entry.case_id + " has dimension " +
                      std::to_string(vec.size()) + ", index expects " + std::to_string(dimension_));
  if (find(entry.case_id)) throw ConfigError("duplicate case_id in index: " + entry.case_id);
  entries_.push_back(std::move(entry));
  vectors_.insert(vectors_.end(), vec.begin(), vec.end());
}

const IndexEntry* PrecedentIndex::find(std::string_view case_id) const {
  for (const auto& e : entries_)
    if (e.case_id == case_id) return &e;
  return nullptr;
}

void PrecedentIndex::save(const std::string& path) const {
  std::string bin(kMagic, sizeof(kMagic));
  put_u32(bin, kFormatVersion);
  put_u32(bin, static_cast<std::uint32_t>(dimension_));
  put_u64(bin, entries_.size());
  bin.reserve(bin.size() + vectors_.size() * 4);
  for (float f : vectors_) put_u32(bin, std::bit_cast<std::uint32_t>(f));
  text::write_file(path, bin);

  json entries = json::array();
  for (const auto& e : entries_)
    entries.push_back({{"case_id", e.case_id}, {"bail_granted", e.bail_granted}, {"text", e.text}});
  const json sidecar = {{"schema", kSidecarSchema},
                        {"embedder", embedder_name_},
                        {"dimension", dimension_},
                        {"text_kind", to_string(kind_)},
                        {"count", entries_.size()},
                        {"entries", std::move(entries)}};
  text::write_file(path + ".json", sidecar.dump(1) + "\n");
}

PrecedentIndex PrecedentIndex::load(const std::string& path) {
  const std::string bin = text::read_file(path);
  constexpr std::size_t kHeader = sizeof(kMagic) + 4 + 4 + 8;
  if (bin.size() < kHeader || std::memcmp(bin.data(), kMagic, sizeof(kMagic)) != 0)
    throw ConfigError(path + " is not a precedent index file");
  const auto version = static_cast<std::uint32_t>(get_le(bin, 8, 4));
  if (version != kFormatVersion)
    throw ConfigError(path + ": unsupported index version " + std::to_string(version));
  const auto dim = static_cast<std::size_t>(get_le(bin, 12, 4));
  const auto count = static_cast<std::size_t>(get_le(bin, 16, 8));
  if (bin.size() != kHeader + count * dim * 4)
    throw ConfigError(path + ": vector block size does not match header");

  json sidecar;
  try {
    sidecar = json::parse(text::read_file(path + ".json"));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ".json: " + e.what());
  }
  if (sidecar.value("schema", "") != kSidecarSchema)
    throw ConfigError(path + ".json: unexpected schema");
  if (sidecar.at("dimension").get<std::size_t>() != dim ||
      sidecar.at("count").get<std::size_t>() != count)
    throw ConfigError(path + ".json: metadata disagrees with the vector file");
  const std::string kind = sidecar.at("text_kind").get<std::string>();
  if (kind != "fact" && kind != "typed") throw ConfigError(path + ".json: bad text_kind");

  PrecedentIndex index(sidecar.at("embedder").get<std::string>(), dim,
                       kind == "fact" ? IndexTextKind::kFact : IndexTextKind::kTyped);
  const auto& entries = sidecar.at("entries");
  if (entries.size() != count) throw ConfigError(path + ".json: entry count mismatch");
  std::vector<float> vec(dim);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t c = 0; c < dim; ++c)
      vec[c] = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_le(bin, kHeader + (r * dim + c) * 4, 4)));
    const auto& e = entries[r];
    index.add(IndexEntry{e.at("case_id").get<std::string>(), e.at("bail_granted").get<bool>(),
                         e.at("text").get<std::string>()},
              vec);
  }
  return index;
}

namespace {

template <typename Fact, typename TextOf>
PrecedentIndex build(std::span<const Fact> facts, const Embedder& embedder, IndexTextKind kind,
                     TextOf text_of) {
  for (const auto& f : facts)
    if (f.split != Split::kTrain)
      throw ContaminationError("fact " + f.case_id +
                               " is not in the training split and cannot enter the precedent index");
  PrecedentIndex index(embedder.name(), embedder.dimension(), kind);
  for (const auto& f : facts) {
    const std::string& t = text_of(f);
    index.add(IndexEntry{f.case_id, f.bail_granted, t}, embedder.embed(t));
  }
  return index;
}

}  // namespace

PrecedentIndex build_index(std::span<const CaseFact> facts, const Embedder& embedder) {
  return build(facts, embedder, IndexTextKind::kFact,
               [](const CaseFact& f) -> const std::string& { return f.text; });
}

PrecedentIndex build_index(std::span<const TypedFact> facts, const Embedder& embedder) {
  return build(facts, embedder, IndexTextKind::kTyped,
               [](const TypedFact& f) -> const std::string& { return f.rendered_text; });
}

RetrievalResult retrieve_top_k(const PrecedentIndex& index, std::span<const float> query,
                               std::size_t k, std::string_view exclude_case_id) {
  if (index.empty()) throw ValidationError("cannot retrieve from an empty index");
  if (k < 1) throw ValidationError("k must be at least 1");
  if (query.size() != index.dimension())
    throw ConfigError("query dimension " + std::to_string(query.size()) +
                      " does not match index dimension " + std::to_string(index.dimension()));

  std::vector<double> d2(index.size());
  kernels::squared_l2_rows(query, index.vectors(), d2);

  const auto& entries = index.entries();
  std::vector<std::size_t> candidates;
  candidates.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (exclude_case_id.empty() || entries[i].case_id != exclude_case_id) candidates.push_back(i);

  const std::size_t take = std::min(k, candidates.size());
  auto closer = [&](std::size_t a, std::size_t b) {
    if (d2[a] != d2[b]) return d2[a] < d2[b];
    return entries[a].case_id < entries[b].case_id;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), closer);

  RetrievalResult result;
  result.k = k;
  result.ranked.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t i = candidates[r];
    result.ranked.push_back(Neighbor{entries[i].case_id, std::sqrt(d2[i])});
  }
  return result;
}

RetrievalResult retrieve_top_k(const PrecedentIndex& index, const Embedder& embedder,
                               std::string_view query_text, std::size_t k,
                               std::string_view exclude_case_id) {
  if (embedder.name() != index.embedder_name())
    throw ConfigError("index was built with '" + index.embedder_name() + "', query embedder is '" +
                      embedder.name() + "'");
  const auto q = embedder.embed(query_text);
  return retrieve_top_k(index, q, k, exclude_case_id);
}

}  // namespace bailaudit
