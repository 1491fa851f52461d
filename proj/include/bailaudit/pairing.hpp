#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bailaudit/corpus.hpp"
#include "bailaudit/types.hpp"
#include "json.hpp"

namespace bailaudit {

enum class Race { kWhite, kBlack, kOther };
enum class Gender { kMale, kFemale };

struct ImageRecord {
  std::string image_id;
  std::string uri;
  Race race = Race::kOther;
  Gender gender = Gender::kMale;
  std::vector<std::string> offense_types;
};

// Group of a record, or nullopt when the race is outside the audited strata.
std::optional<Group> group_of(const ImageRecord& record) noexcept;

struct RosterLoad {
  std::vector<ImageRecord> records;
  std::array<std::size_t, 4> per_group{};  // indexed by Group
  std::size_t excluded_other_race = 0;
  std::size_t excluded_by_filter = 0;
  std::vector<std::string> warnings;
};

// CSV with header image_id,uri,race,gender,offense_types. Relative uris are
// resolved against the roster file's directory. Missing race or
// gender columns raise IngestionError; rows with unreadable values are skipped
// with a warning.
RosterLoad load_roster(const std::string& path, const std::set<Group>& group_filter);
RosterLoad parse_roster(std::string_view csv, const std::set<Group>& group_filter);

struct Pair {
  std::string image_id;
  std::string case_id;
  Group group = Group::kWM;
  Split split = Split::kTest;

  friend bool operator==(const Pair&, const Pair&) = default;
};

nlohmann::json to_json(const Pair& pair);
Pair pair_from_json(const nlohmann::json& j);

// Lazily enumerated image x fact grid. Pair i is (image i / M, fact i % M):
// roster order major, fact order minor. Holds views; the roster and facts
// must outlive it.
class PairSet {
 public:
  // Throws ValidationError when either side is empty or a fact has no split.
  PairSet(std::span<const ImageRecord> roster, std::span<const CaseFact> facts);

  std::size_t size() const noexcept { return roster_.size() * facts_.size(); }
  Pair at(std::size_t i) const;
  Pair at(std::size_t image_index, std::size_t fact_index) const;

  std::size_t image_count() const noexcept { return roster_.size(); }
  std::size_t fact_count() const noexcept { return facts_.size(); }

  class iterator {
   public:
    using value_type = Pair;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    iterator(const PairSet* set, std::size_t i) : set_(set), i_(i) {}
    Pair operator*() const { return set_->at(i_); }
    iterator& operator++() { ++i_; return *this; }
    iterator operator++(int) { auto t = *this; ++i_; return t; }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const PairSet* set_ = nullptr;
    std::size_t i_ = 0;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size()}; }

 private:
  std::span<const ImageRecord> roster_;
  std::span<const CaseFact> facts_;
  std::vector<Group> groups_;
};

PairSet generate_pairs(std::span<const ImageRecord> roster, std::span<const CaseFact> facts);

// Index of the roster image chosen for `fact`, uniform over the roster and a
// pure function of (case_id, seed).
std::size_t sample_image_index(const CaseFact& fact, std::size_t roster_size, std::uint64_t seed);

// One random training pair for a fact. Throws ValidationError on an empty
// roster or a non-train fact.
Pair sample_training_pair(const CaseFact& fact, std::span<const ImageRecord> roster,
                          std::uint64_t seed);

// Per-fact cap on the grid: keeps at most `max_per_fact` images for every
// fact, chosen by a seeded sample, and preserves grid order.
std::vector<Pair> limited_pairs(const PairSet& pairs, std::size_t max_per_fact,
                                std::uint64_t seed);

}  // namespace bailaudit
