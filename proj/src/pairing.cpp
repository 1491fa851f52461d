#include "bailaudit/pairing.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <unordered_set>

#include "bailaudit/errors.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/random.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

std::optional<Group> group_of(const ImageRecord& record) noexcept {
  const bool male = record.gender == Gender::kMale;
  switch (record.race) {
    case Race::kWhite: return male ? Group::kWM : Group::kWF;
    case Race::kBlack: return male ? Group::kBM : Group::kBF;
    case Race::kOther: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// RFC 4180-style rows: quoted fields, doubled quotes, CRLF or LF endings.
std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<Race> parse_race(const std::string& raw) {
  const std::string r = text::to_lower(text::trim(raw));
  if (r.empty()) return std::nullopt;
  if (r == "white") return Race::kWhite;
  if (r == "black" || r == "african american" || r == "black or african american")
    return Race::kBlack;
  return Race::kOther;
}

std::optional<Gender> parse_gender(const std::string& raw) {
  const std::string g = text::to_lower(text::trim(raw));
  if (g == "male" || g == "m") return Gender::kMale;
  if (g == "female" || g == "f") return Gender::kFemale;
  return std::nullopt;
}

}  // namespace

RosterLoad parse_roster(std::string_view csv, const std::set<Group>& group_filter) {
  RosterLoad load;
  const auto rows = parse_csv(csv);
  if (rows.empty()) return load;

  const auto& header = rows.front();
  auto column = [&](const char* name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (text::to_lower(text::trim(header[i])) == name) return i;
    return std::nullopt;
  };
  const auto id_col = column("image_id");
  const auto uri_col = column("uri");
  const auto race_col = column("race");
  const auto gender_col = column("gender");
  const auto offense_col = column("offense_types");
  if (!id_col) throw IngestionError({}, "roster is missing the image_id column");
  if (!uri_col) throw IngestionError({}, "roster is missing the uri column");
  if (!race_col) throw IngestionError({}, "roster is missing the race column");
  if (!gender_col) throw IngestionError({}, "roster is missing the gender column");

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::optional<std::size_t> col) -> std::string {
      return col && *col < row.size() ? text::trim(row[*col]) : std::string{};
    };
    const std::string line = "roster row " + std::to_string(r + 1);
    ImageRecord rec;
    rec.image_id = cell(id_col);
    if (rec.image_id.empty()) {
      load.warnings.push_back(line + ": empty image_id, skipped");
      continue;
    }
    if (!seen.insert(rec.image_id).second)
      throw IngestionError(rec.image_id, "duplicate image_id in roster");
    rec.uri = cell(uri_col);
    const auto race = parse_race(cell(race_col));
    if (!race) {
      load.warnings.push_back(line + " (" + rec.image_id + "): missing race, skipped");
      continue;
    }
    const auto gender = parse_gender(cell(gender_col));
    if (!gender) {
      load.warnings.push_back(line + " (" + rec.image_id + "): unknown gender '" +
                              cell(gender_col) + "', skipped");
      continue;
    }
    rec.race = *race;
    rec.gender = *gender;
    const std::string offenses = cell(offense_col);
    for (std::size_t start = 0; start <= offenses.size();) {
      const auto end = std::min(offenses.find(';', start), offenses.size());
      std::string t = text::trim(std::string_view(offenses).substr(start, end - start));
      if (!t.empty()) rec.offense_types.push_back(std::move(t));
      start = end + 1;
    }
    const auto g = group_of(rec);
    if (!g) {
      ++load.excluded_other_race;
      continue;
    }
    if (!group_filter.contains(*g)) {
      ++load.excluded_by_filter;
      continue;
    }
    ++load.per_group[static_cast<std::size_t>(*g)];
    load.records.push_back(std::move(rec));
  }
  if (load.excluded_other_race > 0)
    load.warnings.push_back(std::to_string(load.excluded_other_race) +
                            " records with a race other than White or Black skipped");
  return load;
}

RosterLoad load_roster(const std::string& path, const std::set<Group>& group_filter) {
  RosterLoad load = parse_roster(text::read_file(path), group_filter);
  const auto base = std::filesystem::path(path).parent_path();
  for (auto& rec : load.records) {
    if (rec.uri.find("://") != std::string::npos) continue;
    const std::filesystem::path uri(rec.uri);
    if (uri.is_relative()) rec.uri = (base / uri).lexically_normal().string();
  }
  return load;
}

json to_json(const Pair& pair) {
  return {{"image_id", pair.image_id},
          {"case_id", pair.case_id},
          {"group", to_string(pair.group)},
          {"split", to_string(pair.split)}};
}

Pair pair_from_json(const json& j) {
  Pair p;
  p.image_id = jsonl::require_string(j, "image_id");
  p.case_id = jsonl::require_string(j, "case_id", p.image_id);
  const auto g = parse_group(jsonl::require_string(j, "group", p.case_id));
  const auto s = parse_split(jsonl::require_string(j, "split", p.case_id));
  if (!g) throw IngestionError(p.case_id, "invalid group in pair");
  if (!s) throw IngestionError(p.case_id, "invalid split in pair");
  p.group = *g;
  p.split = *s;
  return p;
}

PairSet::PairSet(std::span<const ImageRecord> roster, std::span<const CaseFact> facts)
    : roster_(roster), facts_(facts) {
  if (roster.empty()) throw ValidationError("cannot pair an empty roster");
  if (facts.empty()) throw ValidationError("cannot pair an empty fact list");
  groups_.reserve(roster.size());
  for (const auto& rec : roster) {
    const auto g = group_of(rec);
    if (!g) throw ValidationError("image " + rec.image_id + " is outside the audited groups");
    groups_.push_back(*g);
  }
  for (const auto& f : facts)
    if (!f.split) throw ValidationError("fact " + f.case_id + " has no split");
}

Pair PairSet::at(std::size_t image_index, std::size_t fact_index) const {
  const auto& img = roster_[image_index];
  const auto& fact = facts_[fact_index];
  return Pair{img.image_id, fact.case_id, groups_[image_index], *fact.split};
}

Pair PairSet::at(std::size_t i) const {
  const std::size_t m = facts_.size();
  return at(i / m, i % m);
}

PairSet generate_pairs(std::span<const ImageRecord> roster, std::span<const CaseFact> facts) {
  return PairSet(roster, facts);
}

namespace {

std::uint64_t fact_seed(const std::string& case_id, std::uint64_t seed) {
  return seed * 0x9E3779B97F4A7C15ULL + fnv1a64(case_id);
}

}  // namespace

std::size_t sample_image_index(const CaseFact& fact, std::size_t roster_size, std::uint64_t seed) {
  if (roster_size == 0) throw ValidationError("cannot sample from an empty roster");
  SeededRng rng(fact_seed(fact.case_id, seed));
  return static_cast<std::size_t>(rng.below(roster_size));
}

Pair sample_training_pair(const CaseFact& fact, std::span<const ImageRecord> roster,
                          std::uint64_t seed) {
  if (fact.split != Split::kTrain)
    throw ValidationError("fact " + fact.case_id + " is not in the training split");
  const auto& img = roster[sample_image_index(fact, roster.size(), seed)];
  const auto g = group_of(img);
  if (!g) throw ValidationError("image " + img.image_id + " is outside the audited groups");
  return Pair{img.image_id, fact.case_id, *g, Split::kTrain};
}

std::vector<Pair> limited_pairs(const PairSet& pairs, std::size_t max_per_fact,
                                std::uint64_t seed) {
  const std::size_t n = pairs.image_count();
  const std::size_t m = pairs.fact_count();
  std::vector<Pair> out;
  if (max_per_fact >= n) {
    out.assign(pairs.begin(), pairs.end());
    return out;
  }
  // keep[j] holds the chosen image indices for fact j.
  std::vector<std::vector<bool>> keep(m, std::vector<bool>(n, false));
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < m; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng rng(fact_seed(pairs.at(0, j).case_id, seed));
    rng.shuffle(order);
    for (std::size_t r = 0; r < max_per_fact; ++r) keep[j][order[r]] = true;
  }
  out.reserve(max_per_fact * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (keep[j][i]) out.push_back(pairs.at(i, j));
  return out;
}

}  // namespace bailaudit
