#include "bailaudit/offense.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "bailaudit/backend.hpp"
#include "bailaudit/errors.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/jsonl.hpp"

namespace bailaudit {

using nlohmann::json;

const std::vector<std::string> kStandardOffenseTypes = {
    "weapons violation", "theft", "battery", "narcotics", "homicide", "burglary",
    "robbery", "motor vehicle theft", "intimidation", "stalking", "criminal trespass",
    "liquor law violation", "prostitution", "human trafficking", "public indecency",
    "assault", "public peace violation"};

OffenseLexicon::OffenseLexicon(std::map<std::string, std::vector<std::string>> entries) {
  for (auto& [type, keywords] : entries) {
    const std::string name = text::trim(type);
    if (name.empty()) throw ConfigError("offense lexicon has an empty offense type name");
    std::vector<std::string> unique;
    std::set<std::string> seen;
    for (const auto& k : keywords) {
      std::string t = text::trim(k);
      if (!t.empty() && seen.insert(text::to_lower(t)).second) unique.push_back(std::move(t));
    }
    if (unique.empty()) throw ConfigError("offense type '" + name + "' has no keywords");
    auto& slot = entries_[name];
    slot.insert(slot.end(), unique.begin(), unique.end());
  }
}

OffenseLexicon OffenseLexicon::parse(std::string_view content) {
  std::map<std::string, std::vector<std::string>> entries;
  std::istringstream in{std::string(content)};
  std::string line;
  std::string current;
  bool have_section = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("lexicon line " + std::to_string(line_no) + ": unterminated header");
      current = text::trim(std::string_view(t).substr(1, t.size() - 2));
      have_section = true;
      entries[current];
      continue;
    }
    if (!have_section)
      throw ConfigError("lexicon line " + std::to_string(line_no) + ": keyword before any [offense type] header");
    entries[current].push_back(t);
  }
  return OffenseLexicon(std::move(entries));
}

OffenseLexicon OffenseLexicon::load(const std::string& path) {
  return parse(text::read_file(path));
}

std::string OffenseLexicon::serialize() const {
  std::string out;
  for (const auto& [type, keywords] : entries_) {
    out += "[" + type + "]\n";
    for (const auto& k : keywords) out += k + "\n";
    out += "\n";
  }
  return out;
}

std::string OffenseLexicon::hash() const { return sha256_hex(serialize()); }

std::string render_typed_text(const std::string& text, const std::vector<std::string>& types) {
  if (types.empty()) return text;
  std::string out = text + "\nOffense types: ";
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (i) out += ", ";
    out += types[i];
  }
  return out;
}

OffenseTagger::OffenseTagger(const OffenseLexicon& lexicon, TagOptions options) {
  const auto mode = options.stem ? text::WordMatch::kPrefix : text::WordMatch::kWhole;
  for (const auto& [type, keywords] : lexicon.entries()) {
    types_.push_back(type);
    matchers_.emplace_back(keywords, mode, options.case_sensitive);
  }
  case_sensitive_ = options.case_sensitive;
}

std::vector<std::string> OffenseTagger::offense_types(std::string_view text) const {
  const auto text_words = text::words(text, !case_sensitive_);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < types_.size(); ++i)
    if (matchers_[i].first_match_words(text_words) >= 0) out.push_back(types_[i]);
  // Map order already sorts types; keep the guarantee explicit.
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TypedFact OffenseTagger::tag(const CaseFact& fact) const {
  TypedFact t;
  t.case_id = fact.case_id;
  t.text = fact.text;
  t.offense_types = offense_types(fact.text);
  t.rendered_text = render_typed_text(t.text, t.offense_types);
  t.bail_granted = fact.bail_granted;
  t.split = fact.split;
  return t;
}

TypedFact tag_case(const CaseFact& fact, const OffenseLexicon& lexicon, TagOptions options) {
  return OffenseTagger(lexicon, options).tag(fact);
}

json to_json(const TypedFact& fact) {
  json j = {{"case_id", fact.case_id},
            {"text", fact.text},
            {"offense_types", fact.offense_types},
            {"rendered_text", fact.rendered_text},
            {"bail_granted", fact.bail_granted}};
  j["split"] = fact.split ? json(to_string(*fact.split)) : json(nullptr);
  return j;
}

TypedFact typed_fact_from_json(const json& j) {
  TypedFact t;
  t.case_id = jsonl::require_string(j, "case_id");
  t.text = jsonl::require_string(j, "text", t.case_id);
  t.rendered_text = jsonl::require_string(j, "rendered_text", t.case_id);
  t.bail_granted = jsonl::require_bool(j, "bail_granted", t.case_id);
  const auto it = j.find("offense_types");
  if (it == j.end() || !it->is_array())
    throw IngestionError(t.case_id, "missing offense_types array");
  for (const auto& v : *it) {
    if (!v.is_string()) throw IngestionError(t.case_id, "non-string offense type");
    t.offense_types.push_back(v.get<std::string>());
  }
  if (const auto s = j.find("split"); s != j.end() && !s->is_null()) {
    const auto parsed = s->is_string() ? parse_split(s->get<std::string>()) : std::nullopt;
    if (!parsed) throw IngestionError(t.case_id, "invalid split value");
    t.split = parsed;
  }
  return t;
}

std::vector<TypedFact> load_typed_facts(const std::string& path) {
  std::vector<TypedFact> out;
  jsonl::for_each(path, [&](const json& j, std::size_t) { out.push_back(typed_fact_from_json(j)); });
  return out;
}

void save_typed_facts(const std::string& path, const std::vector<TypedFact>& facts) {
  std::vector<json> rows;
  rows.reserve(facts.size());
  for (const auto& f : facts) rows.push_back(to_json(f));
  jsonl::write_all(path, rows);
}

std::vector<std::string> parse_keyword_response(std::string_view response) {
  static const std::regex leading(R"(^\s*(?:[-*•]+|\d+[.)])\s*)");
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string item;
  auto flush = [&] {
    std::string t = std::regex_replace(item, leading, "");
    t = text::normalize_space(text::to_lower(t));
    while (!t.empty() && (t.back() == '.' || t.back() == '"' || t.back() == '\'')) t.pop_back();
    while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.erase(t.begin());
    t = text::trim(t);
    if (!t.empty() && seen.insert(t).second) out.push_back(t);
    item.clear();
  };
  for (char c : response) {
    if (c == ',' || c == '\n' || c == ';') {
      flush();
    } else {
      item.push_back(c);
    }
  }
  flush();
  return out;
}

ExpansionResult expand_lexicon(const ModelBackend& backend, const std::string& offense_type,
                               std::size_t n) {
  ExpansionResult result;
  if (n == 0) return result;
  PromptBundle bundle;
  bundle.system_text =
      "You help build keyword lexicons for categorizing criminal case reports.";
  bundle.user_text = "List up to " + std::to_string(n) +
                     " keywords or short phrases that case reports use for the offense type \"" +
                     offense_type + "\". Reply with a comma-separated list only.";
  bundle.asks_confidence = false;
  Completion completion;
  try {
    completion = backend.complete(bundle);
  } catch (const Error& e) {
    throw ExpansionError("lexicon expansion for '" + offense_type + "' failed: " + e.what());
  }
  result.keywords = parse_keyword_response(completion.text);
  if (result.keywords.empty())
    result.warnings.push_back("no keywords could be parsed from the response for '" +
                              offense_type + "'");
  if (result.keywords.size() > n) result.keywords.resize(n);
  return result;
}

}  // namespace bailaudit
