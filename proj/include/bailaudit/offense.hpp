#pragma once

#include <map>
#include <string>
#include <vector>

#include "bailaudit/corpus.hpp"
#include "bailaudit/errors.hpp"
#include "bailaudit/text.hpp"
#include "json.hpp"

namespace bailaudit {

class ModelBackend;

// Offense categories listed for the mugshot roster metadata.
extern const std::vector<std::string> kStandardOffenseTypes;

struct TagOptions {
  bool case_sensitive = false;
  // Lets the last word of a keyword match inflected forms ("assault" ~ "assaulted").
  bool stem = false;
};

class OffenseLexicon {
 public:
  OffenseLexicon() = default;
  // Throws ConfigError if any keyword set is empty.
  explicit OffenseLexicon(std::map<std::string, std::vector<std::string>> entries);

  // Sectioned format: "[offense type]" headers, one keyword per line, '#' comments.
  static OffenseLexicon parse(std::string_view content);
  static OffenseLexicon load(const std::string& path);

  const std::map<std::string, std::vector<std::string>>& entries() const noexcept {
    return entries_;
  }
  std::string serialize() const;
  // SHA-256 of serialize(), independent of source formatting.
  std::string hash() const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

struct TypedFact {
  std::string case_id;
  std::string text;
  std::vector<std::string> offense_types;  // sorted, unique
  std::string rendered_text;
  bool bail_granted = false;
  std::optional<Split> split;
};

// Appends "\nOffense types: a, b" to the text; returns the text unchanged when
// there are no types.
std::string render_typed_text(const std::string& text, const std::vector<std::string>& types);

class OffenseTagger {
 public:
  OffenseTagger(const OffenseLexicon& lexicon, TagOptions options = {});

  TypedFact tag(const CaseFact& fact) const;
  std::vector<std::string> offense_types(std::string_view text) const;

 private:
  std::vector<std::string> types_;
  std::vector<text::PhraseMatcher> matchers_;
  bool case_sensitive_ = false;
};

TypedFact tag_case(const CaseFact& fact, const OffenseLexicon& lexicon, TagOptions options = {});

nlohmann::json to_json(const TypedFact& fact);
TypedFact typed_fact_from_json(const nlohmann::json& j);
std::vector<TypedFact> load_typed_facts(const std::string& path);
void save_typed_facts(const std::string& path, const std::vector<TypedFact>& facts);

class ExpansionError : public BackendError {
 public:
  using BackendError::BackendError;
};

struct ExpansionResult {
  std::vector<std::string> keywords;
  std::vector<std::string> warnings;
};

// Asks the backend for up to `n` keywords related to an offense type. The
// result is a proposal for human review; no lexicon is modified.
ExpansionResult expand_lexicon(const ModelBackend& backend, const std::string& offense_type,
                               std::size_t n);

// Splits a free-form list response (commas, newlines, bullets, numbering)
// into unique lowercase keywords, first occurrence order.
std::vector<std::string> parse_keyword_response(std::string_view response);

}  // namespace bailaudit
