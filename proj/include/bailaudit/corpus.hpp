#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bailaudit/types.hpp"
#include "json.hpp"

namespace bailaudit {

struct RawCase {
  std::string case_id;
  std::string facts_and_arguments;
  bool bail_granted = false;
};

struct CaseFact {
  std::string case_id;
  std::string text;
  std::size_t token_count = 0;
  bool bail_granted = false;
  // Unset until split_corpus runs.
  std::optional<Split> split;
};

// Maps text to a token count. Registered under a name so configs can refer to
// model-exact tokenizers without linking them into the library.
using TokenCounter = std::function<std::size_t(std::string_view)>;

class TokenizerRegistry {
 public:
  // Ships with "whitespace" and "words".
  static TokenizerRegistry& instance();

  void add(const std::string& name, TokenCounter counter);
  // Throws ConfigError for unknown names.
  const TokenCounter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

 private:
  TokenizerRegistry();
  std::map<std::string, TokenCounter> counters_;
};

struct PreprocessConfig {
  std::vector<std::string> legal_stopwords;
  std::vector<std::string> argument_keywords{"oppose", "granted", "rejected"};
  std::size_t min_token_length = 50;
  std::string tokenizer_spec = "whitespace";
  std::string sentence_terminators = ".?!";

  // Throws ConfigError when min_token_length is 0 or the tokenizer is unknown.
  void validate() const;
};

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_spec);

enum class DropReason { kTooShort };

struct Dropped {
  std::string case_id;
  DropReason reason = DropReason::kTooShort;
  std::size_t token_count = 0;
};

using PreprocessOutcome = std::variant<CaseFact, Dropped>;

// Stopword deletion, then removal of sentences that mention an argument
// keyword, then the token-length gate.
PreprocessOutcome preprocess_case(const RawCase& raw, const PreprocessConfig& cfg);

// Individual steps, exposed for tests and diagnostics.
std::string remove_stopwords(std::string_view text, const std::vector<std::string>& stopwords);
std::string remove_argument_sentences(std::string_view text,
                                      const std::vector<std::string>& keywords,
                                      std::string_view terminators = ".?!");

// Assigns splits in place. |train| = round-half-up(train_fraction * n); the
// assignment is a seeded permutation so it is stable across platforms.
void split_corpus(std::vector<CaseFact>& facts, double train_fraction, std::uint64_t seed);

// JSONL I/O.
std::vector<RawCase> load_raw_cases(const std::string& path);
std::vector<CaseFact> load_case_facts(const std::string& path);
void save_case_facts(const std::string& path, const std::vector<CaseFact>& facts);

nlohmann::json to_json(const CaseFact& fact);
CaseFact case_fact_from_json(const nlohmann::json& j);

std::vector<std::string> load_lexicon_file(const std::string& path);

}  // namespace bailaudit
