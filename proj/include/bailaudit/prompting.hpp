#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "bailaudit/types.hpp"

namespace bailaudit {

// A versioned set of prompt templates. File format: sections introduced by a
// line "=== name ===", content runs to the next header with the final newline
// dropped. Placeholders are {NAME}. Required sections:
//   system            base system prompt
//   rag_system        system prompt with a {PRECEDENTS} slot
//   precedent         one precedent: {RANK}, {PRECEDENT}, {OUTCOME}
//   outcome_granted   text substituted for {OUTCOME} (granted precedent)
//   outcome_denied    text substituted for {OUTCOME} (denied precedent)
//   user              {CASE_FACT} and {QUESTION}
//   question          the binary bail question
//   confidence_question
class TemplateSet {
 public:
  static TemplateSet parse(std::string_view content);
  static TemplateSet load(const std::string& path);
  static const TemplateSet& builtin();

  const std::string& section(const std::string& name) const;
  const std::string& version() const noexcept { return version_; }
  // SHA-256 of the source bytes.
  const std::string& hash() const noexcept { return hash_; }
  // Literal text preceding {RANK} in the precedent section; one occurrence
  // per rendered precedent.
  std::string precedent_delimiter() const;

 private:
  std::map<std::string, std::string> sections_;
  std::string version_;
  std::string hash_;
};

extern const char* const kBuiltinTemplates;

struct PrecedentText {
  std::string case_id;
  std::string text;
  bool bail_granted = false;
};

struct PromptOptions {
  bool ask_confidence = true;
  // Omit the outcome line of each precedent.
  bool precedent_facts_only = false;
};

struct PromptInput {
  std::string case_id;
  std::string fact_text;
  // Typed rendering; required for, and only accepted by, FT_TYPED_RAG.
  std::optional<std::string> typed_text;
  std::string image_ref;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string image_ref;
  bool asks_confidence = true;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// Throws AssemblyError when precedents are missing for a retrieval
// configuration, supplied for a non-retrieval one, or when the typed
// rendering does not match the configuration.
PromptBundle build_prompt(Configuration cfg, const PromptInput& input,
                          const std::optional<std::vector<PrecedentText>>& precedents,
                          const TemplateSet& templates, const PromptOptions& options = {});

// Ordered decision rules. File format: a "version: <id>" line, then one rule
// per line "<yes|no> <ECMAScript regex>", '#' comments. Rules run against the
// normalized response (lowercase, punctuation replaced by spaces, collapsed).
class DecisionRules {
 public:
  static DecisionRules parse(std::string_view content);
  static DecisionRules load(const std::string& path);
  static const DecisionRules& builtin();

  Decision apply(std::string_view raw) const;
  const std::string& version() const noexcept { return version_; }
  const std::string& hash() const noexcept { return hash_; }
  std::size_t size() const noexcept { return rules_.size(); }

 private:
  struct Rule {
    Decision decision;
    std::string pattern;
    std::regex re;
  };
  std::vector<Rule> rules_;
  std::string version_;
  std::string hash_;
};

extern const char* const kBuiltinDecisionRules;

std::string normalize_response(std::string_view raw);

// Never throws.
Decision parse_decision(std::string_view raw, const DecisionRules& rules = DecisionRules::builtin());

// First standalone high/medium/low after the decision sentence. A response
// that is a single sentence is searched whole.
Confidence parse_confidence(std::string_view raw);

}  // namespace bailaudit
