#include "bailaudit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <unordered_set>

#include "bailaudit/errors.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/random.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

TokenizerRegistry::TokenizerRegistry() {
  counters_["whitespace"] = [](std::string_view s) { return text::split_whitespace(s).size(); };
  counters_["words"] = [](std::string_view s) { return text::words(s).size(); };
}

TokenizerRegistry& TokenizerRegistry::instance() {
  static TokenizerRegistry registry;
  return registry;
}

void TokenizerRegistry::add(const std::string& name, TokenCounter counter) {
  counters_[name] = std::move(counter);
}

const TokenCounter& TokenizerRegistry::get(const std::string& name) const {
  const auto it = counters_.find(name);
  if (it == counters_.end()) throw ConfigError("unknown tokenizer '" + name + "'");
  return it->second;
}

bool TokenizerRegistry::contains(const std::string& name) const {
  return counters_.contains(name);
}

void PreprocessConfig::validate() const {
  if (min_token_length < 1) throw ConfigError("min_token_length must be at least 1");
  TokenizerRegistry::instance().get(tokenizer_spec);
  if (sentence_terminators.empty()) throw ConfigError("sentence_terminators is empty");
}

std::size_t count_tokens(std::string_view text, const std::string& tokenizer_spec) {
  return TokenizerRegistry::instance().get(tokenizer_spec)(text);
}

namespace {

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

// A whitespace token split into leading punctuation, core and trailing punctuation.
struct Token {
  std::string_view full;
  std::string core_lower;
  std::string_view trailing;
};

Token split_token(std::string_view tok) {
  std::size_t b = 0;
  std::size_t e = tok.size();
  while (b < e && !is_word_byte(tok[b])) ++b;
  while (e > b && !is_word_byte(tok[e - 1])) --e;
  return Token{tok, text::to_lower(tok.substr(b, e - b)), tok.substr(e)};
}

bool has_terminator(std::string_view s) {
  return s.find_first_of(".?!") != std::string_view::npos;
}

// One deletion pass. Returns true when something was removed.
bool stopword_pass(std::string_view text, const std::vector<std::vector<std::string>>& phrases,
                   std::string& out) {
  const auto raw = text::split_whitespace(text);
  std::vector<Token> tokens;
  tokens.reserve(raw.size());
  for (auto t : raw) tokens.push_back(split_token(t));

  std::vector<std::string> kept;
  bool removed = false;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t match_len = 0;
    for (const auto& phrase : phrases) {
      if (i + phrase.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
        const Token& t = tokens[i + k];
        ok = !t.core_lower.empty() && t.core_lower == phrase[k];
        // Phrases do not span punctuation.
        if (ok && k + 1 < phrase.size() && !t.trailing.empty()) ok = false;
      }
      if (ok) {
        match_len = phrase.size();
        break;
      }
    }
    if (match_len == 0) {
      kept.emplace_back(tokens[i].full);
      ++i;
      continue;
    }
    removed = true;
    const std::string_view trailing = tokens[i + match_len - 1].trailing;
    // Keep sentence boundaries intact.
    if (has_terminator(trailing) && !kept.empty() &&
        !has_terminator(std::string_view(kept.back()).substr(kept.back().size() - 1)))
      kept.back().append(trailing);
    i += match_len;
  }
  if (!removed) return false;
  out.clear();
  for (const auto& k : kept) {
    if (!out.empty()) out.push_back(' ');
    out += k;
  }
  return true;
}

}  // namespace

std::string remove_stopwords(std::string_view text, const std::vector<std::string>& stopwords) {
  std::vector<std::vector<std::string>> phrases;
  for (const auto& sw : stopwords) {
    std::vector<std::string> parts;
    for (auto p : text::split_whitespace(sw)) {
      Token t = split_token(p);
      if (!t.core_lower.empty()) parts.push_back(std::move(t.core_lower));
    }
    if (!parts.empty()) phrases.push_back(std::move(parts));
  }
  // Longest phrases win at a position.
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  if (phrases.empty()) return std::string(text);

  std::string current(text);
  std::string next;
  // Deleting a token can bring a multi-word stopword together; iterate to a fixpoint.
  while (stopword_pass(current, phrases, next)) current.swap(next);
  return current;
}

std::string remove_argument_sentences(std::string_view text,
                                      const std::vector<std::string>& keywords,
                                      std::string_view terminators) {
  const text::PhraseMatcher matcher(keywords, text::WordMatch::kPrefix);
  if (matcher.empty()) return std::string(text);
  const auto sentences = text::split_sentences(text, terminators);
  std::string out;
  bool removed = false;
  for (auto s : sentences) {
    if (matcher.matches(s)) {
      removed = true;
      continue;
    }
    if (!out.empty()) out.push_back(' ');
    out.append(s);
  }
  return removed ? out : std::string(text);
}

PreprocessOutcome preprocess_case(const RawCase& raw, const PreprocessConfig& cfg) {
  if (raw.case_id.empty()) throw IngestionError({}, "empty case_id");
  if (!text::is_valid_utf8(raw.facts_and_arguments))
    throw IngestionError(raw.case_id, "facts_and_arguments is not valid UTF-8");
  if (text::trim(raw.facts_and_arguments).empty())
    throw IngestionError(raw.case_id, "empty facts_and_arguments");
  cfg.validate();

  std::string text = remove_stopwords(raw.facts_and_arguments, cfg.legal_stopwords);
  text = remove_argument_sentences(text, cfg.argument_keywords, cfg.sentence_terminators);
  const std::size_t tokens = count_tokens(text, cfg.tokenizer_spec);
  if (tokens < cfg.min_token_length) return Dropped{raw.case_id, DropReason::kTooShort, tokens};

  CaseFact fact;
  fact.case_id = raw.case_id;
  fact.text = std::move(text);
  fact.token_count = tokens;
  fact.bail_granted = raw.bail_granted;
  return fact;
}

void split_corpus(std::vector<CaseFact>& facts, double train_fraction, std::uint64_t seed) {
  if (facts.size() < 2) throw ValidationError("split_corpus needs at least 2 facts");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must lie strictly between 0 and 1");
  for (const auto& f : facts)
    if (f.split) throw ValidationError("fact " + f.case_id + " already has a split");

  const auto n = facts.size();
  const auto train_count =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  rng.shuffle(order);
  for (std::size_t r = 0; r < n; ++r)
    facts[order[r]].split = r < train_count ? Split::kTrain : Split::kTest;
}

namespace {

std::string sniff_case_id(const std::string& line) {
  static const std::regex re(R"re("case_id"\s*:\s*"([^"\\]*)")re");
  std::smatch m;
  if (std::regex_search(line, m, re)) return m[1].str();
  return {};
}

}  // namespace

std::vector<RawCase> load_raw_cases(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError({}, "cannot open " + path);
  std::vector<RawCase> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!text::is_valid_utf8(line))
      throw IngestionError(sniff_case_id(line), where + ": text is not valid UTF-8");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestionError(sniff_case_id(line), where + ": " + e.what());
    }
    RawCase rc;
    rc.case_id = jsonl::require_string(j, "case_id");
    rc.facts_and_arguments = jsonl::require_string(j, "facts_and_arguments", rc.case_id);
    rc.bail_granted = jsonl::require_bool(j, "bail_granted", rc.case_id);
    if (rc.case_id.empty()) throw IngestionError({}, where + ": empty case_id");
    if (!seen.insert(rc.case_id).second)
      throw IngestionError(rc.case_id, where + ": duplicate case_id");
    out.push_back(std::move(rc));
  }
  return out;
}

json to_json(const CaseFact& fact) {
  json j = {{"case_id", fact.case_id},
            {"text", fact.text},
            {"token_count", fact.token_count},
            {"bail_granted", fact.bail_granted}};
  j["split"] = fact.split ? json(to_string(*fact.split)) : json(nullptr);
  return j;
}

CaseFact case_fact_from_json(const json& j) {
  CaseFact f;
  f.case_id = jsonl::require_string(j, "case_id");
  f.text = jsonl::require_string(j, "text", f.case_id);
  f.bail_granted = jsonl::require_bool(j, "bail_granted", f.case_id);
  if (const auto it = j.find("token_count"); it != j.end() && it->is_number_unsigned())
    f.token_count = it->get<std::size_t>();
  if (const auto it = j.find("split"); it != j.end() && !it->is_null()) {
    const auto s = it->is_string() ? parse_split(it->get<std::string>()) : std::nullopt;
    if (!s) throw IngestionError(f.case_id, "invalid split value");
    f.split = s;
  }
  return f;
}

std::vector<CaseFact> load_case_facts(const std::string& path) {
  std::vector<CaseFact> out;
  std::unordered_set<std::string> seen;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    CaseFact f = case_fact_from_json(j);
    if (!seen.insert(f.case_id).second) throw IngestionError(f.case_id, "duplicate case_id");
    out.push_back(std::move(f));
  });
  return out;
}

void save_case_facts(const std::string& path, const std::vector<CaseFact>& facts) {
  std::vector<json> rows;
  rows.reserve(facts.size());
  for (const auto& f : facts) rows.push_back(to_json(f));
  jsonl::write_all(path, rows);
}

std::vector<std::string> load_lexicon_file(const std::string& path) {
  return text::parse_keyword_list(text::read_file(path));
}

}  // namespace bailaudit
