#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small text utilities shared by preprocessing, tagging, embedding and parsing.
namespace bailaudit::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_valid_utf8(std::string_view s) noexcept;

// Whitespace-delimited chunks, punctuation attached.
std::vector<std::string_view> split_whitespace(std::string_view s);

// Maximal runs of word characters (ASCII alphanumerics, apostrophes inside a
// word, and any non-ASCII byte). Optionally lowercased.
std::vector<std::string> words(std::string_view s, bool lowercase = true);

// Sentences end at any terminator character followed by whitespace (or at end
// of text). Returned views keep their terminator and are trimmed.
std::vector<std::string_view> split_sentences(std::string_view s,
                                              std::string_view terminators = ".?!");

// Collapse runs of whitespace to a single space and trim.
std::string normalize_space(std::string_view s);

enum class WordMatch {
  kWhole,   // every word of the phrase must equal a text word
  kPrefix,  // the final phrase word may be a prefix of the text word ("oppose" ~ "opposed")
};

// Word-boundary phrase matcher. Phrases are split into words with words(); a
// phrase matches when its words appear consecutively in the text.
class PhraseMatcher {
 public:
  PhraseMatcher() = default;
  PhraseMatcher(const std::vector<std::string>& phrases, WordMatch mode,
                bool case_sensitive = false);

  bool empty() const noexcept { return phrases_.empty(); }

  // Index (into the constructor list) of the first phrase found, or -1.
  int first_match(std::string_view text) const;
  int first_match_words(const std::vector<std::string>& text_words) const;
  bool matches(std::string_view text) const { return first_match(text) >= 0; }

  // Every phrase index that occurs at least once.
  std::vector<int> all_matches(std::string_view text) const;

 private:
  bool phrase_at(const std::vector<std::string>& phrase,
                 const std::vector<std::string>& text_words, size_t pos) const;

  std::vector<std::vector<std::string>> phrases_;
  std::vector<int> source_index_;
  WordMatch mode_ = WordMatch::kWhole;
  bool case_sensitive_ = false;
};

// Reads a keyword list: one entry per line, '#' starts a comment, blank lines
// ignored, surrounding whitespace trimmed.
std::vector<std::string> parse_keyword_list(std::string_view content);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace bailaudit::text
