#include "bailaudit/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "bailaudit/errors.hpp"

namespace bailaudit::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

char lower_char(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower_char);
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += len;
  }
  return true;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> words(std::string_view s, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (is_word_char(c)) {
      cur.push_back(lowercase ? lower_char(c) : c);
    } else if (c == '\'' && !cur.empty() && i + 1 < s.size() && is_word_char(s[i + 1])) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string_view> split_sentences(std::string_view s, std::string_view terminators) {
  std::vector<std::string_view> out;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    if (e > b) out.push_back(s.substr(b, e - b));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (terminators.find(s[i]) != std::string_view::npos &&
        (i + 1 == s.size() || is_space(s[i + 1]))) {
      push(start, i + 1);
      start = i + 1;
    }
  }
  push(start, s.size());
  return out;
}

std::string normalize_space(std::string_view s) {
  std::string out;
  for (std::string_view tok : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

PhraseMatcher::PhraseMatcher(const std::vector<std::string>& phrases, WordMatch mode,
                             bool case_sensitive)
    : mode_(mode), case_sensitive_(case_sensitive) {
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    auto w = words(phrases[i], !case_sensitive);
    if (w.empty()) continue;
    phrases_.push_back(std::move(w));
    source_index_.push_back(static_cast<int>(i));
  }
}

bool PhraseMatcher::phrase_at(const std::vector<std::string>& phrase,
                              const std::vector<std::string>& text_words,
                              std::size_t pos) const {
  if (pos + phrase.size() > text_words.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    const std::string& want = phrase[k];
    const std::string& got = text_words[pos + k];
    const bool last = k + 1 == phrase.size();
    if (last && mode_ == WordMatch::kPrefix) {
      if (!got.starts_with(want)) return false;
    } else if (got != want) {
      return false;
    }
  }
  return true;
}

int PhraseMatcher::first_match_words(const std::vector<std::string>& text_words) const {
  for (std::size_t p = 0; p < phrases_.size(); ++p)
    for (std::size_t pos = 0; pos < text_words.size(); ++pos)
      if (phrase_at(phrases_[p], text_words, pos)) return source_index_[p];
  return -1;
}

int PhraseMatcher::first_match(std::string_view text) const {
  if (phrases_.empty()) return -1;
  return first_match_words(words(text, !case_sensitive_));
}

std::vector<int> PhraseMatcher::all_matches(std::string_view text) const {
  std::vector<int> out;
  if (phrases_.empty()) return out;
  const auto text_words = words(text, !case_sensitive_);
  for (std::size_t p = 0; p < phrases_.size(); ++p) {
    for (std::size_t pos = 0; pos < text_words.size(); ++pos) {
      if (phrase_at(phrases_[p], text_words, pos)) {
        out.push_back(source_index_[p]);
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> parse_keyword_list(std::string_view content) {
  std::vector<std::string> out;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError({}, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("short write to " + path);
}

}  // namespace bailaudit::text
