#include "bailaudit/prompting.hpp"

#include <cctype>
#include <sstream>

#include "bailaudit/errors.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

namespace {

const char* const kRequiredSections[] = {"system",         "rag_system", "precedent",
                                         "outcome_granted", "outcome_denied", "user",
                                         "question",       "confidence_question"};

void require_placeholder(const std::string& section, const std::string& body, const char* name) {
  if (body.find(std::string("{") + name + "}") == std::string::npos)
    throw ConfigError("template section '" + section + "' lacks {" + name + "}");
}

// Single left-to-right pass; substituted text is never rescanned.
std::string render(const std::string& tmpl,
                   std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string_view name(tmpl.data() + i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (key == name) {
            out.append(value);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace

TemplateSet TemplateSet::parse(std::string_view content) {
  TemplateSet set;
  set.hash_ = sha256_hex(content);
  std::istringstream in{std::string(content)};
  std::string line;
  std::string current;
  std::string body;
  bool in_section = false;
  auto finish = [&] {
    if (!in_section) return;
    if (!body.empty() && body.back() == '\n') body.pop_back();
    if (set.sections_.contains(current))
      throw ConfigError("duplicate template section '" + current + "'");
    set.sections_[current] = body;
    body.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("=== ") && line.ends_with(" ===") && line.size() > 8) {
      finish();
      current = text::trim(std::string_view(line).substr(4, line.size() - 8));
      in_section = true;
      continue;
    }
    if (!in_section) {
      if (!text::trim(line).empty()) throw ConfigError("template text before the first section header");
      continue;
    }
    body += line;
    body.push_back('\n');
  }
  finish();

  for (const char* name : kRequiredSections)
    if (!set.sections_.contains(name))
      throw ConfigError(std::string("template set is missing section '") + name + "'");
  require_placeholder("user", set.sections_["user"], "CASE_FACT");
  require_placeholder("user", set.sections_["user"], "QUESTION");
  require_placeholder("rag_system", set.sections_["rag_system"], "PRECEDENTS");
  require_placeholder("precedent", set.sections_["precedent"], "RANK");
  require_placeholder("precedent", set.sections_["precedent"], "PRECEDENT");

  set.version_ = "unversioned";
  if (const auto it = set.sections_.find("meta"); it != set.sections_.end()) {
    std::istringstream meta(it->second);
    while (std::getline(meta, line))
      if (line.starts_with("version:")) set.version_ = text::trim(line.substr(8));
  }
  return set;
}

TemplateSet TemplateSet::load(const std::string& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const IngestionError&) {
    throw ConfigError("cannot read template file " + path);
  }
  if (!text::is_valid_utf8(content)) throw ConfigError(path + " is not valid UTF-8");
  return parse(content);
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = parse(kBuiltinTemplates);
  return set;
}

const std::string& TemplateSet::section(const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) throw ConfigError("no template section '" + name + "'");
  return it->second;
}

std::string TemplateSet::precedent_delimiter() const {
  const std::string& p = section("precedent");
  return p.substr(0, p.find("{RANK}"));
}

PromptBundle build_prompt(Configuration cfg, const PromptInput& input,
                          const std::optional<std::vector<PrecedentText>>& precedents,
                          const TemplateSet& templates, const PromptOptions& options) {
  const bool rag = uses_retrieval(cfg);
  if (rag && (!precedents || precedents->empty()))
    throw AssemblyError(std::string(to_string(cfg)) + " needs retrieved precedents for case " +
                        input.case_id);
  if (!rag && precedents)
    throw AssemblyError(std::string(to_string(cfg)) + " does not take precedents");
  if (uses_typed_facts(cfg) && !input.typed_text)
    throw AssemblyError(std::string(to_string(cfg)) + " needs the typed rendering of case " +
                        input.case_id);
  if (!uses_typed_facts(cfg) && input.typed_text)
    throw AssemblyError(std::string(to_string(cfg)) + " does not use typed facts");

  PromptBundle bundle;
  bundle.image_ref = input.image_ref;
  bundle.asks_confidence = options.ask_confidence;

  if (rag) {
    std::string block;
    for (std::size_t i = 0; i < precedents->size(); ++i) {
      const auto& p = (*precedents)[i];
      const std::string rank = std::to_string(i + 1);
      const std::string outcome =
          options.precedent_facts_only
              ? std::string()
              : templates.section(p.bail_granted ? "outcome_granted" : "outcome_denied");
      if (i) block += "\n\n";
      block += render(templates.section("precedent"),
                      {{"RANK", rank}, {"PRECEDENT", p.text}, {"OUTCOME", outcome}});
    }
    bundle.system_text = render(templates.section("rag_system"), {{"PRECEDENTS", block}});
  } else {
    bundle.system_text = templates.section("system");
  }

  std::string question = templates.section("question");
  if (options.ask_confidence) question += "\n" + templates.section("confidence_question");
  const std::string& fact = input.typed_text ? *input.typed_text : input.fact_text;
  bundle.user_text = render(templates.section("user"), {{"CASE_FACT", fact}, {"QUESTION", question}});
  return bundle;
}

DecisionRules DecisionRules::parse(std::string_view content) {
  DecisionRules rules;
  rules.hash_ = sha256_hex(content);
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.starts_with("version:")) {
      rules.version_ = text::trim(t.substr(8));
      continue;
    }
    const auto space = t.find_first_of(" \t");
    if (space == std::string::npos)
      throw ConfigError("parser rule line " + std::to_string(line_no) + " has no pattern");
    const auto decision = parse_decision_name(t.substr(0, space));
    if (!decision || *decision == Decision::kUnparseable)
      throw ConfigError("parser rule line " + std::to_string(line_no) + " must start with yes or no");
    const std::string pattern = text::trim(t.substr(space));
    try {
      rules.rules_.push_back(Rule{*decision, pattern, std::regex(pattern, std::regex::ECMAScript)});
    } catch (const std::regex_error& e) {
      throw ConfigError("parser rule line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rules.version_.empty()) throw ConfigError("parser rule file lacks a version line");
  if (rules.rules_.empty()) throw ConfigError("parser rule file has no rules");
  return rules;
}

DecisionRules DecisionRules::load(const std::string& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const IngestionError&) {
    throw ConfigError("cannot read parser rule file " + path);
  }
  return parse(content);
}

const DecisionRules& DecisionRules::builtin() {
  static const DecisionRules rules = parse(kBuiltinDecisionRules);
  return rules;
}

std::string normalize_response(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u))
      out.push_back(static_cast<char>(std::tolower(u)));
    else
      out.push_back(' ');
  }
  return text::normalize_space(out);
}

Decision DecisionRules::apply(std::string_view raw) const {
  const std::string norm = normalize_response(raw);
  for (const auto& rule : rules_)
    if (std::regex_search(norm, rule.re)) return rule.decision;
  return Decision::kUnparseable;
}

Decision parse_decision(std::string_view raw, const DecisionRules& rules) {
  try {
    return rules.apply(raw);
  } catch (...) {
    // std::regex can throw on pathological input (e.g. stack exhaustion).
    return Decision::kUnparseable;
  }
}

Confidence parse_confidence(std::string_view raw) {
  std::size_t boundary = std::string_view::npos;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '\n' ||
        ((c == '.' || c == '?' || c == '!') &&
         (i + 1 == raw.size() || std::isspace(static_cast<unsigned char>(raw[i + 1]))))) {
      boundary = i + 1;
      break;
    }
  }
  std::string_view scope = raw;
  if (boundary != std::string_view::npos && !text::trim(raw.substr(boundary)).empty())
    scope = raw.substr(boundary);
  for (const auto& w : text::words(scope)) {
    if (w == "high") return Confidence::kHigh;
    if (w == "medium") return Confidence::kMedium;
    if (w == "low") return Confidence::kLow;
  }
  return Confidence::kAbsent;
}

}  // namespace bailaudit
