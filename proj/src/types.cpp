#include "bailaudit/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace bailaudit {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Split s) noexcept {
  return s == Split::kTrain ? "train" : "test";
}

std::string_view to_string(Group g) noexcept {
  switch (g) {
    case Group::kWM: return "WM";
    case Group::kBM: return "BM";
    case Group::kWF: return "WF";
    case Group::kBF: return "BF";
  }
  return "?";
}

std::string_view to_string(Configuration c) noexcept {
  switch (c) {
    case Configuration::kAudit: return "AUDIT";
    case Configuration::kAuditRag: return "AUDIT_RAG";
    case Configuration::kFtVanilla: return "FT_VANILLA";
    case Configuration::kFtVanillaRag: return "FT_VANILLA_RAG";
    case Configuration::kFtTypedRag: return "FT_TYPED_RAG";
  }
  return "?";
}

std::string_view cli_name(Configuration c) noexcept {
  switch (c) {
    case Configuration::kAudit: return "audit";
    case Configuration::kAuditRag: return "audit-rag";
    case Configuration::kFtVanilla: return "ft-vanilla";
    case Configuration::kFtVanillaRag: return "ft-vanilla-rag";
    case Configuration::kFtTypedRag: return "ft-typed-rag";
  }
  return "?";
}

std::string_view to_string(Decision d) noexcept {
  switch (d) {
    case Decision::kYes: return "yes";
    case Decision::kNo: return "no";
    case Decision::kUnparseable: return "unparseable";
  }
  return "?";
}

std::string_view to_string(Confidence c) noexcept {
  switch (c) {
    case Confidence::kHigh: return "high";
    case Confidence::kMedium: return "medium";
    case Confidence::kLow: return "low";
    case Confidence::kAbsent: return "absent";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

std::optional<Group> parse_group(std::string_view s) noexcept {
  for (Group g : kAllGroups)
    if (to_string(g) == s) return g;
  return std::nullopt;
}

std::optional<Configuration> parse_configuration(std::string_view s) noexcept {
  for (Configuration c : kAllConfigurations)
    if (to_string(c) == s || cli_name(c) == s) return c;
  return std::nullopt;
}

std::optional<Decision> parse_decision_name(std::string_view s) noexcept {
  const std::string l = lower(s);
  if (l == "yes") return Decision::kYes;
  if (l == "no") return Decision::kNo;
  if (l == "unparseable") return Decision::kUnparseable;
  return std::nullopt;
}

std::optional<Confidence> parse_confidence_name(std::string_view s) noexcept {
  const std::string l = lower(s);
  if (l == "high") return Confidence::kHigh;
  if (l == "medium") return Confidence::kMedium;
  if (l == "low") return Confidence::kLow;
  if (l == "absent") return Confidence::kAbsent;
  return std::nullopt;
}

}  // namespace bailaudit
