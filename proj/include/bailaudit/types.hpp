#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace bailaudit {

enum class Split { kTrain, kTest };

// The four race x gender strata the audit reports on.
enum class Group { kWM, kBM, kWF, kBF };

inline constexpr std::array<Group, 4> kAllGroups = {Group::kWM, Group::kBM,
                                                    Group::kWF, Group::kBF};

// Evaluation configurations, in report column order.
enum class Configuration {
  kAudit,
  kAuditRag,
  kFtVanilla,
  kFtVanillaRag,
  kFtTypedRag,
};

inline constexpr std::array<Configuration, 5> kAllConfigurations = {
    Configuration::kAudit, Configuration::kAuditRag, Configuration::kFtVanilla,
    Configuration::kFtVanillaRag, Configuration::kFtTypedRag};

enum class Decision { kYes, kNo, kUnparseable };
enum class Confidence { kHigh, kMedium, kLow, kAbsent };

std::string_view to_string(Split s) noexcept;
std::string_view to_string(Group g) noexcept;
std::string_view to_string(Configuration c) noexcept;
std::string_view to_string(Decision d) noexcept;
std::string_view to_string(Confidence c) noexcept;

// CLI spelling of a configuration, e.g. "audit-rag".
std::string_view cli_name(Configuration c) noexcept;

std::optional<Split> parse_split(std::string_view s) noexcept;
std::optional<Group> parse_group(std::string_view s) noexcept;
// Accepts both the enum spelling ("AUDIT_RAG") and the CLI one ("audit-rag").
std::optional<Configuration> parse_configuration(std::string_view s) noexcept;
std::optional<Decision> parse_decision_name(std::string_view s) noexcept;
std::optional<Confidence> parse_confidence_name(std::string_view s) noexcept;

constexpr bool uses_retrieval(Configuration c) noexcept {
  return c == Configuration::kAuditRag || c == Configuration::kFtVanillaRag ||
         c == Configuration::kFtTypedRag;
}

constexpr bool uses_typed_facts(Configuration c) noexcept {
  return c == Configuration::kFtTypedRag;
}

}  // namespace bailaudit
