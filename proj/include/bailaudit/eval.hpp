#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bailaudit/types.hpp"
#include "json.hpp"

namespace bailaudit {

struct PredictionRecord {
  std::string image_id;
  std::string case_id;
  Configuration configuration = Configuration::kAudit;
  Decision decision = Decision::kUnparseable;
  Confidence confidence = Confidence::kAbsent;
  bool ground_truth = false;  // bail granted
  Group group = Group::kWM;
  std::string response;
  int attempts = 1;
};

nlohmann::json to_json(const PredictionRecord& r);
PredictionRecord prediction_from_json(const nlohmann::json& j);

// Positive class is "bail granted".
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp; fp += o.fp; tn += o.tn; fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Each returns nullopt exactly when its denominator is zero.
std::optional<double> accuracy(const ConfusionMatrix& cm) noexcept;
// FNR / TNR. Undefined when either rate's denominator is zero or TNR is zero.
std::optional<double> lr_minus(const ConfusionMatrix& cm) noexcept;
std::optional<double> npv(const ConfusionMatrix& cm) noexcept;

struct EvalOptions {
  // Count unparseable decisions as denials instead of excluding them.
  bool unparseable_as_deny = false;
};

struct GroupedConfusion {
  std::array<ConfusionMatrix, 4> groups{};  // indexed by Group
  ConfusionMatrix pooled;
  std::size_t excluded_unparseable = 0;

  const ConfusionMatrix& operator[](Group g) const noexcept {
    return groups[static_cast<std::size_t>(g)];
  }
};

// Throws AggregationError when records mix configurations.
GroupedConfusion confusion_by_group(std::span<const PredictionRecord> records,
                                    const EvalOptions& options = {});

// FN records with high confidence over FN records with any parsed confidence.
std::optional<double> high_conf_fn_share(std::span<const PredictionRecord> records,
                                         const EvalOptions& options = {});

struct GroupMetrics {
  ConfusionMatrix cm;
  std::optional<double> accuracy;
  std::optional<double> lr_minus;
  std::optional<double> npv;
  std::optional<double> high_conf_fn_share;
};

GroupMetrics metrics_for(const ConfusionMatrix& cm, std::optional<double> hc_share);

struct ConfigurationMetrics {
  Configuration configuration = Configuration::kAudit;
  std::array<GroupMetrics, 4> groups{};
  GroupMetrics pooled;
  std::size_t record_count = 0;
  std::size_t excluded_unparseable = 0;
  std::size_t error_count = 0;
  bool unparseable_as_deny = false;
  std::string source_manifest_id;

  const GroupMetrics& operator[](Group g) const noexcept {
    return groups[static_cast<std::size_t>(g)];
  }
};

// Throws AggregationError on mixed configurations or an empty record set
// (the configuration would be unknown).
ConfigurationMetrics evaluate(std::span<const PredictionRecord> records,
                              const EvalOptions& options = {});

// Metrics JSON, schema "bailaudit.metrics/1". Undefined values are null.
nlohmann::json to_json(const ConfigurationMetrics& m);
ConfigurationMetrics metrics_from_json(const nlohmann::json& j);

// Report over several configurations: columns in canonical configuration
// order, rows = overall accuracy, then LR- and NPV for WM, BM, WF, BF.
struct Report {
  std::vector<ConfigurationMetrics> columns;
  std::string manifest_id;
};

// Throws ValidationError when empty or when a configuration appears twice.
Report make_report(std::vector<ConfigurationMetrics> metrics);

struct ReportRow {
  std::string label;
  std::vector<std::string> cells;
};

inline constexpr const char* kUndefinedCell = "—";

std::vector<ReportRow> report_rows(const Report& report);
// '|' delimited table with a header row; accuracy and NPV as percentages, LR-
// to two decimals.
std::string render_table(const Report& report);
nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

}  // namespace bailaudit
