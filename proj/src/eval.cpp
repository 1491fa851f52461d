#include "bailaudit/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "bailaudit/errors.hpp"
#include "bailaudit/jsonl.hpp"

namespace bailaudit {

using nlohmann::json;

json to_json(const PredictionRecord& r) {
  return {{"image_id", r.image_id},
          {"case_id", r.case_id},
          {"configuration", to_string(r.configuration)},
          {"group", to_string(r.group)},
          {"decision", to_string(r.decision)},
          {"confidence", to_string(r.confidence)},
          {"ground_truth", r.ground_truth},
          {"response", r.response},
          {"attempts", r.attempts}};
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  r.image_id = jsonl::require_string(j, "image_id");
  r.case_id = jsonl::require_string(j, "case_id", r.image_id);
  const std::string id = r.image_id + "/" + r.case_id;
  const auto cfg = parse_configuration(jsonl::require_string(j, "configuration", id));
  const auto group = parse_group(jsonl::require_string(j, "group", id));
  const auto decision = parse_decision_name(jsonl::require_string(j, "decision", id));
  const auto confidence = parse_confidence_name(jsonl::require_string(j, "confidence", id));
  if (!cfg) throw IngestionError(id, "unknown configuration");
  if (!group) throw IngestionError(id, "unknown group");
  if (!decision) throw IngestionError(id, "unknown decision");
  if (!confidence) throw IngestionError(id, "unknown confidence");
  r.configuration = *cfg;
  r.group = *group;
  r.decision = *decision;
  r.confidence = *confidence;
  r.ground_truth = jsonl::require_bool(j, "ground_truth", id);
  r.response = j.value("response", "");
  r.attempts = j.value("attempts", 1);
  return r;
}

std::optional<double> accuracy(const ConfusionMatrix& cm) noexcept {
  const auto total = cm.total();
  if (total == 0) return std::nullopt;
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
}

std::optional<double> lr_minus(const ConfusionMatrix& cm) noexcept {
  const auto positives = cm.tp + cm.fn;
  const auto negatives = cm.tn + cm.fp;
  if (positives == 0 || negatives == 0 || cm.tn == 0) return std::nullopt;
  // (fn / positives) / (tn / negatives), rearranged to a single rounding step.
  return (static_cast<double>(cm.fn) * static_cast<double>(negatives)) /
         (static_cast<double>(positives) * static_cast<double>(cm.tn));
}

std::optional<double> npv(const ConfusionMatrix& cm) noexcept {
  const auto denials = cm.tn + cm.fn;
  if (denials == 0) return std::nullopt;
  return static_cast<double>(cm.tn) / static_cast<double>(denials);
}

namespace {

// nullopt for records that do not enter the metrics.
std::optional<bool> predicted_grant(const PredictionRecord& r, const EvalOptions& options) {
  switch (r.decision) {
    case Decision::kYes: return true;
    case Decision::kNo: return false;
    case Decision::kUnparseable:
      if (options.unparseable_as_deny) return false;
      return std::nullopt;
  }
  return std::nullopt;
}

void check_single_configuration(std::span<const PredictionRecord> records) {
  for (const auto& r : records)
    if (r.configuration != records.front().configuration)
      throw AggregationError("predictions mix configurations " +
                             std::string(to_string(records.front().configuration)) + " and " +
                             std::string(to_string(r.configuration)));
}

}  // namespace

GroupedConfusion confusion_by_group(std::span<const PredictionRecord> records,
                                    const EvalOptions& options) {
  check_single_configuration(records);
  GroupedConfusion out;
  for (const auto& r : records) {
    const auto grant = predicted_grant(r, options);
    if (!grant) {
      ++out.excluded_unparseable;
      continue;
    }
    auto& cm = out.groups[static_cast<std::size_t>(r.group)];
    if (*grant)
      ++(r.ground_truth ? cm.tp : cm.fp);
    else
      ++(r.ground_truth ? cm.fn : cm.tn);
  }
  for (const auto& g : out.groups) out.pooled += g;
  return out;
}

std::optional<double> high_conf_fn_share(std::span<const PredictionRecord> records,
                                         const EvalOptions& options) {
  std::size_t with_confidence = 0;
  std::size_t high = 0;
  for (const auto& r : records) {
    const auto grant = predicted_grant(r, options);
    if (!grant || *grant || !r.ground_truth) continue;
    if (r.confidence == Confidence::kAbsent) continue;
    ++with_confidence;
    if (r.confidence == Confidence::kHigh) ++high;
  }
  if (with_confidence == 0) return std::nullopt;
  return static_cast<double>(high) / static_cast<double>(with_confidence);
}

GroupMetrics metrics_for(const ConfusionMatrix& cm, std::optional<double> hc_share) {
  return GroupMetrics{cm, accuracy(cm), lr_minus(cm), npv(cm), hc_share};
}

ConfigurationMetrics evaluate(std::span<const PredictionRecord> records,
                              const EvalOptions& options) {
  if (records.empty()) throw AggregationError("no prediction records to evaluate");
  const auto grouped = confusion_by_group(records, options);
  ConfigurationMetrics m;
  m.configuration = records.front().configuration;
  m.record_count = records.size();
  m.excluded_unparseable = grouped.excluded_unparseable;
  m.unparseable_as_deny = options.unparseable_as_deny;
  for (Group g : kAllGroups) {
    std::vector<PredictionRecord> in_group;
    for (const auto& r : records)
      if (r.group == g) in_group.push_back(r);
    m.groups[static_cast<std::size_t>(g)] = metrics_for(grouped[g], high_conf_fn_share(in_group, options));
  }
  m.pooled = metrics_for(grouped.pooled, high_conf_fn_share(records, options));
  return m;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

json group_json(const GroupMetrics& g) {
  return {{"tp", g.cm.tp},
          {"fp", g.cm.fp},
          {"tn", g.cm.tn},
          {"fn", g.cm.fn},
          {"accuracy", optional_number(g.accuracy)},
          {"lr_minus", optional_number(g.lr_minus)},
          {"npv", optional_number(g.npv)},
          {"high_conf_fn_share", optional_number(g.high_conf_fn_share)}};
}

GroupMetrics group_from_json(const json& j) {
  GroupMetrics g;
  g.cm.tp = j.at("tp").get<std::uint64_t>();
  g.cm.fp = j.at("fp").get<std::uint64_t>();
  g.cm.tn = j.at("tn").get<std::uint64_t>();
  g.cm.fn = j.at("fn").get<std::uint64_t>();
  g.accuracy = number_or_null(j, "accuracy");
  g.lr_minus = number_or_null(j, "lr_minus");
  g.npv = number_or_null(j, "npv");
  g.high_conf_fn_share = number_or_null(j, "high_conf_fn_share");
  return g;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return kUndefinedCell;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

std::string two_decimals(const std::optional<double>& v) {
  if (!v) return kUndefinedCell;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace

json to_json(const ConfigurationMetrics& m) {
  json groups = json::object();
  for (Group g : kAllGroups) groups[std::string(to_string(g))] = group_json(m[g]);
  return {{"schema", "bailaudit.metrics/1"},
          {"configuration", to_string(m.configuration)},
          {"record_count", m.record_count},
          {"excluded_unparseable", m.excluded_unparseable},
          {"error_count", m.error_count},
          {"unparseable_as_deny", m.unparseable_as_deny},
          {"source_manifest_id", m.source_manifest_id},
          {"pooled", group_json(m.pooled)},
          {"groups", groups}};
}

ConfigurationMetrics metrics_from_json(const json& j) {
  if (j.value("schema", "") != "bailaudit.metrics/1")
    throw IngestionError({}, "not a bailaudit.metrics/1 document");
  ConfigurationMetrics m;
  const auto cfg = parse_configuration(j.at("configuration").get<std::string>());
  if (!cfg) throw IngestionError({}, "metrics document has an unknown configuration");
  m.configuration = *cfg;
  m.record_count = j.value("record_count", std::size_t{0});
  m.excluded_unparseable = j.value("excluded_unparseable", std::size_t{0});
  m.error_count = j.value("error_count", std::size_t{0});
  m.unparseable_as_deny = j.value("unparseable_as_deny", false);
  m.source_manifest_id = j.value("source_manifest_id", "");
  m.pooled = group_from_json(j.at("pooled"));
  for (Group g : kAllGroups)
    m.groups[static_cast<std::size_t>(g)] = group_from_json(j.at("groups").at(std::string(to_string(g))));
  return m;
}

Report make_report(std::vector<ConfigurationMetrics> metrics) {
  if (metrics.empty()) throw ValidationError("a report needs at least one configuration");
  std::set<Configuration> seen;
  for (const auto& m : metrics)
    if (!seen.insert(m.configuration).second)
      throw ValidationError("configuration " + std::string(to_string(m.configuration)) +
                            " appears more than once");
  std::sort(metrics.begin(), metrics.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.configuration) < static_cast<int>(b.configuration);
  });
  return Report{std::move(metrics), {}};
}

std::vector<ReportRow> report_rows(const Report& report) {
  std::vector<ReportRow> rows;
  ReportRow acc{"Overall accuracy", {}};
  for (const auto& c : report.columns) acc.cells.push_back(percent(c.pooled.accuracy));
  rows.push_back(std::move(acc));
  for (Group g : kAllGroups) {
    ReportRow r{"LR- " + std::string(to_string(g)), {}};
    for (const auto& c : report.columns) r.cells.push_back(two_decimals(c[g].lr_minus));
    rows.push_back(std::move(r));
  }
  for (Group g : kAllGroups) {
    ReportRow r{"NPV " + std::string(to_string(g)), {}};
    for (const auto& c : report.columns) r.cells.push_back(percent(c[g].npv));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_table(const Report& report) {
  std::string out = "Metric";
  for (const auto& c : report.columns) out += " | " + std::string(to_string(c.configuration));
  out += "\n";
  for (const auto& row : report_rows(report)) {
    out += row.label;
    for (const auto& cell : row.cells) out += " | " + cell;
    out += "\n";
  }
  return out;
}

json to_json(const Report& report) {
  json columns = json::array();
  json metrics = json::array();
  for (const auto& c : report.columns) {
    columns.push_back(to_string(c.configuration));
    metrics.push_back(to_json(c));
  }
  json rows = json::array();
  for (const auto& row : report_rows(report)) rows.push_back({{"label", row.label}, {"cells", row.cells}});
  return {{"schema", "bailaudit.report/1"},
          {"manifest_id", report.manifest_id},
          {"columns", columns},
          {"rows", rows},
          {"metrics", metrics}};
}

Report report_from_json(const json& j) {
  if (j.value("schema", "") != "bailaudit.report/1")
    throw IngestionError({}, "not a bailaudit.report/1 document");
  std::vector<ConfigurationMetrics> metrics;
  for (const auto& m : j.at("metrics")) metrics.push_back(metrics_from_json(m));
  Report r = make_report(std::move(metrics));
  r.manifest_id = j.value("manifest_id", "");
  return r;
}

}  // namespace bailaudit
