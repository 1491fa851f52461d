#include "doctest.h"

#include <cmath>
#include <random>

#include "bailaudit/errors.hpp"
#include "bailaudit/eval.hpp"

using namespace bailaudit;

namespace {

ConfusionMatrix cm(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
  return ConfusionMatrix{tp, fp, tn, fn};
}

PredictionRecord rec(Group g, bool truth, Decision d, Confidence c = Confidence::kAbsent,
                     Configuration cfg = Configuration::kAudit) {
  PredictionRecord r;
  r.image_id = "img";
  r.case_id = "case";
  r.configuration = cfg;
  r.decision = d;
  r.confidence = c;
  r.ground_truth = truth;
  r.group = g;
  return r;
}

std::vector<PredictionRecord> false_negatives(int high, int other, Confidence other_level) {
  std::vector<PredictionRecord> out;
  for (int i = 0; i < high; ++i) out.push_back(rec(Group::kBM, true, Decision::kNo, Confidence::kHigh));
  for (int i = 0; i < other; ++i) out.push_back(rec(Group::kBM, true, Decision::kNo, other_level));
  return out;
}

bool close_rel(double a, double b) {
  return a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TEST_CASE("worked metric values") {
  CHECK(lr_minus(cm(6, 2, 8, 2)).value() == 0.3125);
  CHECK(npv(cm(0, 0, 8, 2)).value() == 0.8);
  CHECK(accuracy(cm(3, 1, 2, 4)).value() == 0.5);
  CHECK(accuracy(cm(5, 0, 7, 0)).value() == 1.0);
  CHECK(accuracy(cm(4196, 0, 0, 5804)).value() == doctest::Approx(0.4196).epsilon(1e-15));
}

TEST_CASE("lr_minus edge cases") {
  CHECK(lr_minus(cm(5, 3, 4, 0)).value() == 0.0);
  CHECK(lr_minus(cm(7, 9, 9, 7)).value() == 1.0);
  CHECK(lr_minus(cm(1, 1, 1, 1)).value() == 1.0);
  CHECK_FALSE(lr_minus(cm(3, 4, 0, 2)).has_value());
  CHECK_FALSE(lr_minus(cm(3, 4, 0, 0)).has_value());
  CHECK_FALSE(lr_minus(cm(0, 4, 3, 0)).has_value());
  CHECK_FALSE(lr_minus(cm(3, 0, 0, 2)).has_value());
}

TEST_CASE("npv and accuracy edge cases") {
  CHECK(npv(cm(1, 1, 5, 0)).value() == 1.0);
  CHECK(npv(cm(1, 1, 0, 5)).value() == 0.0);
  CHECK_FALSE(npv(cm(4, 4, 0, 0)).has_value());
  CHECK_FALSE(accuracy(cm(0, 0, 0, 0)).has_value());
}

TEST_CASE("metric formulas agree with direct evaluation on random matrices") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<std::uint64_t> small(0, 6);
  std::uniform_int_distribution<std::uint64_t> large(0, 100000);
  int undefined_seen = 0;
  for (int i = 0; i < 1000; ++i) {
    auto& d = (i % 3 == 0) ? small : large;
    const ConfusionMatrix m = cm(d(rng), d(rng), d(rng), d(rng));
    const double tp = m.tp, fp = m.fp, tn = m.tn, fn = m.fn;
    const auto a = accuracy(m);
    const auto l = lr_minus(m);
    const auto n = npv(m);
    if (tp + fp + tn + fn == 0) {
      CHECK_FALSE(a.has_value());
    } else {
      REQUIRE(a.has_value());
      CHECK(close_rel(*a, (tp + tn) / (tp + fp + tn + fn)));
      CHECK((*a >= 0.0 && *a <= 1.0));
    }
    if (tn + fn == 0) {
      CHECK_FALSE(n.has_value());
    } else {
      REQUIRE(n.has_value());
      CHECK(close_rel(*n, tn / (tn + fn)));
      CHECK((*n >= 0.0 && *n <= 1.0));
    }
    if (tp + fn == 0 || tn + fp == 0 || tn == 0) {
      CHECK_FALSE(l.has_value());
      ++undefined_seen;
    } else {
      REQUIRE(l.has_value());
      const double fnr = fn / (tp + fn);
      const double tnr = tn / (tn + fp);
      CHECK(close_rel(*l, fnr / tnr));
      CHECK(*l >= 0.0);
      CHECK(std::isfinite(*l));
    }
  }
  CHECK(undefined_seen > 0);
}

TEST_CASE("confusion_by_group") {
  SUBCASE("empty input gives zero matrices") {
    const auto g = confusion_by_group({});
    for (Group grp : kAllGroups) CHECK(g[grp] == ConfusionMatrix{});
    CHECK(g.pooled == ConfusionMatrix{});
  }
  SUBCASE("two correct records per group") {
    std::vector<PredictionRecord> rs;
    for (Group grp : kAllGroups) {
      rs.push_back(rec(grp, true, Decision::kYes));
      rs.push_back(rec(grp, false, Decision::kNo));
    }
    const auto g = confusion_by_group(rs);
    for (Group grp : kAllGroups) {
      CHECK(g[grp].total() == 2);
      CHECK(g[grp] == cm(1, 0, 1, 0));
    }
    CHECK(g.pooled.total() == 8);
    CHECK(accuracy(g.pooled).value() == 1.0);
  }
  SUBCASE("tally oracle on synthetic records") {
    std::mt19937_64 rng(99);
    std::vector<PredictionRecord> rs;
    std::uint64_t tally[4][4] = {};  // group x {tp, fp, tn, fn}
    std::size_t unparseable = 0;
    for (int i = 0; i < 200; ++i) {
      const auto g = static_cast<Group>(rng() % 4);
      const bool truth = rng() % 2;
      const auto roll = rng() % 10;
      const Decision d = roll == 0 ? Decision::kUnparseable : (roll % 2 ? Decision::kYes : Decision::kNo);
      rs.push_back(rec(g, truth, d));
      if (d == Decision::kUnparseable) {
        ++unparseable;
        continue;
      }
      const int slot = d == Decision::kYes ? (truth ? 0 : 1) : (truth ? 3 : 2);
      ++tally[static_cast<int>(g)][slot];
    }
    const auto got = confusion_by_group(rs);
    ConfusionMatrix sum;
    for (Group grp : kAllGroups) {
      const auto* t = tally[static_cast<int>(grp)];
      CHECK(got[grp] == cm(t[0], t[1], t[2], t[3]));
      sum += got[grp];
    }
    CHECK(got.pooled == sum);
    CHECK(got.excluded_unparseable == unparseable);
    CHECK(got.pooled.total() + unparseable == 200);

    const auto deny = confusion_by_group(rs, EvalOptions{true});
    CHECK(deny.excluded_unparseable == 0);
    CHECK(deny.pooled.total() == 200);
    CHECK(deny.pooled.tp == got.pooled.tp);
    CHECK(deny.pooled.fp == got.pooled.fp);
  }
  SUBCASE("mixed configurations are rejected") {
    const std::vector<PredictionRecord> rs = {
        rec(Group::kWM, true, Decision::kYes),
        rec(Group::kWM, true, Decision::kYes, Confidence::kAbsent, Configuration::kAuditRag)};
    CHECK_THROWS_AS(confusion_by_group(rs), AggregationError);
    CHECK_THROWS_AS(evaluate(rs), AggregationError);
  }
}

TEST_CASE("high confidence false negative share") {
  CHECK(high_conf_fn_share(false_negatives(7, 3, Confidence::kLow)).value() == 0.7);
  CHECK(high_conf_fn_share(false_negatives(68, 32, Confidence::kMedium)).value() == doctest::Approx(0.68).epsilon(1e-15));
  CHECK_FALSE(high_conf_fn_share({}).has_value());

  // Records other than false negatives and FNs without a confidence do not count.
  auto rs = false_negatives(2, 2, Confidence::kLow);
  rs.push_back(rec(Group::kBM, true, Decision::kNo, Confidence::kAbsent));
  rs.push_back(rec(Group::kBM, false, Decision::kNo, Confidence::kHigh));
  rs.push_back(rec(Group::kBM, true, Decision::kYes, Confidence::kHigh));
  rs.push_back(rec(Group::kBM, true, Decision::kUnparseable, Confidence::kHigh));
  CHECK(high_conf_fn_share(rs).value() == 0.5);
  CHECK(high_conf_fn_share(rs, EvalOptions{true}).value() == 0.6);

  const std::vector<PredictionRecord> absent = {rec(Group::kWF, true, Decision::kNo)};
  CHECK_FALSE(high_conf_fn_share(absent).has_value());
}

TEST_CASE("evaluate fills per group metrics") {
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 6; ++i) rs.push_back(rec(Group::kWM, true, Decision::kYes));
  for (int i = 0; i < 2; ++i) rs.push_back(rec(Group::kWM, true, Decision::kNo, Confidence::kHigh));
  for (int i = 0; i < 8; ++i) rs.push_back(rec(Group::kWM, false, Decision::kNo));
  for (int i = 0; i < 2; ++i) rs.push_back(rec(Group::kWM, false, Decision::kYes));
  rs.push_back(rec(Group::kBF, false, Decision::kUnparseable));
  const auto m = evaluate(rs);
  CHECK(m.configuration == Configuration::kAudit);
  CHECK(m.record_count == 19);
  CHECK(m.excluded_unparseable == 1);
  CHECK(m[Group::kWM].lr_minus.value() == 0.3125);
  CHECK(m[Group::kWM].npv.value() == 0.8);
  CHECK(m[Group::kWM].high_conf_fn_share.value() == 1.0);
  CHECK_FALSE(m[Group::kBF].accuracy.has_value());
  CHECK_FALSE(m[Group::kBM].npv.has_value());
  CHECK(m.pooled.cm == m[Group::kWM].cm);
  CHECK_THROWS_AS(evaluate({}), AggregationError);
}

TEST_CASE("prediction records round-trip through JSON") {
  auto r = rec(Group::kBF, true, Decision::kNo, Confidence::kMedium, Configuration::kFtTypedRag);
  r.response = "No.\nConfidence: medium";
  r.attempts = 3;
  const auto back = prediction_from_json(to_json(r));
  CHECK(back.image_id == r.image_id);
  CHECK(back.configuration == r.configuration);
  CHECK(back.decision == r.decision);
  CHECK(back.confidence == r.confidence);
  CHECK(back.group == r.group);
  CHECK(back.response == r.response);
  CHECK(back.attempts == 3);
  auto j = to_json(r);
  j["group"] = "XX";
  CHECK_THROWS_AS(prediction_from_json(j), IngestionError);
}

namespace {

ConfigurationMetrics metrics_of(Configuration cfg, const ConfusionMatrix& each) {
  ConfigurationMetrics m;
  m.configuration = cfg;
  ConfusionMatrix pooled;
  for (Group g : kAllGroups) {
    m.groups[static_cast<std::size_t>(g)] = metrics_for(each, std::nullopt);
    pooled += each;
  }
  m.pooled = metrics_for(pooled, 0.25);
  return m;
}

}  // namespace

TEST_CASE("report layout") {
  SUBCASE("single configuration gives nine rows") {
    const auto r = make_report({metrics_of(Configuration::kAudit, cm(6, 2, 8, 2))});
    const auto rows = report_rows(r);
    REQUIRE(rows.size() == 9);
    CHECK(rows[0].label == "Overall accuracy");
    CHECK(rows[1].label == "LR- WM");
    CHECK(rows[4].label == "LR- BF");
    CHECK(rows[5].label == "NPV WM");
    CHECK(rows[8].label == "NPV BF");
    CHECK(rows[0].cells == std::vector<std::string>{"77.78%"});
    CHECK(rows[1].cells == std::vector<std::string>{"0.31"});
    CHECK(rows[5].cells == std::vector<std::string>{"80.00%"});
    const auto table = render_table(r);
    CHECK(table.rfind("Metric | AUDIT\nOverall accuracy | 77.78%\nLR- WM | 0.31\n", 0) == 0);
  }
  SUBCASE("five configurations come out in canonical order") {
    const auto r = make_report({metrics_of(Configuration::kFtTypedRag, cm(1, 1, 1, 1)),
                                metrics_of(Configuration::kAuditRag, cm(1, 1, 1, 1)),
                                metrics_of(Configuration::kFtVanilla, cm(1, 1, 1, 1)),
                                metrics_of(Configuration::kAudit, cm(1, 1, 1, 1)),
                                metrics_of(Configuration::kFtVanillaRag, cm(1, 1, 1, 1))});
    const auto j = to_json(r);
    CHECK(j["columns"] == nlohmann::json::array({"AUDIT", "AUDIT_RAG", "FT_VANILLA", "FT_VANILLA_RAG", "FT_TYPED_RAG"}));
    CHECK(j["rows"].size() == 9);
    for (const auto& row : report_rows(r)) CHECK(row.cells.size() == 5);
  }
  SUBCASE("undefined cells render as a dash and JSON as null") {
    const auto r = make_report({metrics_of(Configuration::kAudit, cm(3, 4, 0, 0))});
    const auto rows = report_rows(r);
    CHECK(rows[1].cells[0] == kUndefinedCell);
    CHECK(rows[5].cells[0] == kUndefinedCell);
    const auto text = to_json(r).dump();
    CHECK(text.find("NaN") == std::string::npos);
    CHECK(text.find("inf") == std::string::npos);
    CHECK(to_json(r)["metrics"][0]["groups"]["WM"]["lr_minus"].is_null());
  }
  SUBCASE("JSON round trip keeps metric values") {
    auto r = make_report({metrics_of(Configuration::kAudit, cm(6, 2, 8, 2)),
                          metrics_of(Configuration::kFtVanilla, cm(3, 4, 0, 0))});
    r.manifest_id = "abc";
    const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
    CHECK(back.manifest_id == "abc");
    REQUIRE(back.columns.size() == 2);
    CHECK(to_json(back) == to_json(r));
    CHECK(back.columns[0][Group::kBM].lr_minus == r.columns[0][Group::kBM].lr_minus);
    CHECK(back.columns[0].pooled.high_conf_fn_share.value() == 0.25);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(make_report({}), ValidationError);
    CHECK_THROWS_AS(make_report({metrics_of(Configuration::kAudit, cm(1, 1, 1, 1)),
                                 metrics_of(Configuration::kAudit, cm(1, 1, 1, 1))}),
                    ValidationError);
    CHECK_THROWS_AS(report_from_json({{"schema", "other"}}), IngestionError);
  }
}
