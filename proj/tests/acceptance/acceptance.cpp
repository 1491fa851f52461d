// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "bailaudit/cli.hpp"
#include "bailaudit/corpus.hpp"
#include "bailaudit/eval.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/kernels/l2.hpp"
#include "bailaudit/offense.hpp"
#include "bailaudit/pairing.hpp"
#include "bailaudit/retrieval.hpp"
#include "bailaudit/text.hpp"
#include "support.hpp"

using namespace bailaudit;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

bool close_rel(double a, double b, double tol) {
  return a == b || std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::uint64_t> small(0, 5);
  std::uniform_int_distribution<std::uint64_t> large(0, 1000000);
  std::size_t undefined = 0;
  for (int i = 0; i < 1000; ++i) {
    auto& d = i % 4 == 0 ? small : large;
    const ConfusionMatrix cm{d(rng), d(rng), d(rng), d(rng)};
    const double tp = cm.tp, fp = cm.fp, tn = cm.tn, fn = cm.fn;
    const auto acc = accuracy(cm);
    const auto lr = lr_minus(cm);
    const auto nv = npv(cm);
    for (const auto& v : {acc, lr, nv})
      if (v) o.expect(std::isfinite(*v), "non-finite metric value");

    if (tp + fp + tn + fn == 0) {
      o.expect(!acc, "accuracy defined on an empty matrix");
      ++undefined;
    } else {
      o.expect(acc && close_rel(*acc, (tp + tn) / (tp + fp + tn + fn), 1e-12), "accuracy mismatch");
    }
    if (tn + fn == 0) {
      o.expect(!nv, "npv defined with no denials");
      ++undefined;
    } else {
      o.expect(nv && close_rel(*nv, tn / (tn + fn), 1e-12), "npv mismatch");
    }
    if (tp + fn == 0 || tn + fp == 0 || tn == 0) {
      o.expect(!lr, "lr_minus defined with a zero denominator");
      ++undefined;
    } else {
      const double fnr = fn / (tp + fn);
      const double tnr = tn / (tn + fp);
      o.expect(lr && close_rel(*lr, fnr / tnr, 1e-12), "lr_minus mismatch");
    }
  }
  o.expect(undefined > 0, "no undefined case was exercised");
  if (o.pass) o.detail = "1000 matrices, " + std::to_string(undefined) + " undefined values flagged";
  return o;
}

Outcome worked_values() {
  Outcome o;
  const auto lr = lr_minus(ConfusionMatrix{6, 2, 8, 2});
  const auto nv = npv(ConfusionMatrix{0, 0, 8, 2});
  o.expect(lr && *lr == 0.3125, "lr_minus(tp=6,fn=2,tn=8,fp=2) != 0.3125");
  o.expect(nv && *nv == 0.8, "npv(tn=8,fn=2) != 0.8");
  if (o.pass) o.detail = "lr_minus=0.3125 npv=0.8";
  return o;
}

Outcome retrieval_exactness() {
  Outcome o;
  constexpr std::size_t kDim = 1024;
  constexpr std::size_t kRows = 500;
  std::mt19937_64 rng(7);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  PrecedentIndex index("synthetic/1024", kDim, IndexTextKind::kFact);
  std::vector<float> v(kDim);
  for (std::size_t r = 0; r < kRows; ++r) {
    for (auto& x : v) x = normal(rng);
    char id[16];
    std::snprintf(id, sizeof id, "p%03zu", r);
    index.add(IndexEntry{id, r % 2 == 0, ""}, v);
  }

  auto oracle = [&](std::span<const float> q) {
    std::vector<std::pair<long double, std::string>> all;
    for (std::size_t r = 0; r < kRows; ++r) {
      const auto row = index.vector(r);
      long double s = 0;
      for (std::size_t d = 0; d < kDim; ++d) {
        const long double diff = static_cast<long double>(q[d]) - row[d];
        s += diff * diff;
      }
      all.emplace_back(s, index.entries()[r].case_id);
    }
    std::sort(all.begin(), all.end());
    all.resize(3);
    return all;
  };

  std::size_t compared = 0;
  for (const auto kernel : kernels::available_l2_kernels()) {
    kernels::set_active_l2_kernel(kernel);
    std::mt19937_64 qrng(99);
    for (int qi = 0; qi < 50; ++qi) {
      std::vector<float> q(kDim);
      for (auto& x : q) x = normal(qrng);
      const auto got = retrieve_top_k(index, q, 3);
      const auto want = oracle(q);
      o.expect(got.ranked.size() == 3, "wrong result count");
      for (std::size_t i = 0; i < std::min<std::size_t>(3, got.ranked.size()); ++i) {
        const double wd = std::sqrt(static_cast<double>(want[i].first));
        o.expect(got.ranked[i].case_id == want[i].second, "ranked ids differ from linear scan");
        o.expect(std::abs(got.ranked[i].distance - wd) <= 1e-9 * std::max(1.0, wd),
                 "distance differs from linear scan");
        ++compared;
      }
    }
    const auto self = retrieve_top_k(index, index.vector(123), 3);
    o.expect(!self.ranked.empty() && self.ranked[0].case_id == "p123" && self.ranked[0].distance == 0.0,
             "self query does not rank first at distance 0");
  }
  const auto kernels_list = kernels::available_l2_kernels();
  kernels::set_active_l2_kernel(kernels_list.back());
  if (o.pass) {
    o.detail = std::to_string(compared) + " neighbours compared across kernels:";
    for (auto k : kernels_list) o.detail += " " + std::string(kernels::to_string(k));
  }
  return o;
}

Outcome pairing_cardinality() {
  Outcome o;
  std::vector<ImageRecord> roster;
  const std::pair<Race, Gender> strata[] = {{Race::kWhite, Gender::kMale},
                                            {Race::kBlack, Gender::kMale},
                                            {Race::kWhite, Gender::kFemale},
                                            {Race::kBlack, Gender::kFemale}};
  for (int s = 0; s < 4; ++s)
    for (int i = 0; i < 10; ++i) {
      const std::string id = "img" + std::to_string(s) + "_" + std::to_string(i);
      roster.push_back({id, id + ".png", strata[s].first, strata[s].second, {}});
    }
  std::vector<CaseFact> facts;
  for (int i = 0; i < 30; ++i)
    facts.push_back({"f" + std::to_string(i), "text", 60, i % 2 == 0, i < 24 ? Split::kTrain : Split::kTest});

  const auto pairs = generate_pairs(roster, facts);
  std::size_t total = 0, train = 0, test = 0;
  std::array<std::size_t, 4> per_group{};
  for (const Pair& p : pairs) {
    ++total;
    (p.split == Split::kTrain ? train : test) += 1;
    ++per_group[static_cast<std::size_t>(p.group)];
  }
  o.expect(pairs.size() == 1200 && total == 1200, "pair count != 1200");
  o.expect(train == 960, "train pairs != 960");
  o.expect(test == 240, "test pairs != 240");
  for (auto n : per_group) o.expect(n == 300, "a group does not have 300 pairs");
  if (o.pass) o.detail = "1200 pairs, 960 train / 240 test, 300 per group";
  return o;
}

std::string numbered_words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " word" : "word") + std::to_string(i);
  return out;
}

// Whole-word-prefix scan, independent of the library matcher.
bool mentions_keyword(const std::string& text, const std::vector<std::string>& keywords) {
  const std::string lower = text::to_lower(text);
  for (const auto& kw : keywords) {
    std::string pattern = "(^|[^a-z0-9])";
    for (char c : text::to_lower(kw)) pattern += c == ' ' ? std::string("[^a-z0-9]+") : std::string(1, c);
    if (std::regex_search(lower, std::regex(pattern))) return true;
  }
  return false;
}

Outcome preprocessing_gate() {
  Outcome o;
  const std::string data = cli::default_data_dir();
  PreprocessConfig cfg;
  cfg.legal_stopwords = load_lexicon_file(data + "/lexicons/legal_stopwords.txt");
  cfg.argument_keywords = load_lexicon_file(data + "/lexicons/argument_keywords.txt");

  const std::string pad = "The learned counsel for the suspect argued that bail be granted. The plea was opposed.";
  const auto short_case = preprocess_case({"c49", "The suspect " + numbered_words(48) + ". " + pad, true}, cfg);
  const auto long_case = preprocess_case({"c50", "The suspect " + numbered_words(49) + ". " + pad, true}, cfg);
  o.expect(std::holds_alternative<Dropped>(short_case) && std::get<Dropped>(short_case).token_count == 49,
           "49-token fact was not dropped");
  o.expect(std::holds_alternative<CaseFact>(long_case) && std::get<CaseFact>(long_case).token_count == 50,
           "50-token fact was not retained");

  std::size_t retained = 0;
  for (const auto& raw : load_raw_cases(testsupport::source_path("data/fixtures/cases60.jsonl"))) {
    const auto r = preprocess_case(raw, cfg);
    if (const auto* f = std::get_if<CaseFact>(&r)) {
      ++retained;
      o.expect(!mentions_keyword(f->text, cfg.argument_keywords),
               "retained fact " + f->case_id + " mentions an argument keyword");
    }
  }
  if (std::holds_alternative<CaseFact>(long_case))
    o.expect(!mentions_keyword(std::get<CaseFact>(long_case).text, cfg.argument_keywords),
             "boundary fact mentions an argument keyword");
  if (o.pass) o.detail = "49 dropped, 50 retained, " + std::to_string(retained) + " fixture facts keyword-free";
  return o;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "bailaudit");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

Outcome end_to_end_mock_audit() {
  Outcome o;
  testsupport::TempDir dir;
  const std::string fixtures = testsupport::source_path("data/fixtures");
  const std::string facts = dir.file("facts.jsonl");
  const std::string pairs = dir.file("pairs.jsonl");
  const std::string preds = dir.file("audit.jsonl");
  const std::string metrics = dir.file("audit.metrics.json");
  const std::string report = dir.file("report.json");

  o.expect(run_cli({"ingest", "--input", fixtures + "/cases60.jsonl", "--out", facts, "--seed", "12"}) == 0,
           "ingest failed");
  o.expect(run_cli({"pair", "--roster", fixtures + "/roster.csv", "--facts", facts, "--out", pairs}) == 0,
           "pair failed");
  o.expect(run_cli({"predict", "--config", "audit", "--pairs", pairs, "--facts", facts, "--roster",
                    fixtures + "/roster.csv", "--backend", "mock", "--mock-rules",
                    fixtures + "/mock_rules.json", "--out", preds}) == 0,
           "predict failed");
  o.expect(run_cli({"evaluate", "--predictions", preds, "--out", metrics}) == 0, "evaluate failed");
  o.expect(run_cli({"report", "--metrics", metrics, "--out", report}) == 0, "report failed");
  if (!o.pass) return o;

  const json expected = json::parse(text::read_file(testsupport::source_path("tests/oracles/e2e_expected.json")));
  const Report r = report_from_json(json::parse(text::read_file(report)));
  o.expect(r.columns.size() == 1 && r.columns[0].configuration == Configuration::kAudit, "report columns");
  const ConfigurationMetrics& m = r.columns.at(0);

  auto compare = [&](const GroupMetrics& got, const json& want, const std::string& label) {
    const json& cm = want["cm"];
    o.expect(got.cm == ConfusionMatrix{cm["tp"], cm["fp"], cm["tn"], cm["fn"]}, label + " confusion matrix");
    auto same = [&](const std::optional<double>& v, const json& w, const char* name) {
      o.expect(w.is_null() ? !v : (v && *v == w.get<double>()), label + " " + name);
    };
    same(got.accuracy, want["accuracy"], "accuracy");
    same(got.lr_minus, want["lr_minus"], "lr_minus");
    same(got.npv, want["npv"], "npv");
    same(got.high_conf_fn_share, want.contains("high_conf_fn_share") ? want["high_conf_fn_share"] : json(),
         "high_conf_fn_share");
  };
  for (Group g : kAllGroups) {
    const std::string name(to_string(g));
    compare(m[g], expected["groups"][name], name);
  }
  json pooled = expected["pooled"];
  pooled["high_conf_fn_share"] = expected["high_conf_fn_share"];
  compare(m.pooled, pooled, "pooled");

  const auto kept = jsonl::read_all(facts);
  std::size_t train = 0;
  std::vector<std::string> test_ids;
  for (const auto& f : kept) {
    if (f["split"] == "train") ++train;
    else test_ids.push_back(f["case_id"]);
  }
  o.expect(kept.size() == expected["retained"].get<std::size_t>(), "retained count");
  o.expect(train == expected["train"].get<std::size_t>(), "train count");
  o.expect(test_ids == expected["test_case_ids"].get<std::vector<std::string>>(), "test case ids");
  if (o.pass)
    o.detail = std::to_string(m.record_count) + " predictions, all four groups and pooled match the oracle";
  return o;
}

Outcome report_shape() {
  Outcome o;
  std::vector<ConfigurationMetrics> cols;
  for (Configuration c : {Configuration::kFtTypedRag, Configuration::kAudit, Configuration::kFtVanillaRag,
                          Configuration::kAuditRag, Configuration::kFtVanilla}) {
    ConfigurationMetrics m;
    m.configuration = c;
    for (Group g : kAllGroups) m.groups[static_cast<std::size_t>(g)] = metrics_for({6, 2, 8, 2}, std::nullopt);
    m.pooled = metrics_for({24, 8, 32, 8}, std::nullopt);
    cols.push_back(m);
  }
  const Report r = make_report(std::move(cols));
  const auto rows = report_rows(r);
  const std::vector<std::string> labels = {"Overall accuracy", "LR- WM", "LR- BM", "LR- WF", "LR- BF",
                                           "NPV WM", "NPV BM", "NPV WF", "NPV BF"};
  o.expect(rows.size() == labels.size(), "row count != 9");
  for (std::size_t i = 0; i < std::min(rows.size(), labels.size()); ++i) {
    o.expect(rows[i].label == labels[i], "row " + std::to_string(i) + " label");
    o.expect(rows[i].cells.size() == 5, "row " + std::to_string(i) + " cell count");
  }
  const std::string header = render_table(r).substr(0, render_table(r).find('\n'));
  o.expect(header == "Metric | AUDIT | AUDIT_RAG | FT_VANILLA | FT_VANILLA_RAG | FT_TYPED_RAG",
           "column order: " + header);
  const json j = to_json(r);
  o.expect(j["columns"] == json::array({"AUDIT", "AUDIT_RAG", "FT_VANILLA", "FT_VANILLA_RAG", "FT_TYPED_RAG"}),
           "JSON column order");
  o.expect(to_json(report_from_json(json::parse(j.dump()))) == j, "JSON round trip");
  if (o.pass) o.detail = "9 rows x 5 columns in canonical order";
  return o;
}

// Case-insensitive whole-phrase scan of the text, independent of the tagger.
bool witnessed(const std::string& text, const std::string& keyword) {
  std::string pattern = "(^|[^a-z0-9'])";
  for (char c : text::to_lower(keyword)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') pattern.push_back(c);
    else if (c == ' ' || c == '-') pattern += "[^a-z0-9']+";
    else pattern += std::string("\\") + c;
  }
  pattern += "($|[^a-z0-9'])";
  return std::regex_search(text::to_lower(text), std::regex(pattern));
}

Outcome typed_fact_soundness() {
  Outcome o;
  const OffenseLexicon lexicon = OffenseLexicon::load(cli::default_data_dir() + "/lexicons/offense_lexicon.txt");
  std::vector<std::string> pool;
  for (const auto& [type, kws] : lexicon.entries()) pool.insert(pool.end(), kws.begin(), kws.end());
  const std::vector<std::string> filler = {"the", "accused", "was", "found", "near", "a", "market",
                                           "late", "at", "night", "with", "two", "others"};

  auto grown_entries = lexicon.entries();
  grown_entries["theft"].push_back("market");
  grown_entries["trespass"].push_back("night");
  grown_entries["extra type"] = {"others"};
  const OffenseLexicon grown(grown_entries);

  std::mt19937_64 rng(31);
  std::size_t assignments = 0;
  for (int i = 0; i < 100; ++i) {
    std::string text;
    for (int w = 0; w < 40; ++w) {
      text += rng() % 8 == 0 ? pool[rng() % pool.size()] : filler[rng() % filler.size()];
      text += rng() % 7 == 0 ? ". " : " ";
    }
    const CaseFact fact{"f" + std::to_string(i), text, 40, i % 2 == 0, Split::kTrain};
    const TypedFact typed = tag_case(fact, lexicon);
    for (const auto& t : typed.offense_types) {
      const auto& kws = lexicon.entries().at(t);
      o.expect(std::any_of(kws.begin(), kws.end(), [&](const auto& k) { return witnessed(text, k); }),
               fact.case_id + ": type " + t + " has no witnessing keyword");
      ++assignments;
    }
    const TypedFact bigger = tag_case(fact, grown);
    for (const auto& t : typed.offense_types)
      o.expect(std::find(bigger.offense_types.begin(), bigger.offense_types.end(), t) !=
                   bigger.offense_types.end(),
               fact.case_id + ": lexicon growth removed " + t);
  }
  o.expect(assignments > 0, "no offense type was assigned");
  if (o.pass) o.detail = "100 facts, " + std::to_string(assignments) + " assignments witnessed and kept";
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
  double budget_seconds;  // 0 means no runtime bound
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"metric-oracle", metric_oracle, 1.0},
      {"worked-values", worked_values, 0.0},
      {"retrieval-exactness", retrieval_exactness, 5.0},
      {"pairing-cardinality", pairing_cardinality, 0.0},
      {"preprocessing-gate", preprocessing_gate, 0.0},
      {"end-to-end-mock-audit", end_to_end_mock_audit, 10.0},
      {"report-shape", report_shape, 0.0},
      {"typed-fact-soundness", typed_fact_soundness, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds >= c.budget_seconds) {
      o.pass = false;
      o.detail = "over the " + std::to_string(c.budget_seconds) + "s budget; " + o.detail;
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.3fs", seconds);
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << timing << ") " << o.detail << "\n";
    if (!o.pass) ++failures;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
