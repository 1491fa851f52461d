#include "doctest.h"

#include <set>

#include "bailaudit/errors.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/sft_export.hpp"
#include "bailaudit/text.hpp"
#include "support.hpp"

using namespace bailaudit;

namespace {

std::vector<CaseFact> train_facts(std::size_t n) {
  std::vector<CaseFact> out;
  for (std::size_t i = 0; i < n; ++i) {
    CaseFact f;
    f.case_id = "c" + std::to_string(i);
    f.text = i % 4 == 0 ? "The accused was found selling heroin near a school." : "A quarrel led to injuries.";
    f.token_count = 10;
    f.bail_granted = i % 3 != 0;
    f.split = Split::kTrain;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<ImageRecord> roster() {
  return {{"w1", "img/w1.png", Race::kWhite, Gender::kMale, {}},
          {"b1", "img/b1.png", Race::kBlack, Gender::kFemale, {}},
          {"b2", "img/b2.png", Race::kBlack, Gender::kMale, {}}};
}

const OffenseLexicon& lexicon() {
  static const OffenseLexicon lex(std::map<std::string, std::vector<std::string>>{{"narcotics", {"heroin"}}});
  return lex;
}

}  // namespace

TEST_CASE("sft export partitions 90/10 and maps targets") {
  const auto facts = train_facts(100);
  const auto images = roster();
  SftOptions opts;
  opts.seed = 3;
  const auto ex = export_sft(facts, images, opts);
  REQUIRE(ex.records.size() == 100);
  CHECK(ex.manifest.train_count == 90);
  CHECK(ex.manifest.validation_count == 10);
  std::size_t validation = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& r = ex.records[i];
    CHECK(r.case_id == facts[i].case_id);
    CHECK(r.target == (facts[i].bail_granted ? "yes" : "no"));
    CHECK(r.mask_image_attention);
    CHECK(r.scheme == SftScheme::kVanilla);
    CHECK(r.user_text.find(facts[i].text) != std::string::npos);
    bool image_known = false;
    for (const auto& img : images) image_known |= img.image_id == r.image_id && img.uri == r.image_uri;
    CHECK(image_known);
    ids.insert(r.case_id);
    if (r.partition == SftPartition::kValidation) ++validation;
  }
  CHECK(ids.size() == 100);
  CHECK(validation == 10);

  const auto small = export_sft(train_facts(7), images, opts);
  CHECK(small.manifest.validation_count == 1);
  opts.validation_fraction = 0.0;
  CHECK(export_sft(facts, images, opts).manifest.validation_count == 0);
}

TEST_CASE("sft export is deterministic per seed") {
  testsupport::TempDir dir;
  const auto facts = train_facts(40);
  const auto images = roster();
  SftOptions opts;
  opts.seed = 11;
  write_sft_export(export_sft(facts, images, opts), dir.file("a.jsonl"), dir.file("a.json"));
  write_sft_export(export_sft(facts, images, opts), dir.file("b.jsonl"), dir.file("b.json"));
  CHECK(text::read_file(dir.file("a.jsonl")) == text::read_file(dir.file("b.jsonl")));

  opts.seed = 12;
  const auto other = export_sft(facts, images, opts);
  const auto base = export_sft(facts, images, SftOptions{.seed = 11});
  bool differs = false;
  for (std::size_t i = 0; i < facts.size(); ++i)
    differs |= other.records[i].partition != base.records[i].partition ||
               other.records[i].image_id != base.records[i].image_id;
  CHECK(differs);
}

TEST_CASE("typed export differs from vanilla only in scheme and user text") {
  const auto facts = train_facts(8);
  const auto images = roster();
  SftOptions vanilla_opts;
  vanilla_opts.seed = 5;
  SftOptions typed_opts = vanilla_opts;
  typed_opts.scheme = SftScheme::kTyped;
  typed_opts.lexicon = &lexicon();
  const auto vanilla = export_sft(facts, images, vanilla_opts);
  const auto typed = export_sft(facts, images, typed_opts);
  CHECK(typed.manifest.lexicon_hash == lexicon().hash());
  CHECK(vanilla.manifest.lexicon_hash.empty());

  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto& v = vanilla.records[i];
    const auto& t = typed.records[i];
    CHECK(t.scheme == SftScheme::kTyped);
    CHECK(v.case_id == t.case_id);
    CHECK(v.image_id == t.image_id);
    CHECK(v.image_uri == t.image_uri);
    CHECK(v.system_text == t.system_text);
    CHECK(v.target == t.target);
    CHECK(v.partition == t.partition);
    const auto rendered = tag_case(facts[i], lexicon()).rendered_text;
    std::string expected = v.user_text;
    expected.replace(expected.find(facts[i].text), facts[i].text.size(), rendered);
    CHECK(t.user_text == expected);
    if (i % 4 == 0)
      CHECK(t.user_text.find("narcotics") != std::string::npos);
    else
      CHECK(t.user_text.find("narcotics") == std::string::npos);
  }
}

TEST_CASE("sft record and manifest JSON") {
  const auto facts = train_facts(10);
  const auto images = roster();
  SftOptions opts;
  opts.seed = 1;
  const auto ex = export_sft(facts, images, opts);
  const auto j = to_json(ex.records[0]);
  CHECK(j["schema"] == kSftRecordSchema);
  CHECK(j["mask_image_attention"] == true);
  CHECK(j["target"] == "no");
  REQUIRE(j["messages"].size() == 3);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][1]["content"][0]["type"] == "image");
  CHECK(j["messages"][1]["content"][0]["image"] == ex.records[0].image_uri);
  CHECK(j["messages"][1]["content"][1]["text"] == ex.records[0].user_text);
  CHECK(j["messages"][2]["content"] == "no");

  const auto m = to_json(ex.manifest);
  CHECK(m["schema"] == kSftManifestSchema);
  CHECK(m["record_schema"] == kSftRecordSchema);
  CHECK(m["hyperparameters"]["learning_rate"] == 1e-5);
  CHECK(m["hyperparameters"]["effective_batch_size"] == 8);
  CHECK(m["hyperparameters"]["optimizer"] == "adamw_torch");
  CHECK(m["freeze_scope"] == "vision_encoder_only");
  CHECK(m["lexicon_hash"].is_null());
  CHECK(m["train_count"] == 9);
  CHECK(m["validation_count"] == 1);
  CHECK(m["template_hash"] == TemplateSet::builtin().hash());

  testsupport::TempDir dir;
  write_sft_export(ex, dir.file("sft.jsonl"), dir.file("sft.json"));
  const auto rows = jsonl::read_all(dir.file("sft.jsonl"));
  CHECK(rows.size() == 10);
  const auto written = nlohmann::json::parse(text::read_file(dir.file("sft.json")));
  CHECK(written["records_file"] == "sft.jsonl");
}

TEST_CASE("sft export preconditions") {
  const auto facts = train_facts(5);
  const auto images = roster();
  SftOptions opts;
  CHECK_THROWS_AS(export_sft({}, images, opts), ValidationError);
  CHECK_THROWS_AS(export_sft(facts, {}, opts), ValidationError);
  auto mixed = facts;
  mixed[2].split = Split::kTest;
  CHECK_THROWS_AS(export_sft(mixed, images, opts), ValidationError);
  mixed[2].split.reset();
  CHECK_THROWS_AS(export_sft(mixed, images, opts), ValidationError);
  opts.scheme = SftScheme::kTyped;
  CHECK_THROWS_AS(export_sft(facts, images, opts), ValidationError);
  opts.scheme = SftScheme::kVanilla;
  opts.validation_fraction = 1.0;
  CHECK_THROWS_AS(export_sft(facts, images, opts), ValidationError);
  CHECK(parse_sft_scheme("typed") == SftScheme::kTyped);
  CHECK_FALSE(parse_sft_scheme("other").has_value());
}
