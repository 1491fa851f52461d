#include "bailaudit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bailaudit/batch.hpp"
#include "bailaudit/corpus.hpp"
#include "bailaudit/errors.hpp"
#include "bailaudit/eval.hpp"
#include "bailaudit/hashing.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/kernels/l2.hpp"
#include "bailaudit/manifest.hpp"
#include "bailaudit/offense.hpp"
#include "bailaudit/pairing.hpp"
#include "bailaudit/prompting.hpp"
#include "bailaudit/retrieval.hpp"
#include "bailaudit/sft_export.hpp"
#include "bailaudit/text.hpp"

#ifndef BAILAUDIT_DATA_DIR
#define BAILAUDIT_DATA_DIR "data"
#endif

namespace bailaudit::cli {

using nlohmann::json;

std::string default_data_dir() {
  if (const char* env = std::getenv("BAILAUDIT_DATA_DIR")) return env;
  return BAILAUDIT_DATA_DIR;
}

namespace {

std::string data_path(const std::string& rel) { return default_data_dir() + "/" + rel; }

std::set<Group> parse_groups(const std::string& csv) {
  std::set<Group> out;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');) {
    const std::string t = text::trim(item);
    if (t.empty()) continue;
    const auto g = parse_group(t);
    if (!g) throw ValidationError("unknown group '" + t + "' (expected WM, BM, WF or BF)");
    out.insert(*g);
  }
  if (out.empty()) throw ValidationError("--groups selects no group");
  return out;
}

std::optional<Split> parse_split_filter(const std::string& s) {
  if (s == "all") return std::nullopt;
  const auto split = parse_split(s);
  if (!split) throw ValidationError("--split must be train, test or all");
  return split;
}

std::string file_hash(const std::string& path) { return sha256_hex(text::read_file(path)); }

struct BackendFlags {
  std::string kind = "mock";
  std::string mock_rules;
  std::string endpoint;
  std::string model;
  double timeout = 120.0;
  int max_retries = 3;
  double backoff_base = 1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--mock-rules", mock_rules, "JSON rule file for the mock backend");
    cmd->add_option("--endpoint", endpoint, "chat-completions URL for the http backend");
    cmd->add_option("--model", model, "model name sent to the http backend");
    cmd->add_option("--timeout", timeout, "request timeout in seconds");
    cmd->add_option("--max-retries", max_retries, "retries on transport errors, 429 and 5xx");
    cmd->add_option("--backoff-base", backoff_base, "first retry delay in seconds");
  }

  std::unique_ptr<ModelBackend> make() const {
    if (kind == "mock") {
      if (mock_rules.empty()) throw ValidationError("--backend mock needs --mock-rules");
      return std::make_unique<MockBackend>(MockBackend::load(mock_rules));
    }
    if (endpoint.empty()) throw ValidationError("--backend http needs --endpoint");
    HttpChatConfig cfg;
    cfg.endpoint_url = endpoint;
    cfg.model_name = model;
    cfg.timeout_seconds = timeout;
    cfg.max_retries = max_retries;
    cfg.backoff_base_seconds = backoff_base;
    return std::make_unique<HttpChatBackend>(cfg);
  }
};

struct Context {
  const std::vector<std::string>& args;
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------- ingest

struct IngestFlags {
  std::string input, out, stopwords, argument_keywords, tokenizer = "whitespace", dropped_out;
  std::size_t min_tokens = 50;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

int run_ingest(const IngestFlags& f, Context& ctx) {
  PreprocessConfig cfg;
  const std::string stop_path = f.stopwords.empty() ? data_path("lexicons/legal_stopwords.txt") : f.stopwords;
  const std::string arg_path =
      f.argument_keywords.empty() ? data_path("lexicons/argument_keywords.txt") : f.argument_keywords;
  cfg.legal_stopwords = load_lexicon_file(stop_path);
  cfg.argument_keywords = load_lexicon_file(arg_path);
  cfg.min_token_length = f.min_tokens;
  cfg.tokenizer_spec = f.tokenizer;
  cfg.validate();

  const auto raw = load_raw_cases(f.input);
  std::vector<CaseFact> facts;
  std::vector<json> dropped;
  for (const auto& rc : raw) {
    auto outcome = preprocess_case(rc, cfg);
    if (auto* fact = std::get_if<CaseFact>(&outcome)) {
      facts.push_back(std::move(*fact));
    } else {
      const auto& d = std::get<Dropped>(outcome);
      dropped.push_back({{"case_id", d.case_id}, {"reason", "too_short"}, {"token_count", d.token_count}});
    }
  }
  split_corpus(facts, f.train_fraction, f.seed);
  save_case_facts(f.out, facts);
  if (!f.dropped_out.empty()) jsonl::write_all(f.dropped_out, dropped);

  std::size_t train = 0;
  for (const auto& fact : facts) train += fact.split == Split::kTrain;
  RunManifest manifest("ingest", ctx.args);
  manifest.add_input(f.input);
  manifest.add_output(f.out);
  manifest.add_config_hash("legal_stopwords", file_hash(stop_path));
  manifest.add_config_hash("argument_keywords", file_hash(arg_path));
  manifest.add_seed("split", f.seed);
  manifest.add_count("raw", raw.size());
  manifest.add_count("dropped", dropped.size());
  manifest.add_count("retained", facts.size());
  manifest.add_count("train", train);
  manifest.add_count("test", facts.size() - train);
  manifest.set_note("tokenizer", f.tokenizer);
  manifest.set_note("min_token_length", f.min_tokens);
  manifest.set_note("train_fraction", f.train_fraction);
  manifest.write(f.out);

  ctx.out << "ingested " << raw.size() << " cases: " << facts.size() << " retained (" << train
          << " train, " << facts.size() - train << " test), " << dropped.size() << " dropped\n";
  return kExitOk;
}

// ---------------------------------------------------------------- pair

struct PairFlags {
  std::string roster, facts, out, groups = "WM,BM,WF,BF", split = "all";
  std::size_t max_pairs_per_fact = 0;
  std::uint64_t seed = 0;
};

int run_pair(const PairFlags& f, Context& ctx) {
  const auto groups = parse_groups(f.groups);
  const auto split = parse_split_filter(f.split);
  const auto roster = load_roster(f.roster, groups);
  for (const auto& w : roster.warnings) ctx.err << "warning: " << w << "\n";
  auto facts = load_case_facts(f.facts);
  if (split) std::erase_if(facts, [&](const CaseFact& c) { return c.split != split; });

  const PairSet grid = generate_pairs(roster.records, facts);
  std::vector<json> rows;
  std::array<std::size_t, 4> per_group{};
  std::size_t train = 0;
  auto emit = [&](const Pair& p) {
    ++per_group[static_cast<std::size_t>(p.group)];
    train += p.split == Split::kTrain;
    rows.push_back(to_json(p));
  };
  if (f.max_pairs_per_fact == 0) {
    rows.reserve(grid.size());
    for (const Pair& p : grid) emit(p);
  } else {
    for (const Pair& p : limited_pairs(grid, f.max_pairs_per_fact, f.seed)) emit(p);
  }
  jsonl::write_all(f.out, rows);

  RunManifest manifest("pair", ctx.args);
  manifest.add_input(f.roster);
  manifest.add_input(f.facts);
  manifest.add_output(f.out);
  manifest.add_seed("pair_sampling", f.seed);
  manifest.add_count("images", roster.records.size());
  manifest.add_count("facts", facts.size());
  manifest.add_count("pairs", rows.size());
  manifest.add_count("train_pairs", train);
  manifest.add_count("test_pairs", rows.size() - train);
  manifest.add_count("excluded_other_race", roster.excluded_other_race);
  manifest.add_count("roster_warnings", roster.warnings.size());
  json per_group_json = json::object();
  json images_json = json::object();
  for (Group g : kAllGroups) {
    per_group_json[std::string(to_string(g))] = per_group[static_cast<std::size_t>(g)];
    images_json[std::string(to_string(g))] = roster.per_group[static_cast<std::size_t>(g)];
  }
  manifest.set_note("pairs_per_group", per_group_json);
  manifest.set_note("images_per_group", images_json);
  manifest.set_note("max_pairs_per_fact",
                    f.max_pairs_per_fact == 0 ? json("all") : json(f.max_pairs_per_fact));
  manifest.write(f.out);

  ctx.out << "images per group:";
  for (Group g : kAllGroups) ctx.out << " " << to_string(g) << "=" << roster.per_group[static_cast<std::size_t>(g)];
  ctx.out << "\npairs: " << rows.size() << " (" << train << " train, " << rows.size() - train
          << " test); per group:";
  for (Group g : kAllGroups) ctx.out << " " << to_string(g) << "=" << per_group[static_cast<std::size_t>(g)];
  ctx.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- tag

struct TagFlags {
  std::string facts, lexicon, out;
  bool stem = false;
  bool case_sensitive = false;
};

int run_tag(const TagFlags& f, Context& ctx) {
  const std::string lex_path = f.lexicon.empty() ? data_path("lexicons/offense_lexicon.txt") : f.lexicon;
  const auto lexicon = OffenseLexicon::load(lex_path);
  const OffenseTagger tagger(lexicon, TagOptions{f.case_sensitive, f.stem});
  const auto facts = load_case_facts(f.facts);
  std::vector<TypedFact> typed;
  typed.reserve(facts.size());
  std::size_t with_types = 0;
  for (const auto& fact : facts) {
    typed.push_back(tagger.tag(fact));
    with_types += !typed.back().offense_types.empty();
  }
  save_typed_facts(f.out, typed);

  RunManifest manifest("tag", ctx.args);
  manifest.add_input(f.facts);
  manifest.add_output(f.out);
  manifest.add_config_hash("offense_lexicon", lexicon.hash());
  manifest.add_count("facts", facts.size());
  manifest.add_count("facts_with_offense_types", with_types);
  manifest.set_note("stem", f.stem);
  manifest.set_note("case_sensitive", f.case_sensitive);
  manifest.write(f.out);
  ctx.out << "tagged " << facts.size() << " facts, " << with_types << " with at least one offense type\n";
  return kExitOk;
}

// ---------------------------------------------------------------- expand-lexicon

struct ExpandFlags {
  std::string offense_type;
  std::size_t n = 10;
  BackendFlags backend;
};

int run_expand(const ExpandFlags& f, Context& ctx) {
  const auto backend = f.backend.make();
  const auto result = expand_lexicon(*backend, f.offense_type, f.n);
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << "\n";
  ctx.out << "[" << f.offense_type << "]\n";
  for (const auto& k : result.keywords) ctx.out << k << "\n";
  ctx.err << "review these candidates before adding them to a lexicon file\n";
  return kExitOk;
}

// ---------------------------------------------------------------- index

struct IndexBuildFlags {
  std::string facts, typed_facts, out, embedder = "hash", embed_url, embed_model;
  std::size_t dim = 1024;
};

std::unique_ptr<Embedder> make_cli_embedder(const std::string& kind, std::size_t dim,
                                            const std::string& url, const std::string& model) {
  if (kind == "hash") return std::make_unique<HashingEmbedder>(dim);
  if (url.empty()) throw ValidationError("--embedder http needs --embed-url");
  HttpEmbedderConfig cfg;
  cfg.endpoint_url = url;
  cfg.model = model;
  cfg.dimension = dim;
  return std::make_unique<HttpEmbedder>(cfg);
}

int run_index_build(const IndexBuildFlags& f, Context& ctx) {
  if (f.facts.empty() == f.typed_facts.empty())
    throw ValidationError("index build needs exactly one of --facts or --typed-facts");
  const auto embedder = make_cli_embedder(f.embedder, f.dim, f.embed_url, f.embed_model);
  std::size_t skipped = 0;
  std::optional<PrecedentIndex> index;
  if (!f.facts.empty()) {
    auto facts = load_case_facts(f.facts);
    skipped = std::erase_if(facts, [](const CaseFact& c) { return c.split != Split::kTrain; });
    index.emplace(build_index(std::span<const CaseFact>(facts), *embedder));
  } else {
    auto facts = load_typed_facts(f.typed_facts);
    skipped = std::erase_if(facts, [](const TypedFact& c) { return c.split != Split::kTrain; });
    index.emplace(build_index(std::span<const TypedFact>(facts), *embedder));
  }
  index->save(f.out);

  RunManifest manifest("index build", ctx.args);
  manifest.add_input(f.facts.empty() ? f.typed_facts : f.facts);
  manifest.add_output(f.out);
  manifest.set_note("embedder", embedder->name());
  manifest.set_note("text_kind", to_string(index->text_kind()));
  manifest.set_note("l2_kernel", kernels::to_string(kernels::active_l2_kernel()));
  manifest.add_count("entries", index->size());
  manifest.add_count("non_train_skipped", skipped);
  manifest.write(f.out);
  ctx.out << "indexed " << index->size() << " training facts (" << skipped
          << " non-training facts skipped) with " << embedder->name() << "\n";
  return kExitOk;
}

struct IndexQueryFlags {
  std::string index, text, case_id, facts, typed_facts, embed_url;
  std::size_t k = 3;
};

int run_index_query(const IndexQueryFlags& f, Context& ctx) {
  const auto index = PrecedentIndex::load(f.index);
  const auto embedder = make_embedder(index.embedder_name(), f.embed_url);
  std::string query = f.text;
  if (query.empty()) {
    if (f.case_id.empty()) throw ValidationError("index query needs --text or --case-id");
    if (!f.typed_facts.empty()) {
      for (const auto& t : load_typed_facts(f.typed_facts))
        if (t.case_id == f.case_id) query = t.rendered_text;
    } else if (!f.facts.empty()) {
      for (const auto& c : load_case_facts(f.facts))
        if (c.case_id == f.case_id) query = c.text;
    } else {
      throw ValidationError("--case-id needs --facts or --typed-facts");
    }
    if (query.empty()) throw ValidationError("case " + f.case_id + " not found");
  }
  const auto result = retrieve_top_k(index, *embedder, query, f.k, f.case_id);
  json ranked = json::array();
  for (const auto& n : result.ranked) {
    const IndexEntry* e = index.find(n.case_id);
    ranked.push_back({{"case_id", n.case_id}, {"distance", n.distance}, {"bail_granted", e->bail_granted}});
  }
  ctx.out << json{{"k", result.k}, {"ranked", ranked}}.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictFlags {
  std::string config, pairs, facts, typed_facts, roster, index, embed_url, split = "test";
  std::string templates, parser_rules, checkpoint, out;
  std::size_t parallelism = 1, checkpoint_every = 100, k = 3;
  bool precedent_facts_only = false;
  bool no_confidence = false;
  BackendFlags backend;
};

int run_predict(const PredictFlags& f, Context& ctx) {
  const auto cfg = parse_configuration(f.config);
  if (!cfg) throw ValidationError("unknown --config '" + f.config + "'");
  if (uses_retrieval(*cfg) && f.index.empty())
    throw ValidationError("--config " + f.config + " needs --index");
  if (!uses_retrieval(*cfg) && !f.index.empty())
    throw ValidationError("--config " + f.config + " does not use --index");
  if (uses_typed_facts(*cfg) && f.typed_facts.empty())
    throw ValidationError("--config " + f.config + " needs --typed-facts");
  if (f.facts.empty() && f.typed_facts.empty())
    throw ValidationError("predict needs --facts (or --typed-facts)");
  if (f.parallelism == 0) throw ValidationError("--parallelism must be at least 1");

  const TemplateSet templates =
      f.templates.empty() ? TemplateSet::builtin() : TemplateSet::load(f.templates);
  const DecisionRules rules =
      f.parser_rules.empty() ? DecisionRules::builtin() : DecisionRules::load(f.parser_rules);
  const auto backend = f.backend.make();

  BatchInputs inputs;
  inputs.templates = &templates;
  inputs.rules = &rules;
  inputs.k = f.k;
  inputs.prompt_options.ask_confidence = !f.no_confidence;
  inputs.prompt_options.precedent_facts_only = f.precedent_facts_only;
  if (!f.facts.empty()) {
    for (auto& c : load_case_facts(f.facts)) {
      if (!c.split) throw ValidationError("fact " + c.case_id + " has no split");
      inputs.facts[c.case_id] = FactView{c.text, std::nullopt, c.bail_granted, *c.split};
    }
  }
  if (!f.typed_facts.empty()) {
    for (auto& t : load_typed_facts(f.typed_facts)) {
      if (!t.split) throw ValidationError("typed fact " + t.case_id + " has no split");
      auto [it, inserted] = inputs.facts.try_emplace(t.case_id, FactView{t.text, std::nullopt, t.bail_granted, *t.split});
      if (uses_typed_facts(*cfg)) it->second.typed_text = t.rendered_text;
    }
  }
  for (const auto& rec : load_roster(f.roster, {kAllGroups.begin(), kAllGroups.end()}).records)
    inputs.images[rec.image_id] = rec.uri;

  const auto split = parse_split_filter(f.split);
  std::vector<Pair> pairs;
  jsonl::for_each(f.pairs, [&](const json& j, std::size_t) {
    Pair p = pair_from_json(j);
    if (!split || p.split == *split) pairs.push_back(std::move(p));
  });

  std::optional<PrecedentIndex> index;
  std::unique_ptr<Embedder> embedder;
  if (!f.index.empty()) {
    index.emplace(PrecedentIndex::load(f.index));
    embedder = make_embedder(index->embedder_name(), f.embed_url);
  }

  BatchOptions options;
  options.parallelism = f.parallelism;
  options.checkpoint_path = f.checkpoint;
  options.checkpoint_every = f.checkpoint_every;
  const BatchResult result = run_batch(pairs, inputs, *cfg, *backend,
                                       index ? &*index : nullptr, embedder.get(), options);

  std::vector<json> rows;
  rows.reserve(result.outcomes.size());
  std::size_t unparseable = 0;
  for (const auto& o : result.outcomes) {
    rows.push_back(to_json(o, *cfg));
    if (o.record && o.record->decision == Decision::kUnparseable) ++unparseable;
    if (!o.ok()) ctx.err << "error: " << o.pair.image_id << "/" << o.pair.case_id << ": " << o.error << "\n";
  }
  jsonl::write_all(f.out, rows);

  RunManifest manifest("predict", ctx.args);
  manifest.add_input(f.pairs);
  manifest.add_output(f.out);
  manifest.add_config_hash("templates", templates.hash());
  manifest.add_config_hash("parser_rules", rules.hash());
  if (index) manifest.add_config_hash("index", file_hash(f.index + ".json"));
  manifest.set_backend(backend->describe());
  manifest.set_note("configuration", to_string(*cfg));
  manifest.set_note("template_version", templates.version());
  manifest.set_note("parser_rules_version", rules.version());
  manifest.set_note("temperature", 0.0);
  manifest.set_note("split", f.split);
  manifest.set_note("precedent_facts_only", f.precedent_facts_only);
  manifest.set_note("asks_confidence", !f.no_confidence);
  manifest.add_count("pairs", pairs.size());
  manifest.add_count("queried", result.queried);
  manifest.add_count("resumed_from_checkpoint", result.resumed);
  manifest.add_count("failed", result.failed);
  manifest.add_count("unparseable", unparseable);
  manifest.write(f.out);

  ctx.out << to_string(*cfg) << ": " << pairs.size() << " pairs, " << result.queried << " queried, "
          << result.resumed << " resumed, " << result.failed << " failed, " << unparseable
          << " unparseable\n";
  return result.failed > 0 ? kExitPartialFailure : kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateFlags {
  std::string predictions, out;
  bool unparseable_as_deny = false;
};

int run_evaluate(const EvaluateFlags& f, Context& ctx) {
  std::vector<PredictionRecord> records;
  std::size_t errors = 0;
  std::optional<Configuration> first;
  jsonl::for_each(f.predictions, [&](const json& j, std::size_t line) {
    const auto cfg = parse_configuration(j.value("configuration", ""));
    if (!cfg) throw IngestionError({}, f.predictions + ":" + std::to_string(line) + ": unknown configuration");
    if (first && *first != *cfg)
      throw AggregationError("predictions mix configurations " + std::string(to_string(*first)) +
                             " and " + std::string(to_string(*cfg)));
    first = cfg;
    if (j.contains("error")) {
      ++errors;
      return;
    }
    records.push_back(prediction_from_json(j));
  });
  if (records.empty()) throw AggregationError("no successful predictions in " + f.predictions);

  EvalOptions options;
  options.unparseable_as_deny = f.unparseable_as_deny;
  ConfigurationMetrics metrics = evaluate(records, options);
  metrics.error_count = errors;
  metrics.source_manifest_id = RunManifest::read_id(f.predictions);
  text::write_file(f.out, to_json(metrics).dump(2) + "\n");

  RunManifest manifest("evaluate", ctx.args);
  manifest.add_input(f.predictions);
  manifest.add_output(f.out);
  manifest.set_note("source_manifest_id", metrics.source_manifest_id);
  manifest.set_note("unparseable_as_deny", f.unparseable_as_deny);
  manifest.add_count("records", records.size());
  manifest.add_count("errors", errors);
  manifest.add_count("excluded_unparseable", metrics.excluded_unparseable);
  manifest.write(f.out);

  const Report single = make_report({metrics});
  ctx.out << render_table(single);
  ctx.out << "excluded unparseable: " << metrics.excluded_unparseable << ", errors: " << errors << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportFlags {
  std::vector<std::string> metrics;
  std::string out;
  std::string format = "table";
};

int run_report(const ReportFlags& f, Context& ctx) {
  std::vector<ConfigurationMetrics> metrics;
  json sources = json::array();
  for (const auto& path : f.metrics) {
    json j;
    try {
      j = json::parse(text::read_file(path));
    } catch (const json::parse_error& e) {
      throw IngestionError({}, path + ": " + e.what());
    }
    metrics.push_back(metrics_from_json(j));
    sources.push_back({{"path", path}, {"manifest_id", RunManifest::read_id(path)}});
  }
  Report report = make_report(std::move(metrics));
  if (!f.out.empty()) {
    RunManifest manifest("report", ctx.args);
    for (const auto& p : f.metrics) manifest.add_input(p);
    manifest.add_output(f.out);
    manifest.set_note("sources", sources);
    manifest.add_count("configurations", report.columns.size());
    report.manifest_id = manifest.write(f.out);
    text::write_file(f.out, to_json(report).dump(2) + "\n");
  }
  if (f.format == "json")
    ctx.out << to_json(report).dump(2) << "\n";
  else
    ctx.out << render_table(report);
  return kExitOk;
}

// ---------------------------------------------------------------- export-sft

struct ExportFlags {
  std::string facts, roster, scheme = "vanilla", lexicon, templates, out, manifest;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  bool stem = false;
};

int run_export(const ExportFlags& f, Context& ctx) {
  const auto scheme = parse_sft_scheme(f.scheme);
  if (!scheme) throw ValidationError("--scheme must be vanilla or typed");
  auto facts = load_case_facts(f.facts);
  const auto skipped = std::erase_if(facts, [](const CaseFact& c) { return c.split != Split::kTrain; });
  const auto roster = load_roster(f.roster, {kAllGroups.begin(), kAllGroups.end()});
  const TemplateSet templates = f.templates.empty() ? TemplateSet::builtin() : TemplateSet::load(f.templates);
  std::optional<OffenseLexicon> lexicon;
  if (*scheme == SftScheme::kTyped)
    lexicon.emplace(OffenseLexicon::load(f.lexicon.empty() ? data_path("lexicons/offense_lexicon.txt") : f.lexicon));

  SftOptions options;
  options.scheme = *scheme;
  options.seed = f.seed;
  options.validation_fraction = f.validation_fraction;
  options.templates = &templates;
  options.lexicon = lexicon ? &*lexicon : nullptr;
  options.tag_options.stem = f.stem;
  const SftExport exported = export_sft(facts, roster.records, options);
  const std::string manifest_path = f.manifest.empty() ? f.out + ".sft_manifest.json" : f.manifest;
  write_sft_export(exported, f.out, manifest_path);

  RunManifest manifest("export-sft", ctx.args);
  manifest.add_input(f.facts);
  manifest.add_input(f.roster);
  manifest.add_output(f.out);
  manifest.add_output(manifest_path);
  manifest.add_seed("sft", f.seed);
  manifest.add_config_hash("templates", templates.hash());
  if (lexicon) manifest.add_config_hash("offense_lexicon", lexicon->hash());
  manifest.add_count("records", exported.records.size());
  manifest.add_count("train", exported.manifest.train_count);
  manifest.add_count("validation", exported.manifest.validation_count);
  manifest.add_count("non_train_skipped", skipped);
  manifest.write(f.out);
  ctx.out << "exported " << exported.records.size() << " " << f.scheme << " records ("
          << exported.manifest.train_count << " train, " << exported.manifest.validation_count
          << " validation)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal bail-prediction audit harness", "bailaudit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  IngestFlags ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Preprocess raw cases into split case facts");
  c_ingest->add_option("--input", ingest.input, "raw case JSONL")->required();
  c_ingest->add_option("--out", ingest.out, "case fact JSONL")->required();
  c_ingest->add_option("--stopwords", ingest.stopwords, "legal stopword lexicon");
  c_ingest->add_option("--argument-keywords", ingest.argument_keywords, "argument keyword lexicon");
  c_ingest->add_option("--min-tokens", ingest.min_tokens, "minimum token length after preprocessing");
  c_ingest->add_option("--tokenizer", ingest.tokenizer, "tokenizer name");
  c_ingest->add_option("--train-fraction", ingest.train_fraction, "train share of retained facts");
  c_ingest->add_option("--seed", ingest.seed, "split seed");
  c_ingest->add_option("--dropped-out", ingest.dropped_out, "JSONL of dropped cases");

  PairFlags pair;
  auto* c_pair = app.add_subcommand("pair", "Pair roster images with case facts");
  c_pair->add_option("--roster", pair.roster, "roster CSV")->required();
  c_pair->add_option("--facts", pair.facts, "case fact JSONL")->required();
  c_pair->add_option("--out", pair.out, "pair manifest JSONL")->required();
  c_pair->add_option("--groups", pair.groups, "comma-separated groups to keep");
  c_pair->add_option("--split", pair.split, "train, test or all");
  c_pair->add_option("--max-pairs-per-fact", pair.max_pairs_per_fact, "0 keeps every image");
  c_pair->add_option("--seed", pair.seed, "seed for --max-pairs-per-fact sampling");

  TagFlags tag;
  auto* c_tag = app.add_subcommand("tag", "Attach offense types to case facts");
  c_tag->add_option("--facts", tag.facts, "case fact JSONL")->required();
  c_tag->add_option("--lexicon", tag.lexicon, "offense lexicon file");
  c_tag->add_option("--out", tag.out, "typed fact JSONL")->required();
  c_tag->add_flag("--stem", tag.stem, "match inflected forms of keywords");
  c_tag->add_flag("--case-sensitive", tag.case_sensitive, "match keywords case-sensitively");

  ExpandFlags expand;
  auto* c_expand = app.add_subcommand("expand-lexicon", "Ask a backend for candidate offense keywords");
  c_expand->add_option("--offense-type", expand.offense_type, "offense type to expand")->required();
  c_expand->add_option("--n", expand.n, "maximum number of keywords");
  expand.backend.add_to(c_expand);

  auto* c_index = app.add_subcommand("index", "Build or query the precedent index");
  c_index->require_subcommand(1);
  IndexBuildFlags ib;
  auto* c_ib = c_index->add_subcommand("build", "Build an index over training facts");
  c_ib->add_option("--facts", ib.facts, "case fact JSONL");
  c_ib->add_option("--typed-facts", ib.typed_facts, "typed fact JSONL");
  c_ib->add_option("--out", ib.out, "index file")->required();
  c_ib->add_option("--embedder", ib.embedder, "hash or http")->check(CLI::IsMember({"hash", "http"}));
  c_ib->add_option("--dim", ib.dim, "embedding dimension");
  c_ib->add_option("--embed-url", ib.embed_url, "embeddings endpoint for --embedder http");
  c_ib->add_option("--embed-model", ib.embed_model, "embedding model name");
  IndexQueryFlags iq;
  auto* c_iq = c_index->add_subcommand("query", "Retrieve nearest precedents");
  c_iq->add_option("--index", iq.index, "index file")->required();
  c_iq->add_option("--text", iq.text, "query text");
  c_iq->add_option("--case-id", iq.case_id, "take the query from this case");
  c_iq->add_option("--facts", iq.facts, "case fact JSONL for --case-id");
  c_iq->add_option("--typed-facts", iq.typed_facts, "typed fact JSONL for --case-id");
  c_iq->add_option("--k", iq.k, "number of precedents");
  c_iq->add_option("--embed-url", iq.embed_url, "embeddings endpoint for HTTP-built indexes");

  PredictFlags predict;
  auto* c_predict = app.add_subcommand("predict", "Query a backend for every pair");
  c_predict->add_option("--config", predict.config,
                        "audit, audit-rag, ft-vanilla, ft-vanilla-rag or ft-typed-rag")
      ->required();
  c_predict->add_option("--pairs", predict.pairs, "pair manifest JSONL")->required();
  c_predict->add_option("--facts", predict.facts, "case fact JSONL");
  c_predict->add_option("--typed-facts", predict.typed_facts, "typed fact JSONL");
  c_predict->add_option("--roster", predict.roster, "roster CSV")->required();
  c_predict->add_option("--index", predict.index, "precedent index for RAG configurations");
  c_predict->add_option("--embed-url", predict.embed_url, "embeddings endpoint for HTTP-built indexes");
  c_predict->add_option("--split", predict.split, "train, test or all");
  c_predict->add_option("--templates", predict.templates, "prompt template file");
  c_predict->add_option("--parser-rules", predict.parser_rules, "decision parser rule file");
  c_predict->add_option("--parallelism", predict.parallelism, "concurrent requests");
  c_predict->add_option("--checkpoint", predict.checkpoint, "checkpoint JSONL for resuming");
  c_predict->add_option("--checkpoint-every", predict.checkpoint_every, "records per checkpoint flush");
  c_predict->add_option("--k", predict.k, "precedents per prompt");
  c_predict->add_flag("--precedent-facts-only", predict.precedent_facts_only, "omit precedent outcomes");
  c_predict->add_flag("--no-confidence", predict.no_confidence, "do not ask for a confidence grade");
  c_predict->add_option("--out", predict.out, "predictions JSONL")->required();
  predict.backend.add_to(c_predict);

  EvaluateFlags evaluate_flags;
  auto* c_eval = app.add_subcommand("evaluate", "Compute per-group metrics for one configuration");
  c_eval->add_option("--predictions", evaluate_flags.predictions, "predictions JSONL")->required();
  c_eval->add_option("--out", evaluate_flags.out, "metrics JSON")->required();
  c_eval->add_flag("--unparseable-as-deny", evaluate_flags.unparseable_as_deny,
                   "count unparseable answers as denials");

  ReportFlags report;
  auto* c_report = app.add_subcommand("report", "Tabulate metrics across configurations");
  c_report->add_option("--metrics", report.metrics, "metrics JSON files")->required();
  c_report->add_option("--out", report.out, "report JSON");
  c_report->add_option("--format", report.format, "table or json")->check(CLI::IsMember({"table", "json"}));

  ExportFlags exp;
  auto* c_export = app.add_subcommand("export-sft", "Write a fine-tuning dataset");
  c_export->add_option("--facts", exp.facts, "case fact JSONL")->required();
  c_export->add_option("--roster", exp.roster, "roster CSV")->required();
  c_export->add_option("--scheme", exp.scheme, "vanilla or typed");
  c_export->add_option("--lexicon", exp.lexicon, "offense lexicon for the typed scheme");
  c_export->add_option("--templates", exp.templates, "prompt template file");
  c_export->add_option("--seed", exp.seed, "image and validation sampling seed");
  c_export->add_option("--validation-fraction", exp.validation_fraction, "validation share");
  c_export->add_flag("--stem", exp.stem, "match inflected forms of offense keywords");
  c_export->add_option("--out", exp.out, "records JSONL")->required();
  c_export->add_option("--manifest", exp.manifest, "dataset manifest JSON");

  std::vector<std::string> storage(args.begin(), args.end());
  if (storage.empty()) storage.emplace_back("bailaudit");
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Context ctx{args, out, err};
  try {
    if (*c_ingest) return run_ingest(ingest, ctx);
    if (*c_pair) return run_pair(pair, ctx);
    if (*c_tag) return run_tag(tag, ctx);
    if (*c_expand) return run_expand(expand, ctx);
    if (*c_ib) return run_index_build(ib, ctx);
    if (*c_iq) return run_index_query(iq, ctx);
    if (*c_predict) return run_predict(predict, ctx);
    if (*c_eval) return run_evaluate(evaluate_flags, ctx);
    if (*c_report) return run_report(report, ctx);
    if (*c_export) return run_export(exp, ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return kExitValidation;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace bailaudit::cli
