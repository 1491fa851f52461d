#include "bailaudit/sft_export.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>

#include "bailaudit/errors.hpp"
#include "bailaudit/jsonl.hpp"
#include "bailaudit/random.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

std::string_view to_string(SftScheme s) noexcept {
  return s == SftScheme::kVanilla ? "vanilla" : "typed";
}

std::optional<SftScheme> parse_sft_scheme(std::string_view s) noexcept {
  if (s == "vanilla") return SftScheme::kVanilla;
  if (s == "typed") return SftScheme::kTyped;
  return std::nullopt;
}

SftExport export_sft(std::span<const CaseFact> train_facts, std::span<const ImageRecord> roster,
                     const SftOptions& options) {
  if (train_facts.empty()) throw ValidationError("no training facts to export");
  if (roster.empty()) throw ValidationError("cannot export with an empty roster");
  if (!options.templates) throw ValidationError("no template set");
  if (!(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0))
    throw ValidationError("validation_fraction must lie in [0, 1)");
  for (const auto& f : train_facts)
    if (f.split != Split::kTrain)
      throw ValidationError("fact " + f.case_id + " is not in the training split");

  std::optional<OffenseTagger> tagger;
  if (options.scheme == SftScheme::kTyped) {
    if (!options.lexicon) throw ValidationError("the typed scheme needs an offense lexicon");
    tagger.emplace(*options.lexicon, options.tag_options);
  }

  SftExport out;
  SftManifest& m = out.manifest;
  m.scheme = options.scheme;
  m.seed = options.seed;
  m.validation_fraction = options.validation_fraction;
  m.template_hash = options.templates->hash();
  if (options.lexicon && options.scheme == SftScheme::kTyped) m.lexicon_hash = options.lexicon->hash();

  const std::size_t n = train_facts.size();
  const auto validation_count = static_cast<std::size_t>(
      std::floor(options.validation_fraction * static_cast<double>(n) + 0.5));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(options.seed ^ 0x5bd1e9955bd1e995ULL);
  rng.shuffle(order);
  std::vector<bool> is_validation(n, false);
  for (std::size_t r = 0; r < validation_count; ++r) is_validation[order[r]] = true;

  PromptOptions prompt_options;
  prompt_options.ask_confidence = false;
  out.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CaseFact& fact = train_facts[i];
    const Pair pair = sample_training_pair(fact, roster, options.seed);
    const ImageRecord& image = roster[sample_image_index(fact, roster.size(), options.seed)];

    PromptInput input;
    input.case_id = fact.case_id;
    input.fact_text = tagger ? tagger->tag(fact).rendered_text : fact.text;
    input.image_ref = image.uri;
    const PromptBundle bundle =
        build_prompt(Configuration::kFtVanilla, input, std::nullopt, *options.templates, prompt_options);

    SftRecord rec;
    rec.case_id = fact.case_id;
    rec.image_id = pair.image_id;
    rec.image_uri = image.uri;
    rec.scheme = options.scheme;
    rec.system_text = bundle.system_text;
    rec.user_text = bundle.user_text;
    rec.target = fact.bail_granted ? "yes" : "no";
    rec.mask_image_attention = true;
    rec.partition = is_validation[i] ? SftPartition::kValidation : SftPartition::kTrain;
    out.records.push_back(std::move(rec));
  }
  m.validation_count = validation_count;
  m.train_count = n - validation_count;
  return out;
}

json to_json(const SftRecord& r) {
  const json messages = json::array({
      {{"role", "system"}, {"content", r.system_text}},
      {{"role", "user"},
       {"content", json::array({{{"type", "image"}, {"image", r.image_uri}},
                                {{"type", "text"}, {"text", r.user_text}}})}},
      {{"role", "assistant"}, {"content", r.target}},
  });
  return {{"schema", kSftRecordSchema},
          {"case_id", r.case_id},
          {"image_id", r.image_id},
          {"image_uri", r.image_uri},
          {"scheme", to_string(r.scheme)},
          {"partition", r.partition == SftPartition::kTrain ? "train" : "validation"},
          {"system_text", r.system_text},
          {"user_text", r.user_text},
          {"messages", messages},
          {"target", r.target},
          {"mask_image_attention", r.mask_image_attention}};
}

json to_json(const SftManifest& m) {
  return {{"schema", kSftManifestSchema},
          {"record_schema", kSftRecordSchema},
          {"scheme", to_string(m.scheme)},
          {"train_count", m.train_count},
          {"validation_count", m.validation_count},
          {"seed", m.seed},
          {"validation_fraction", m.validation_fraction},
          {"hyperparameters",
           {{"learning_rate", m.hyperparameters.learning_rate},
            {"effective_batch_size", m.hyperparameters.effective_batch_size},
            {"optimizer", m.hyperparameters.optimizer}}},
          {"freeze_scope", m.freeze_scope},
          {"mask_image_attention", true},
          {"lexicon_hash", m.lexicon_hash.empty() ? json(nullptr) : json(m.lexicon_hash)},
          {"template_hash", m.template_hash}};
}

void write_sft_export(const SftExport& exported, const std::string& records_path,
                      const std::string& manifest_path) {
  std::vector<json> rows;
  rows.reserve(exported.records.size());
  for (const auto& r : exported.records) rows.push_back(to_json(r));
  jsonl::write_all(records_path, rows);
  json manifest = to_json(exported.manifest);
  manifest["records_file"] = std::filesystem::path(records_path).filename().string();
  text::write_file(manifest_path, manifest.dump(2) + "\n");
}

}  // namespace bailaudit
