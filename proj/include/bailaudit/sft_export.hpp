#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bailaudit/corpus.hpp"
#include "bailaudit/offense.hpp"
#include "bailaudit/pairing.hpp"
#include "bailaudit/prompting.hpp"
#include "json.hpp"

namespace bailaudit {

enum class SftScheme { kVanilla, kTyped };
enum class SftPartition { kTrain, kValidation };

std::string_view to_string(SftScheme s) noexcept;
std::optional<SftScheme> parse_sft_scheme(std::string_view s) noexcept;

inline constexpr const char* kSftRecordSchema = "bailaudit.sft_record/1";
inline constexpr const char* kSftManifestSchema = "bailaudit.sft_manifest/1";

struct SftRecord {
  std::string case_id;
  std::string image_id;
  std::string image_uri;
  SftScheme scheme = SftScheme::kVanilla;
  std::string system_text;
  std::string user_text;
  std::string target;  // "yes" or "no"
  // The trainer must zero attention over image tokens for every record.
  bool mask_image_attention = true;
  SftPartition partition = SftPartition::kTrain;
};

struct SftHyperparameters {
  double learning_rate = 1e-5;
  int effective_batch_size = 8;
  std::string optimizer = "adamw_torch";
};

struct SftManifest {
  SftScheme scheme = SftScheme::kVanilla;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  SftHyperparameters hyperparameters;
  std::string freeze_scope = "vision_encoder_only";
  std::string lexicon_hash;  // typed scheme only
  std::string template_hash;
};

struct SftExport {
  std::vector<SftRecord> records;
  SftManifest manifest;
};

struct SftOptions {
  SftScheme scheme = SftScheme::kVanilla;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  const TemplateSet* templates = &TemplateSet::builtin();
  // Required for the typed scheme.
  const OffenseLexicon* lexicon = nullptr;
  TagOptions tag_options;
};

// One record per training fact, each with a single seeded image. Validation
// takes round-half-up(validation_fraction * n) facts chosen by a seeded
// permutation; records stay in fact order. Throws ValidationError on empty
// inputs, non-train facts, or a typed scheme without a lexicon.
SftExport export_sft(std::span<const CaseFact> train_facts, std::span<const ImageRecord> roster,
                     const SftOptions& options);

nlohmann::json to_json(const SftRecord& r);
nlohmann::json to_json(const SftManifest& m);

void write_sft_export(const SftExport& exported, const std::string& records_path,
                      const std::string& manifest_path);

}  // namespace bailaudit
