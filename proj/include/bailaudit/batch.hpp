#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <unordered_map>
#include <vector>

#include "bailaudit/backend.hpp"
#include "bailaudit/eval.hpp"
#include "bailaudit/pairing.hpp"
#include "bailaudit/prompting.hpp"
#include "bailaudit/retrieval.hpp"

namespace bailaudit {

struct FactView {
  std::string text;
  std::optional<std::string> typed_text;
  bool bail_granted = false;
  Split split = Split::kTest;
};

// Everything a batch needs to turn a Pair into a prompt.
struct BatchInputs {
  std::unordered_map<std::string, FactView> facts;   // by case_id
  std::unordered_map<std::string, std::string> images;  // image_id -> uri
  const TemplateSet* templates = &TemplateSet::builtin();
  const DecisionRules* rules = &DecisionRules::builtin();
  PromptOptions prompt_options;
  std::size_t k = 3;
};

struct BatchOptions {
  std::size_t parallelism = 1;
  // JSONL of completed PredictionRecords; reused on the next run.
  std::string checkpoint_path;
  std::size_t checkpoint_every = 100;
  // Workers stop taking new pairs once a stop is requested; pairs not reached
  // come back as errors with `cancelled` set.
  std::stop_token stop;
};

struct BatchOutcome {
  Pair pair;
  std::optional<PredictionRecord> record;
  std::string error;
  bool cancelled = false;

  bool ok() const noexcept { return record.has_value(); }
};

struct BatchResult {
  std::vector<BatchOutcome> outcomes;  // input order
  std::size_t queried = 0;
  std::size_t resumed = 0;
  std::size_t failed = 0;
};

// Queries the backend for every pair. Retrieval configurations need an index
// and the embedder it was built with; other configurations must not get one.
// Throws ValidationError when those preconditions fail, when a pair references
// an unknown fact or image, or when a retrieval configuration is handed a
// training pair. Single-pair failures never abort the batch.
BatchResult run_batch(std::span<const Pair> pairs, const BatchInputs& inputs,
                      Configuration cfg, const ModelBackend& backend,
                      const PrecedentIndex* index, const Embedder* embedder,
                      const BatchOptions& options = {});

nlohmann::json to_json(const BatchOutcome& outcome, Configuration cfg);

}  // namespace bailaudit
