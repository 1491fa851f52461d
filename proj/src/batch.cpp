#include "bailaudit/batch.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "bailaudit/errors.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

namespace {

std::string pair_key(std::string_view image_id, std::string_view case_id) {
  std::string k(image_id);
  k.push_back('\x1f');
  k.append(case_id);
  return k;
}

// Completed records from an earlier run. A torn final line (interrupted
// write) is cut off so later appends start on a fresh line; corruption
// anywhere else is an error.
std::unordered_map<std::string, PredictionRecord> read_checkpoint(const std::string& path,
                                                                  Configuration cfg) {
  std::unordered_map<std::string, PredictionRecord> out;
  if (!std::filesystem::exists(path)) return out;
  const std::string content = text::read_file(path);
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  for (std::size_t pos = 0; pos < content.size();) {
    const std::size_t nl = content.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? content.size() : nl;
    const std::string_view line(content.data() + pos, end - pos);
    if (!text::trim(line).empty()) lines.emplace_back(pos, line);
    pos = end + 1;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json j;
    try {
      j = json::parse(lines[i].second);
    } catch (const json::parse_error&) {
      if (i + 1 == lines.size()) {
        std::filesystem::resize_file(path, lines[i].first);
        break;
      }
      throw ValidationError("checkpoint " + path + " is corrupt at line " + std::to_string(i + 1));
    }
    PredictionRecord r = prediction_from_json(j);
    if (r.configuration != cfg)
      throw ValidationError("checkpoint " + path + " holds " +
                            std::string(to_string(r.configuration)) + " records, batch is " +
                            std::string(to_string(cfg)));
    out.insert_or_assign(pair_key(r.image_id, r.case_id), std::move(r));
  }
  if (!content.empty() && content.back() != '\n' && std::filesystem::file_size(path) == content.size()) {
    std::ofstream fix(path, std::ios::binary | std::ios::app);
    fix << '\n';
  }
  return out;
}

class CheckpointWriter {
 public:
  CheckpointWriter(std::string path, std::size_t every) : path_(std::move(path)), every_(every) {
    if (every_ == 0) every_ = 1;
  }

  void add(const PredictionRecord& r) {
    if (path_.empty()) return;
    std::lock_guard lock(mu_);
    pending_ += to_json(r).dump();
    pending_.push_back('\n');
    if (++pending_count_ >= every_) flush_locked();
  }

  void flush() {
    if (path_.empty()) return;
    std::lock_guard lock(mu_);
    flush_locked();
  }

 private:
  void flush_locked() {
    if (pending_.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to checkpoint " + path_);
    out << pending_;
    out.flush();
    pending_.clear();
    pending_count_ = 0;
  }

  std::string path_;
  std::size_t every_;
  std::mutex mu_;
  std::string pending_;
  std::size_t pending_count_ = 0;
};

}  // namespace

BatchResult run_batch(std::span<const Pair> pairs, const BatchInputs& inputs, Configuration cfg,
                      const ModelBackend& backend, const PrecedentIndex* index,
                      const Embedder* embedder, const BatchOptions& options) {
  const bool rag = uses_retrieval(cfg);
  const bool typed = uses_typed_facts(cfg);
  const std::string cfg_name(to_string(cfg));
  if (rag && !index) throw ValidationError(cfg_name + " needs a precedent index");
  if (!rag && index) throw ValidationError(cfg_name + " does not use a precedent index");
  if (rag) {
    if (!embedder) throw ValidationError(cfg_name + " needs the index embedder");
    if (embedder->name() != index->embedder_name())
      throw ValidationError("index was built with '" + index->embedder_name() +
                            "' but the query embedder is '" + embedder->name() + "'");
    const auto want = typed ? IndexTextKind::kTyped : IndexTextKind::kFact;
    if (index->text_kind() != want)
      throw ValidationError(cfg_name + " needs an index over " + std::string(to_string(want)) +
                            " texts, got " + std::string(to_string(index->text_kind())));
    if (index->empty()) throw ValidationError("precedent index is empty");
  }
  if (!inputs.templates || !inputs.rules) throw ValidationError("batch inputs lack templates or rules");

  for (const auto& p : pairs) {
    const auto f = inputs.facts.find(p.case_id);
    if (f == inputs.facts.end()) throw ValidationError("pair references unknown case " + p.case_id);
    if (!inputs.images.contains(p.image_id))
      throw ValidationError("pair references unknown image " + p.image_id);
    if (f->second.split != p.split)
      throw ValidationError("pair split disagrees with fact split for case " + p.case_id);
    if (rag && p.split == Split::kTrain)
      throw ValidationError(cfg_name + " must not query the index with training case " + p.case_id);
    if (typed && !f->second.typed_text)
      throw ValidationError(cfg_name + " needs the typed rendering of case " + p.case_id);
  }

  // Retrieval is per fact, not per pair.
  std::unordered_map<std::string, std::vector<PrecedentText>> precedents;
  if (rag) {
    for (const auto& p : pairs) {
      if (precedents.contains(p.case_id)) continue;
      const FactView& fact = inputs.facts.at(p.case_id);
      const std::string& query = typed ? *fact.typed_text : fact.text;
      const auto hits = retrieve_top_k(*index, *embedder, query, inputs.k, p.case_id);
      std::vector<PrecedentText> texts;
      for (const auto& n : hits.ranked) {
        const IndexEntry* e = index->find(n.case_id);
        texts.push_back(PrecedentText{e->case_id, e->text, e->bail_granted});
      }
      precedents.emplace(p.case_id, std::move(texts));
    }
  }

  BatchResult result;
  result.outcomes.resize(pairs.size());
  std::unordered_map<std::string, PredictionRecord> resumed;
  if (!options.checkpoint_path.empty()) resumed = read_checkpoint(options.checkpoint_path, cfg);

  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    result.outcomes[i].pair = pairs[i];
    const auto it = resumed.find(pair_key(pairs[i].image_id, pairs[i].case_id));
    if (it != resumed.end()) {
      result.outcomes[i].record = it->second;
      ++result.resumed;
    } else {
      work.push_back(i);
    }
  }

  CheckpointWriter checkpoint(options.checkpoint_path, options.checkpoint_every);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> queried{0};
  std::vector<char> reached(work.size(), 0);

  auto process = [&](std::size_t w) {
    const std::size_t i = work[w];
    const Pair& pair = pairs[i];
    BatchOutcome& outcome = result.outcomes[i];
    const FactView& fact = inputs.facts.at(pair.case_id);
    try {
      PromptInput in;
      in.case_id = pair.case_id;
      in.fact_text = fact.text;
      if (typed) in.typed_text = fact.typed_text;
      in.image_ref = inputs.images.at(pair.image_id);
      std::optional<std::vector<PrecedentText>> prec;
      if (rag) prec = precedents.at(pair.case_id);
      const PromptBundle bundle = build_prompt(cfg, in, prec, *inputs.templates, inputs.prompt_options);
      ++queried;
      const RawResponse raw = query_model(backend, bundle, {pair.image_id, pair.case_id}, cfg);
      PredictionRecord rec;
      rec.image_id = pair.image_id;
      rec.case_id = pair.case_id;
      rec.configuration = cfg;
      rec.decision = parse_decision(raw.text, *inputs.rules);
      rec.confidence = bundle.asks_confidence ? parse_confidence(raw.text) : Confidence::kAbsent;
      rec.ground_truth = fact.bail_granted;
      rec.group = pair.group;
      rec.response = raw.text;
      rec.attempts = raw.attempt_count;
      checkpoint.add(rec);
      outcome.record = std::move(rec);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  };

  auto worker = [&] {
    while (!options.stop.stop_requested()) {
      const std::size_t w = next.fetch_add(1);
      if (w >= work.size()) break;
      reached[w] = 1;
      process(w);
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallelism, work.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  checkpoint.flush();

  for (std::size_t w = 0; w < work.size(); ++w) {
    if (!reached[w]) {
      auto& o = result.outcomes[work[w]];
      o.cancelled = true;
      o.error = "cancelled before the pair was queried";
    }
  }
  result.queried = queried.load();
  for (const auto& o : result.outcomes)
    if (!o.ok()) ++result.failed;
  return result;
}

json to_json(const BatchOutcome& outcome, Configuration cfg) {
  if (outcome.record) return to_json(*outcome.record);
  json j = {{"image_id", outcome.pair.image_id},
            {"case_id", outcome.pair.case_id},
            {"configuration", to_string(cfg)},
            {"group", to_string(outcome.pair.group)},
            {"error", outcome.error}};
  if (outcome.cancelled) j["cancelled"] = true;
  return j;
}

}  // namespace bailaudit
