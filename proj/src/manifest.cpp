#include "bailaudit/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "bailaudit/hashing.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit {

using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_at_(utc_now()) {}

void RunManifest::add_config_hash(const std::string& name, const std::string& hash) {
  config_hashes_[name] = hash;
}
void RunManifest::set_backend(json descriptor) { backend_ = std::move(descriptor); }
void RunManifest::add_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }
void RunManifest::add_count(const std::string& stage, std::uint64_t count) { counts_[stage] = count; }
void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }
void RunManifest::set_note(const std::string& key, json value) { notes_[key] = std::move(value); }

json RunManifest::to_json() const {
  json j = {{"schema", "bailaudit.run_manifest/1"},
            {"command", command_},
            {"argv", argv_},
            {"config_hashes", config_hashes_},
            {"backend", backend_},
            {"seeds", seeds_},
            {"counts", counts_},
            {"inputs", inputs_},
            {"outputs", outputs_},
            {"notes", notes_},
            {"started_at", started_at_},
            {"finished_at", finished_at_}};
  if (!id_.empty()) j["id"] = id_;
  return j;
}

std::string RunManifest::write(const std::string& artifact_path) {
  finished_at_ = utc_now();
  id_.clear();
  id_ = sha256_hex(to_json().dump()).substr(0, 16);
  text::write_file(path_for(artifact_path), to_json().dump(2) + "\n");
  return id_;
}

std::string RunManifest::path_for(const std::string& artifact_path) {
  return artifact_path + ".manifest.json";
}

std::string RunManifest::read_id(const std::string& artifact_path) {
  std::ifstream in(path_for(artifact_path));
  if (!in) return {};
  try {
    const json j = json::parse(in);
    return j.value("id", "");
  } catch (const json::exception&) {
    return {};
  }
}

}  // namespace bailaudit
