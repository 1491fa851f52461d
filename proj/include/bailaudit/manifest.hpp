#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace bailaudit {

// Provenance record written next to every artifact as "<artifact>.manifest.json".
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void add_config_hash(const std::string& name, const std::string& hash);
  void set_backend(nlohmann::json descriptor);
  void add_seed(const std::string& name, std::uint64_t seed);
  void add_count(const std::string& stage, std::uint64_t count);
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void set_note(const std::string& key, nlohmann::json value);

  // Stamps the finish time, derives the id and writes the file. Returns the id.
  std::string write(const std::string& artifact_path);

  const std::string& id() const noexcept { return id_; }
  nlohmann::json to_json() const;

  static std::string path_for(const std::string& artifact_path);
  // Reads the id of an artifact's manifest, or "" when there is none.
  static std::string read_id(const std::string& artifact_path);

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::map<std::string, std::string> config_hashes_;
  nlohmann::json backend_;
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::uint64_t> counts_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json notes_ = nlohmann::json::object();
  std::string started_at_;
  std::string finished_at_;
  std::string id_;
};

}  // namespace bailaudit
