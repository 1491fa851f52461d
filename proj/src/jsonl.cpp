#include "bailaudit/jsonl.hpp"

#include <fstream>

#include "bailaudit/errors.hpp"
#include "bailaudit/text.hpp"

namespace bailaudit::jsonl {

void for_each(const std::string& path,
              const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError({}, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestionError({}, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object())
      throw IngestionError({}, path + ":" + std::to_string(line_no) + ": expected a JSON object");
    fn(obj, line_no);
  }
}

std::vector<json> read_all(const std::string& path) {
  std::vector<json> out;
  for_each(path, [&](const json& j, std::size_t) { out.push_back(j); });
  return out;
}

void write_all(const std::string& path, const std::vector<json>& rows) {
  std::string buf;
  for (const auto& r : rows) {
    buf += r.dump();
    buf.push_back('\n');
  }
  text::write_file(path, buf);
}

std::string require_string(const json& obj, const char* key, const std::string& record_id) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw IngestionError(record_id, std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

bool require_bool(const json& obj, const char* key, const std::string& record_id) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_boolean())
    throw IngestionError(record_id, std::string("missing or non-boolean field '") + key + "'");
  return it->get<bool>();
}

}  // namespace bailaudit::jsonl
