#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bailaudit::jsonl {

using nlohmann::json;

// Calls `fn(object, line_number)` for every non-blank line. Throws
// IngestionError naming the file and line on malformed JSON.
void for_each(const std::string& path, const std::function<void(const json&, std::size_t)>& fn);

std::vector<json> read_all(const std::string& path);

// One compact JSON object per line, '\n' terminated.
void write_all(const std::string& path, const std::vector<json>& rows);

// Field accessors that raise IngestionError with a useful message.
std::string require_string(const json& obj, const char* key, const std::string& record_id = {});
bool require_bool(const json& obj, const char* key, const std::string& record_id = {});

}  // namespace bailaudit::jsonl
