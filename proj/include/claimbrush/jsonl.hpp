#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimbrush/errors.hpp"

namespace claimbrush::jsonl {

using Json = nlohmann::json;

/// Calls visit for every non-blank line of a UTF-8 JSONL file with its
/// 1-based line number. Malformed JSON, and schema errors raised by visit as
/// nlohmann exceptions or std::invalid_argument, surface as ParseError.
void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, std::size_t)>& visit);

void write(const std::filesystem::path& path, const std::vector<Json>& rows);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);

/// Reads a required string member; throws std::invalid_argument.
std::string require_string(const Json& row, const char* key);
/// Reads an optional array of strings; missing or null gives an empty list.
std::vector<std::string> string_list(const Json& row, const char* key);

}  // namespace claimbrush::jsonl
