#include "claimbrush/jsonl.hpp"

#include <fstream>
#include <stdexcept>

namespace claimbrush::jsonl {

void for_each(const std::filesystem::path& path,
              const std::function<void(const Json&, std::size_t)>& visit) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      visit(Json::parse(line), number);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(number, path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(number, path.string() + ": " + e.what());
    }
  }
}

void write(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const Json& row : rows) out << row.dump() << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << value.dump(2) << '\n';
}

std::string require_string(const Json& row, const char* key) {
  if (!row.is_object() || !row.contains(key) || !row.at(key).is_string()) {
    throw std::invalid_argument(std::string("missing string field '") + key + "'");
  }
  return row.at(key).get<std::string>();
}

std::vector<std::string> string_list(const Json& row, const char* key) {
  if (!row.contains(key) || row.at(key).is_null()) return {};
  if (!row.at(key).is_array()) {
    throw std::invalid_argument(std::string("field '") + key + "' must be an array");
  }
  return row.at(key).get<std::vector<std::string>>();
}

}  // namespace claimbrush::jsonl
