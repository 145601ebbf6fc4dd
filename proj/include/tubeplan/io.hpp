#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "tubeplan/errors.hpp"

namespace tubeplan {

using json = nlohmann::json;

// FNV-1a 64-bit over a byte string. Used for provenance hashes of canonical
// JSON documents; stability across platforms matters more than strength.
uint64_t fnv1a64(const std::string& bytes);

std::string hash_hex(uint64_t h);

// Parses a JSON file, mapping I/O and syntax errors to ConfigError with the
// file path in the message.
json load_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

// Fetches a required key, throwing ConfigError naming the key when absent.
const json& require_key(const json& j, const std::string& key, const std::string& ctx);

}  // namespace tubeplan
