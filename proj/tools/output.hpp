#pragma once

#include <json.hpp>
#include <string>

namespace hsptool {

using Json = nlohmann::ordered_json;

/// Write-then-rename so readers never observe a partial artifact.
void atomic_write(const std::string& path, const std::string& content);

void write_json(const std::string& path, const Json& value);

/// Ensure the directory exists and return `dir/name`.
std::string out_path(const std::string& dir, const std::string& name);

}  // namespace hsptool
