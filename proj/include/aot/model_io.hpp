#pragma once

#include <filesystem>
#include "json.hpp"

#include "aot/pomdp.hpp"

namespace aot {

nlohmann::json to_json(const TabularPomdp& model);

/// Parses and validates; errors name the offending field (and row).
TabularPomdp tabular_from_json(const nlohmann::json& doc);

TabularPomdp load_tabular(const std::filesystem::path& path);
void save_tabular(const TabularPomdp& model, const std::filesystem::path& path);

/// Writes `text` to `path`, throwing Error{Io} on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace aot
