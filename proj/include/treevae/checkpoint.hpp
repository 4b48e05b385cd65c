#pragma once

#include "treevae/parameters.hpp"

#include <json.hpp>

#include <filesystem>

namespace treevae {

// Parameters as {"step": n, "parameters": {name: {"shape": [r, c],
// "values": [...row-major...], "m": [...], "v": [...]}}}.
nlohmann::json store_to_json(const diff::ParameterStore& store, bool with_optimizer_state = true);
diff::ParameterStore store_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const diff::Matrix& m);
diff::Matrix matrix_from_json(const nlohmann::json& j);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace treevae
