#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mlcwmd/dgp.hpp"
#include "mlcwmd/em.hpp"

namespace mlcwmd {

using Json = nlohmann::ordered_json;

inline constexpr const char* k_tool_version = "0.1.0";
inline constexpr const char* k_fit_schema_version = "1.0";

Json model_fit_to_json(const ModelFit& fit);
ModelFit model_fit_from_json(const Json& j);  // rejects unknown majors

void save_model_fit(const ModelFit& fit, const std::string& path);
ModelFit load_model_fit(const std::string& path);

Json fit_config_to_json(const FitConfig& cfg);
// Parses the "model"/"seed" keys of a config document; unknown keys error.
FitConfig fit_config_from_json(const Json& j);

Json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const Json& j);

Json roles_to_json(const RoleMap& roles);
RoleMap roles_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex
std::string file_digest(const std::string& path);

}  // namespace mlcwmd
