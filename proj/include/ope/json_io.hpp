#pragma once

#include <filesystem>

#include "json.hpp"
#include "ope/clustering.hpp"
#include "ope/matrix.hpp"
#include "ope/oracle.hpp"
#include "ope/synthgen.hpp"

namespace ope {

nlohmann::json matrix_to_json(const Matrix& m);
// Throws ParseError unless `j` is a rectangular array of number arrays.
Matrix matrix_from_json(const nlohmann::json& j, const char* what = "matrix");

// Unknown keys raise ConfigError.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json synth_config_to_json(const SynthConfig& cfg);

nlohmann::json world_to_json(const SyntheticWorld& world);

nlohmann::json cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

nlohmann::json instance_to_json(const DiscreteInstance& inst);
DiscreteInstance instance_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace ope
