#pragma once

// JSON (de)serialization for configuration structs and evaluation results.
// Implemented in configio.cpp so the JSON library stays out of public headers.

#include <string>

#include "tcr3/config.hpp"

namespace tcr3 {

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json);

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json);

}  // namespace tcr3
