#pragma once

// nlohmann conversions shared by the config and checkpoint readers.

#include <json.hpp>

#include "jlm/train.hpp"

namespace jlm::detail {

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_from_json(const nlohmann::json& j, ModelConfig base);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_from_json(const nlohmann::json& j);

}  // namespace jlm::detail
