#pragma once

#include <json.hpp>

#include "packetlm/model.hpp"
#include "packetlm/schema.hpp"
#include "packetlm/trainer.hpp"

namespace packetlm {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
// Accepts either an inline "model" object or a "model" preset name string.
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json schema_to_json(const PacketSchema& schema);
PacketSchema schema_from_json(const nlohmann::json& j);

} // namespace packetlm
