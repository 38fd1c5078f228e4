#pragma once

// Checkpoint container:
//
//   bytes 0..7   magic "DTCKPT\0\0"
//   u32 LE       format version (1)
//   u64 LE       header length N
//   N bytes      JSON header: model config, LoRA config, seed lineage, and
//                the ordered tensor table [{name, shape}]
//   payload      every tensor's values as little-endian IEEE-754 doubles,
//                in table order
//
// Base weights are named as in TranscriberModel::base_parameters(); adapter
// matrices appear as "lora:<target>.A" and "lora:<target>.B".

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dualtune/model/transcriber.hpp"

namespace dualtune {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SeedLineage = std::map<std::string, std::uint64_t>;

struct Checkpoint {
  TranscriberModel model;
  SeedLineage seeds;
};

void save_checkpoint(const std::filesystem::path& path, const TranscriberModel& model,
                     const SeedLineage& seeds);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json lora_config_to_json(const LoraConfig& cfg);
LoraConfig lora_config_from_json(const nlohmann::json& j);

}  // namespace dualtune
