#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dualtune/losses/losses.hpp"
#include "dualtune/model/config.hpp"
#include "dualtune/model/transcriber.hpp"
#include "dualtune/training/adam.hpp"

namespace dualtune {

/// Everything one training run needs besides data and the starting model.
///
/// JSON form (all keys optional on input except that unknown keys are
/// rejected; output always carries every key):
///   {"name": "cns-L2-1.0", "phase": "finetune", "strategy": "cns",
///    "cns_kind": "L2", "weight": 1.0, "peak_lr": 0.001, "total_steps": 1000,
///    "warmup_frac": 0.1, "batch_size": 16, "beta1": 0.9, "beta2": 0.999,
///    "eps": 1e-8, "seed": 0, "lora": {"rank": 4, "alpha": 4, "dropout": 0.1}}
struct TrainPlan {
  std::string name = "plan";
  Phase phase = Phase::Finetune;
  LossConfig loss;
  double peak_lr = 1e-3;
  std::size_t total_steps = 1000;
  double warmup_frac = 0.1;
  std::size_t batch_size = 16;
  AdamHyper adam;
  std::uint64_t seed = 0;
  LoraConfig lora;

  void validate() const;
};

std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

nlohmann::json train_plan_to_json(const TrainPlan& plan);
TrainPlan train_plan_from_json(const nlohmann::json& j);
TrainPlan load_train_plan(const std::filesystem::path& path);

/// Grid cell id derived from the objective: "voc", "mix", "random", "both",
/// or "cns-<kind>-<weight>" such as "cns-L2-1.0".
std::string strategy_id(const LossConfig& loss);

}  // namespace dualtune
