#pragma once

// Experiment spec file (JSON). Every key is optional; unknown keys are
// rejected. Defaults are those of default_experiment_spec().
//
//   {
//     "output_dir": "runs/default",
//     "seeds": [1, 2, 3, 4, 5],
//     "model": {ModelConfig},
//     "data": {
//       "pretrain": {GenConfig},      // source domain (speech-like)
//       "finetune": {GenConfig},      // target domain (singing-like)
//       "sizes": {"pretrain": 2000, "train": 400, "dev": 64, "test": 200}
//     },
//     "pretrain": {TrainPlan},
//     "finetune": [{TrainPlan}, ...],  // the strategy grid
//     "decode": {"max_tokens": 32, "window_frames": 64}
//   }
//
// Grid plans are named by strategy_id() unless they carry a "name". Their
// "seed" is replaced by each entry of "seeds" when a cell runs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualtune/decoding/decoder.hpp"
#include "dualtune/model/config.hpp"
#include "dualtune/synthdata/generator.hpp"
#include "dualtune/training/plan.hpp"

namespace dualtune {

struct SplitSizes {
  std::size_t pretrain = 2000;
  std::size_t train = 400;
  std::size_t dev = 64;
  std::size_t test = 2000;
};

struct ExperimentSpec {
  std::filesystem::path output_dir = "runs/default";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  ModelConfig model;
  GenConfig pretrain_data;
  GenConfig finetune_data;
  SplitSizes sizes;
  TrainPlan pretrain;
  std::vector<TrainPlan> finetune;
  DecodeConfig decode;

  /// Throws ConfigError on duplicate grid names, duplicate seeds, phase
  /// mismatches, or inconsistent sub-configs.
  void validate() const;

  /// Grid plan by name; ConfigError listing the grid when absent.
  const TrainPlan& finetune_plan(const std::string& name) const;
  /// ConfigError when `seed` is not in the seeds list.
  void require_seed(std::uint64_t seed) const;
};

/// voc, mix, random, both, then cns x {L1, L2} x {0.1, 1.0, 10.0}, all
/// sharing `base` apart from the objective.
std::vector<TrainPlan> default_strategy_grid(const TrainPlan& base);

ExperimentSpec default_experiment_spec();

nlohmann::json decode_config_to_json(const DecodeConfig& cfg);
DecodeConfig decode_config_from_json(const nlohmann::json& j);

nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

}  // namespace dualtune
