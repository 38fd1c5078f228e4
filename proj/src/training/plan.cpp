#include "dualtune/training/plan.hpp"

#include <cstdio>
#include <fstream>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/model/checkpoint.hpp"

namespace dualtune {

using nlohmann::json;

std::string to_string(Phase phase) { return phase == Phase::Pretrain ? "pretrain" : "finetune"; }

Phase parse_phase(const std::string& text) {
  if (text == "pretrain") return Phase::Pretrain;
  if (text == "finetune") return Phase::Finetune;
  throw ConfigError("unknown phase '" + text + "' (expected pretrain or finetune)");
}

void TrainPlan::validate() const {
  const auto fail = [this](const std::string& what) {
    throw ConfigError("plan '" + name + "': " + what);
  };
  if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) fail("warmup_frac must lie in (0, 1)");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (total_steps < 2) fail("total_steps must be >= 2");
  if (!(peak_lr > 0.0)) fail("peak_lr must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) fail("eps must be positive");
  try {
    loss.validate();
    lora.validate();
  } catch (const num::ContractError& e) {
    fail(e.what());
  }
}

json train_plan_to_json(const TrainPlan& p) {
  return json{{"name", p.name},
              {"phase", to_string(p.phase)},
              {"strategy", to_string(p.loss.strategy)},
              {"cns_kind", to_string(p.loss.kind)},
              {"weight", p.loss.weight},
              {"peak_lr", p.peak_lr},
              {"total_steps", p.total_steps},
              {"warmup_frac", p.warmup_frac},
              {"batch_size", p.batch_size},
              {"beta1", p.adam.beta1},
              {"beta2", p.adam.beta2},
              {"eps", p.adam.eps},
              {"seed", p.seed},
              {"lora", lora_config_to_json(p.lora)}};
}

TrainPlan train_plan_from_json(const json& j) {
  TrainPlan p;
  FieldReader r(j, "plan");
  r.get("name", p.name);
  std::string text;
  try {
    if (r.get("phase", text)) p.phase = parse_phase(text);
    if (r.get("strategy", text)) p.loss.strategy = parse_strategy(text);
    if (r.get("cns_kind", text)) p.loss.kind = parse_consistency_kind(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  r.get("weight", p.loss.weight);
  r.get("peak_lr", p.peak_lr);
  r.get("total_steps", p.total_steps);
  r.get("warmup_frac", p.warmup_frac);
  r.get("batch_size", p.batch_size);
  r.get("beta1", p.adam.beta1);
  r.get("beta2", p.adam.beta2);
  r.get("eps", p.adam.eps);
  r.get("seed", p.seed);
  if (const auto* lora = r.child("lora")) p.lora = lora_config_from_json(*lora);
  r.finish();
  p.validate();
  return p;
}

TrainPlan load_train_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("plan file not found: " + path.string());
  try {
    return train_plan_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string strategy_id(const LossConfig& loss) {
  if (loss.strategy != Strategy::Cns) return to_string(loss.strategy);
  char weight[32];
  std::snprintf(weight, sizeof weight, "%g", loss.weight);
  std::string w = weight;
  if (w.find_first_of(".e") == std::string::npos) w += ".0";
  return "cns-" + to_string(loss.kind) + "-" + w;
}

}  // namespace dualtune
