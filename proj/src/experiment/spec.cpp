#include "dualtune/experiment/spec.hpp"

#include <fstream>
#include <set>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/model/checkpoint.hpp"
#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

using nlohmann::json;

void ExperimentSpec::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("experiment: " + what); };
  if (seeds.empty()) fail("seeds must not be empty");
  std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
  if (unique_seeds.size() != seeds.size()) fail("seeds must be unique");
  try {
    model.validate();
  } catch (const num::ContractError& e) {
    fail(std::string("model: ") + e.what());
  }
  pretrain_data.validate();
  finetune_data.validate();
  if (pretrain_data.max_frames > model.max_audio_frames ||
      finetune_data.max_frames > model.max_audio_frames) {
    fail("data max_frames exceeds model max_audio_frames");
  }
  if (sizes.pretrain == 0 || sizes.train == 0 || sizes.test == 0) {
    fail("pretrain, train and test splits need at least one sample");
  }
  pretrain.validate();
  if (pretrain.phase != Phase::Pretrain) fail("pretrain plan must have phase 'pretrain'");
  if (finetune.empty()) fail("finetune grid must not be empty");
  std::set<std::string> names;
  for (const auto& p : finetune) {
    p.validate();
    if (p.phase != Phase::Finetune) fail("grid plan '" + p.name + "' must have phase 'finetune'");
    if (p.name.empty() || p.name == "pretrained" || p.name.find('/') != std::string::npos) {
      fail("grid plan name '" + p.name + "' is not a usable cell id");
    }
    if (!names.insert(p.name).second) fail("duplicate grid entry '" + p.name + "'");
  }
  decode.validate(model);
}

const TrainPlan& ExperimentSpec::finetune_plan(const std::string& name) const {
  std::string known;
  for (const auto& p : finetune) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  throw ConfigError("strategy '" + name + "' is not in the grid (" + known + ")");
}

void ExperimentSpec::require_seed(std::uint64_t seed) const {
  for (auto s : seeds) {
    if (s == seed) return;
  }
  throw ConfigError("seed " + std::to_string(seed) + " is not in the spec's seeds list");
}

std::vector<TrainPlan> default_strategy_grid(const TrainPlan& base) {
  std::vector<TrainPlan> grid;
  const auto add = [&](Strategy s, ConsistencyKind kind, double weight) {
    TrainPlan p = base;
    p.phase = Phase::Finetune;
    p.loss = {s, kind, weight};
    p.name = strategy_id(p.loss);
    grid.push_back(p);
  };
  for (auto s : {Strategy::Voc, Strategy::Mix, Strategy::Random, Strategy::Both}) {
    add(s, ConsistencyKind::L2, 0.0);
  }
  for (auto kind : {ConsistencyKind::L1, ConsistencyKind::L2}) {
    for (double w : {0.1, 1.0, 10.0}) add(Strategy::Cns, kind, w);
  }
  return grid;
}

ExperimentSpec default_experiment_spec() {
  ExperimentSpec spec;

  spec.pretrain_data.frames_per_token = 2;
  spec.pretrain_data.words_min = 1;
  spec.pretrain_data.words_max = 2;
  spec.pretrain_data.lines_min = 1;
  spec.pretrain_data.lines_max = 1;
  spec.pretrain_data.jitter = 0.3;
  spec.pretrain_data.timbre = 0.0;
  spec.pretrain_data.gain_lo = 0.0;
  spec.pretrain_data.gain_hi = 0.0;
  spec.pretrain_data.corpus_seed = 2024;

  spec.finetune_data = spec.pretrain_data;
  spec.finetune_data.jitter = 0.5;
  spec.finetune_data.timbre = 0.4;
  spec.finetune_data.gain_lo = 0.2;
  spec.finetune_data.gain_hi = 0.6;
  spec.finetune_data.corpus_seed = 2025;

  spec.pretrain.name = "pretrain";
  spec.pretrain.phase = Phase::Pretrain;
  spec.pretrain.loss = {Strategy::Voc, ConsistencyKind::L2, 0.0};
  spec.pretrain.peak_lr = 3e-3;
  spec.pretrain.total_steps = 2000;
  spec.pretrain.seed = 0;

  TrainPlan base;
  base.phase = Phase::Finetune;
  base.peak_lr = 1e-3;
  base.total_steps = 1000;
  spec.finetune = default_strategy_grid(base);
  return spec;
}

json decode_config_to_json(const DecodeConfig& cfg) {
  return json{{"max_tokens", cfg.max_tokens}, {"window_frames", cfg.window_frames}};
}

DecodeConfig decode_config_from_json(const json& j) {
  DecodeConfig cfg;
  FieldReader r(j, "decode");
  r.get("max_tokens", cfg.max_tokens);
  r.get("window_frames", cfg.window_frames);
  r.finish();
  return cfg;
}

json experiment_spec_to_json(const ExperimentSpec& spec) {
  json grid = json::array();
  for (const auto& p : spec.finetune) grid.push_back(train_plan_to_json(p));
  return json{{"output_dir", spec.output_dir.string()},
              {"seeds", spec.seeds},
              {"model", model_config_to_json(spec.model)},
              {"data",
               {{"pretrain", gen_config_to_json(spec.pretrain_data)},
                {"finetune", gen_config_to_json(spec.finetune_data)},
                {"sizes",
                 {{"pretrain", spec.sizes.pretrain},
                  {"train", spec.sizes.train},
                  {"dev", spec.sizes.dev},
                  {"test", spec.sizes.test}}}}},
              {"pretrain", train_plan_to_json(spec.pretrain)},
              {"finetune", grid},
              {"decode", decode_config_to_json(spec.decode)}};
}

namespace {

TrainPlan plan_from_json(const json& j, const std::string& default_name) {
  TrainPlan p = train_plan_from_json(j);
  if (!j.contains("name")) p.name = default_name.empty() ? strategy_id(p.loss) : default_name;
  return p;
}

}  // namespace

ExperimentSpec experiment_spec_from_json(const json& j) {
  ExperimentSpec spec = default_experiment_spec();
  FieldReader r(j, "experiment");
  std::string out;
  if (r.get("output_dir", out)) spec.output_dir = out;
  r.get("seeds", spec.seeds);
  if (const auto* m = r.child("model")) spec.model = model_config_from_json(*m);
  if (const auto* d = r.child("data")) {
    FieldReader dr(*d, "experiment.data");
    if (const auto* g = dr.child("pretrain")) spec.pretrain_data = gen_config_from_json(*g);
    if (const auto* g = dr.child("finetune")) spec.finetune_data = gen_config_from_json(*g);
    if (const auto* s = dr.child("sizes")) {
      FieldReader sr(*s, "experiment.data.sizes");
      sr.get("pretrain", spec.sizes.pretrain);
      sr.get("train", spec.sizes.train);
      sr.get("dev", spec.sizes.dev);
      sr.get("test", spec.sizes.test);
      sr.finish();
    }
    dr.finish();
  }
  if (const auto* p = r.child("pretrain")) {
    json with_phase = *p;
    if (!with_phase.contains("phase")) with_phase["phase"] = "pretrain";
    if (!with_phase.contains("strategy")) with_phase["strategy"] = "voc";
    spec.pretrain = plan_from_json(with_phase, "pretrain");
  }
  if (const auto* g = r.child("finetune")) {
    if (!g->is_array()) throw ConfigError("experiment.finetune: expected an array of plans");
    spec.finetune.clear();
    for (const auto& item : *g) spec.finetune.push_back(plan_from_json(item, ""));
  }
  if (const auto* d = r.child("decode")) spec.decode = decode_config_from_json(*d);
  r.finish();
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("spec file not found: " + path.string());
  try {
    return experiment_spec_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace dualtune
