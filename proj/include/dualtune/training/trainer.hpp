#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualtune/losses/losses.hpp"
#include "dualtune/model/transcriber.hpp"
#include "dualtune/numerics/rng.hpp"
#include "dualtune/synthdata/generator.hpp"
#include "dualtune/training/adam.hpp"
#include "dualtune/training/plan.hpp"
#include "dualtune/training/schedule.hpp"

namespace dualtune {

enum class Domain { Vocal, Mixture };

struct DomainInput {
  Domain domain;
  num::Tensor features;
};

/// voc -> vocal; mix -> mixture; random -> one of the two from a fair coin
/// (exactly one draw per call); both/cns -> vocal then mixture.
std::vector<DomainInput> select_inputs(Strategy strategy, const PairedSample& sample, Rng& coin);

/// Decoder input/target pair for teacher forcing: tokens[0..n-1] and
/// tokens[1..n].
std::pair<std::vector<int>, std::vector<int>> teacher_forcing_pair(std::span<const int> tokens);

/// The differentiable objective for one batch plus its scalar breakdown.
struct BatchObjective {
  num::Tensor total;
  LossBreakdown breakdown;
};

/// Builds the strategy's loss over a batch: per-sample ALT losses averaged
/// per domain, and for both/cns the per-sample consistency loss averaged and
/// combined as (L_v + L_m) / 2 + w * L_cns (w = 0 for both).
BatchObjective batch_objective(const TranscriberModel& model,
                               std::span<const PairedSample* const> batch, const LossConfig& loss,
                               Rng& coin, const ForwardMode& mode);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepMetrics {
  std::size_t step = 0;
  double lr = 0.0;
  LossBreakdown loss;
  double wall_seconds = 0.0;
  double running_total = 0.0;  // mean L_total over the last 50 steps
};

/// Mutable state of a run: optimizer moments and the three random streams
/// (random-strategy coin, LoRA dropout, batch shuffling), each derived from
/// the plan seed so that one never perturbs another.
struct TrainState {
  explicit TrainState(const TrainPlan& plan);

  LinearWarmupDecay schedule;
  OptimizerState optimizer;
  Rng coin_rng;
  Rng dropout_rng;
  Rng shuffle_rng;
  std::size_t step = 0;
  std::vector<double> recent_totals;
};

/// Zero grads, one forward per selected domain, one backward on L_total,
/// one Adam step over trainable_parameters(plan.phase).
StepMetrics train_step(TranscriberModel& model, std::span<const PairedSample* const> batch,
                       const TrainPlan& plan, TrainState& state);

struct ExperimentResult {
  TranscriberModel model;
  std::vector<StepMetrics> log;
  std::string base_digest_before;
  std::string base_digest_after;
};

using ProgressFn = std::function<void(const StepMetrics&)>;

/// Full training run. For finetune, fresh adapters are attached to the
/// incoming (pretrained) model and the base digest is checked unchanged at
/// the end. Deterministic in (plan, corpus, model_in).
ExperimentResult run_experiment(const TrainPlan& plan, const std::vector<PairedSample>& corpus,
                                TranscriberModel model_in, const ProgressFn& progress = {});

nlohmann::json step_record(const StepMetrics& m);
void write_metrics_log(const std::filesystem::path& path, const std::vector<StepMetrics>& log);

/// Mean teacher-forced ALT loss over samples in eval mode.
double mean_alt_loss(const TranscriberModel& model, const std::vector<PairedSample>& samples,
                     Domain domain);

}  // namespace dualtune
