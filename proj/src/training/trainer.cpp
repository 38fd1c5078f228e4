#include "dualtune/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dualtune/numerics/ops.hpp"

namespace dualtune {

using nlohmann::json;
using num::Tensor;

namespace {

enum Stream : std::uint64_t { kCoinStream = 1, kDropoutStream = 2, kShuffleStream = 3, kAdapterStream = 4 };

Tensor mean_of(const std::vector<Tensor>& xs) {
  Tensor acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = num::add(acc, xs[i]);
  return num::scale(acc, 1.0 / static_cast<double>(xs.size()));
}

}  // namespace

std::vector<DomainInput> select_inputs(Strategy strategy, const PairedSample& sample, Rng& coin) {
  switch (strategy) {
    case Strategy::Voc: return {{Domain::Vocal, sample.vocal}};
    case Strategy::Mix: return {{Domain::Mixture, sample.mixture}};
    case Strategy::Random:
      if (coin.bernoulli(0.5)) return {{Domain::Vocal, sample.vocal}};
      return {{Domain::Mixture, sample.mixture}};
    case Strategy::Both:
    case Strategy::Cns: return {{Domain::Vocal, sample.vocal}, {Domain::Mixture, sample.mixture}};
  }
  return {};
}

std::pair<std::vector<int>, std::vector<int>> teacher_forcing_pair(std::span<const int> tokens) {
  if (tokens.size() < 2) throw num::ContractError("token sequence needs BOS and EOS");
  return {std::vector<int>(tokens.begin(), tokens.end() - 1),
          std::vector<int>(tokens.begin() + 1, tokens.end())};
}

BatchObjective batch_objective(const TranscriberModel& model,
                               std::span<const PairedSample* const> batch, const LossConfig& loss,
                               Rng& coin, const ForwardMode& mode) {
  if (batch.empty()) throw num::ContractError("empty batch");
  std::vector<Tensor> all, vocal, mixture, consistency;
  for (const PairedSample* sample : batch) {
    const auto [y_in, y_out] = teacher_forcing_pair(sample->tokens);
    Tensor enc_v, enc_m;
    std::vector<bool> mask;
    for (const auto& input : select_inputs(loss.strategy, *sample, coin)) {
      auto encoded = model.encode(input.features, mode);
      Tensor logits = model.decoder_forward(encoded, y_in, mode);
      Tensor l = alt_loss(logits, y_out);
      all.push_back(l);
      if (input.domain == Domain::Vocal) {
        vocal.push_back(l);
        enc_v = encoded.features;
      } else {
        mixture.push_back(l);
        enc_m = encoded.features;
      }
      mask = std::move(encoded.mask);
    }
    if (loss.strategy == Strategy::Both || loss.strategy == Strategy::Cns) {
      consistency.push_back(consistency_loss(enc_v, enc_m, loss.kind, mask));
    }
  }

  BatchObjective out;
  auto& bd = out.breakdown;
  Tensor lv = vocal.empty() ? Tensor() : mean_of(vocal);
  Tensor lm = mixture.empty() ? Tensor() : mean_of(mixture);
  if (lv.defined()) bd.alt_vocal = lv.item();
  if (lm.defined()) bd.alt_mixture = lm.item();
  if (consistency.empty()) {
    out.total = mean_of(all);
  } else {
    Tensor lc = mean_of(consistency);
    bd.consistency = lc.item();
    const double w = loss.strategy == Strategy::Cns ? loss.weight : 0.0;
    out.total = combined_loss(lv, lm, lc, w);
  }
  bd.total = out.total.item();
  return out;
}

TrainState::TrainState(const TrainPlan& plan)
    : schedule(plan.total_steps, plan.peak_lr, plan.warmup_frac),
      coin_rng(derive_seed(plan.seed, kCoinStream)),
      dropout_rng(derive_seed(plan.seed, kDropoutStream)),
      shuffle_rng(derive_seed(plan.seed, kShuffleStream)) {}

StepMetrics train_step(TranscriberModel& model, std::span<const PairedSample* const> batch,
                       const TrainPlan& plan, TrainState& state) {
  const auto started = std::chrono::steady_clock::now();
  auto params = model.trainable_parameters(plan.phase);
  if (params.empty()) throw TrainingError("no trainable parameters for phase " + to_string(plan.phase));
  num::zero_grads(params);

  const std::size_t step = state.step + 1;
  auto objective =
      batch_objective(model, batch, plan.loss, state.coin_rng, ForwardMode::training(state.dropout_rng));
  if (!std::isfinite(objective.breakdown.total)) {
    throw TrainingError("non-finite loss at step " + std::to_string(step));
  }
  num::backward(objective.total);
  const double lr = state.schedule(step);
  try {
    adam_step(params, state.optimizer, lr, plan.adam);
  } catch (const NonFiniteGradient& e) {
    throw TrainingError(std::string(e.what()) + " (step " + std::to_string(step) + ")");
  }
  state.step = step;

  StepMetrics m;
  m.step = step;
  m.lr = lr;
  m.loss = objective.breakdown;
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  state.recent_totals.push_back(m.loss.total);
  if (state.recent_totals.size() > 50) state.recent_totals.erase(state.recent_totals.begin());
  m.running_total = std::accumulate(state.recent_totals.begin(), state.recent_totals.end(), 0.0) /
                    static_cast<double>(state.recent_totals.size());
  return m;
}

ExperimentResult run_experiment(const TrainPlan& plan, const std::vector<PairedSample>& corpus,
                                TranscriberModel model_in, const ProgressFn& progress) {
  plan.validate();
  if (corpus.empty()) throw TrainingError("plan '" + plan.name + "': empty training corpus");
  ExperimentResult result{std::move(model_in), {}, {}, {}};
  auto& model = result.model;
  if (plan.phase == Phase::Finetune) {
    if (model.has_adapters()) {
      throw TrainingError("plan '" + plan.name + "': fine-tuning expects an adapter-free model");
    }
    model.attach_adapters(plan.lora, derive_seed(plan.seed, kAdapterStream));
  } else {
    model.set_phase(Phase::Pretrain);
  }
  result.base_digest_before = model.base_digest();

  TrainState state(plan);
  std::vector<std::size_t> order(corpus.size());
  std::size_t cursor = order.size();
  const std::size_t batch_size = std::min(plan.batch_size, corpus.size());
  std::vector<const PairedSample*> batch;
  for (std::size_t s = 0; s < plan.total_steps; ++s) {
    if (cursor + batch_size > order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            state.shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
      }
      cursor = 0;
    }
    batch.clear();
    for (std::size_t k = 0; k < batch_size; ++k) batch.push_back(&corpus[order[cursor++]]);
    try {
      result.log.push_back(train_step(model, batch, plan, state));
    } catch (const TrainingError& e) {
      throw TrainingError("plan '" + plan.name + "' aborted: " + e.what() +
                          "; last good state is the input model (no checkpoint written)");
    }
    if (progress) progress(result.log.back());
  }

  result.base_digest_after = model.base_digest();
  if (plan.phase == Phase::Finetune && result.base_digest_after != result.base_digest_before) {
    throw TrainingError("plan '" + plan.name + "': base weights changed during fine-tuning");
  }
  return result;
}

json step_record(const StepMetrics& m) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  return json{{"step", m.step},
              {"lr", m.lr},
              {"L_v", opt(m.loss.alt_vocal)},
              {"L_m", opt(m.loss.alt_mixture)},
              {"L_CNS", opt(m.loss.consistency)},
              {"L_total", m.loss.total}};
}

void write_metrics_log(const std::filesystem::path& path, const std::vector<StepMetrics>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TrainingError("cannot write metrics log " + path.string());
  for (const auto& m : log) out << step_record(m).dump() << '\n';
}

double mean_alt_loss(const TranscriberModel& model, const std::vector<PairedSample>& samples,
                     Domain domain) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) {
    const auto [y_in, y_out] = teacher_forcing_pair(s.tokens);
    auto enc = model.encode(domain == Domain::Vocal ? s.vocal : s.mixture, ForwardMode::eval());
    total += alt_loss(model.decoder_forward(enc, y_in, ForwardMode::eval()), y_out).item();
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace dualtune
