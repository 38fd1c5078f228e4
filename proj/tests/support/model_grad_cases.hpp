#pragma once

// Finite-difference cases above the op level: the LoRA linear layer and the
// full cns training objective of a tiny model.

#include <vector>

#include "grad_cases.hpp"
#include "dualtune/model/lora.hpp"
#include "dualtune/model/transcriber.hpp"
#include "dualtune/synthdata/generator.hpp"
#include "dualtune/training/trainer.hpp"

namespace oracle {

/// Train mode with dropout; the mask stream is re-seeded per evaluation so
/// every call sees the same mask.
inline GradCase lora_linear_case() {
  return {"lora_linear", [](Rng& rng, auto& leaves, auto& f) {
            namespace d = dualtune;
            d::LoraConfig cfg;
            cfg.rank = 2;
            cfg.dropout = 0.3;
            auto adapter = d::LoraAdapter::create(4, 3, cfg, rng);
            for (auto& v : adapter.b.mutable_values()) v = rng.normal();
            auto w = random_tensor(rng, {3, 4});
            auto bias = random_tensor(rng, {3});
            auto x = random_tensor(rng, {5, 4});
            const auto r = random_tensor(rng, {5, 3}, 1.0, false);
            leaves = {adapter.a, adapter.b, w, bias, x};
            f = [=] {
              Rng mask_rng(99);
              return weighted_sum(
                  d::lora_linear(&adapter, w, bias, x, d::ForwardMode::training(mask_rng)), r);
            };
          }};
}

/// (L_v + L_m) / 2 + w * L_cns over a two-sample batch of a one-layer model
/// with random adapters. Leaves are every adapter matrix plus the vocal and
/// mixture features, so both encoder paths are checked separately. The
/// consistency kind and weight are drawn per instance.
inline GradCase cns_objective_case() {
  return {"cns_objective",
          [](Rng& rng, auto& leaves, auto& f) {
            namespace d = dualtune;
            d::ModelConfig cfg;
            cfg.feature_dim = 6;
            cfg.hidden_dim = 8;
            cfg.num_heads = 2;
            cfg.encoder_layers = 1;
            cfg.decoder_layers = 1;
            cfg.mlp_dim = 12;
            cfg.max_audio_frames = 24;
            cfg.max_token_len = 16;
            d::GenConfig gen;
            gen.frames_per_token = 2;
            gen.max_frames = 20;
            gen.words_max = 1;
            gen.lines_max = 1;
            gen.gain_lo = 0.5;
            gen.gain_hi = 1.0;

            auto model = std::make_shared<d::TranscriberModel>(cfg, rng.next_u64());
            d::LoraConfig lora;
            lora.rank = 2;
            lora.alpha = 3.0;
            model->attach_adapters(lora, rng.next_u64());
            for (const auto& [name, adapter] : model->adapters()) {
              auto b = adapter.b;
              for (auto& v : b.mutable_values()) v = 0.3 * rng.normal();
            }
            auto samples = std::make_shared<std::vector<d::PairedSample>>();
            for (int i = 0; i < 2; ++i) samples->push_back(d::generate_sample(rng.next_u64(), gen, 6));
            leaves = model->trainable_parameters(d::Phase::Finetune);
            for (auto& s : *samples) {
              s.vocal = Tensor::from(s.vocal.shape(),
                                     std::vector<double>(s.vocal.values().begin(), s.vocal.values().end()),
                                     true);
              s.mixture = Tensor::from(
                  s.mixture.shape(),
                  std::vector<double>(s.mixture.values().begin(), s.mixture.values().end()), true);
              leaves.push_back(s.vocal);
              leaves.push_back(s.mixture);
            }
            const d::LossConfig loss{d::Strategy::Cns,
                                     rng.bernoulli(0.5) ? d::ConsistencyKind::L1 : d::ConsistencyKind::L2,
                                     rng.bernoulli(0.5) ? 1.0 : 10.0};
            const auto drop_seed = rng.next_u64();
            f = [=] {
              std::vector<const d::PairedSample*> batch;
              for (const auto& s : *samples) batch.push_back(&s);
              Rng coin(1), drop(drop_seed);
              return d::batch_objective(*model, batch, loss, coin, d::ForwardMode::training(drop)).total;
            };
          },
          1e-5};
}

}  // namespace oracle
