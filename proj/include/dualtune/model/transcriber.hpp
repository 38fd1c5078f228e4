#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualtune/model/config.hpp"
#include "dualtune/model/lora.hpp"
#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

enum class Phase { Pretrain, Finetune };

/// Final encoder layer output E plus per-frame validity.
struct EncoderOutput {
  num::Tensor features;  // [frames x hidden]
  std::vector<bool> mask;

  std::size_t frames() const { return mask.size(); }
};

struct NamedTensor {
  std::string name;
  num::Tensor tensor;
};

/// Small pre-LN transformer encoder-decoder shaped like Whisper: linear
/// input projection + GELU, sinusoidal encoder positions, self-attention
/// encoder blocks, learned decoder positions, causal self-attention and
/// cross-attention decoder blocks, and an output projection onto the vocab.
///
/// LoRA adapters, when attached, sit on the query and value projections of
/// every attention layer (encoder self, decoder self, decoder cross).
///
/// Move-only: parameter tensors are shared handles, so copies go through
/// clone().
class TranscriberModel {
 public:
  TranscriberModel(ModelConfig config, std::uint64_t init_seed);

  TranscriberModel(TranscriberModel&&) noexcept = default;
  TranscriberModel& operator=(TranscriberModel&&) noexcept = default;
  TranscriberModel(const TranscriberModel&) = delete;
  TranscriberModel& operator=(const TranscriberModel&) = delete;

  TranscriberModel clone() const;

  const ModelConfig& config() const { return config_; }
  std::uint64_t init_seed() const { return init_seed_; }

  /// Attaches fresh adapters (B = 0) to every q/v projection.
  void attach_adapters(const LoraConfig& lora, std::uint64_t seed);
  bool has_adapters() const { return !adapters_.empty(); }
  const std::optional<LoraConfig>& lora_config() const { return lora_; }
  const std::map<std::string, LoraAdapter>& adapters() const { return adapters_; }
  /// Replaces one adapter; used by checkpoint loading.
  void set_adapter(const std::string& target, LoraAdapter adapter, const LoraConfig& lora);
  /// Ids of every matrix that adapters attach to, e.g. "enc.0.attn.q".
  std::vector<std::string> adapter_targets() const;

  const std::vector<NamedTensor>& base_parameters() const { return base_; }
  num::Tensor base_parameter(std::string_view name) const;

  /// pretrain: every base weight. finetune: the A and B of every adapter.
  std::vector<num::Tensor> trainable_parameters(Phase phase) const;
  /// Sets requires_grad so that only trainable_parameters(phase) are live.
  void set_phase(Phase phase);

  EncoderOutput encode(const num::Tensor& features, const ForwardMode& mode) const;
  num::Tensor decoder_forward(const EncoderOutput& encoded, std::span<const int> tokens_in,
                              const ForwardMode& mode) const;

  /// SHA-256 over names, shapes, and raw bytes of the base weights.
  std::string base_digest() const;

  /// Copy with every adapter folded into its base weight and no adapters.
  TranscriberModel merged() const;

 private:
  struct AttentionWeights {
    std::string id;
    num::Tensor wq, bq, wk, wv, bv, wo, bo;
  };
  struct LayerNormWeights {
    num::Tensor gain, bias;
  };
  struct MlpWeights {
    num::Tensor w1, b1, w2, b2;
  };
  struct EncoderBlock {
    LayerNormWeights ln1;
    AttentionWeights attn;
    LayerNormWeights ln2;
    MlpWeights mlp;
  };
  struct DecoderBlock {
    LayerNormWeights ln1;
    AttentionWeights self_attn;
    LayerNormWeights ln2;
    AttentionWeights cross_attn;
    LayerNormWeights ln3;
    MlpWeights mlp;
  };

  num::Tensor param(const std::string& name, num::Shape shape, double stddev, double fill,
                    Rng& rng);
  AttentionWeights make_attention(const std::string& id, Rng& rng);
  LayerNormWeights make_layer_norm(const std::string& id, Rng& rng);
  MlpWeights make_mlp(const std::string& id, Rng& rng);

  const LoraAdapter* adapter(const std::string& id) const;
  num::Tensor attend(const AttentionWeights& w, const num::Tensor& x_query,
                     const num::Tensor& x_memory, bool causal, const std::vector<bool>& key_mask,
                     const ForwardMode& mode) const;
  num::Tensor feed_forward(const MlpWeights& w, const num::Tensor& x) const;

  ModelConfig config_;
  std::uint64_t init_seed_ = 0;
  std::vector<NamedTensor> base_;
  num::Tensor encoder_positions_;  // fixed sinusoid table, not a parameter

  num::Tensor in_w_, in_b_;
  std::vector<EncoderBlock> encoder_;
  LayerNormWeights enc_ln_post_;
  num::Tensor tok_emb_, pos_emb_;
  std::vector<DecoderBlock> decoder_;
  LayerNormWeights dec_ln_post_;
  num::Tensor out_w_, out_b_;

  std::optional<LoraConfig> lora_;
  std::map<std::string, LoraAdapter> adapters_;
};

}  // namespace dualtune
