#pragma once

#include <cstddef>

namespace dualtune {

/// Reserved token ids shared by the tokenizer, losses, and decoders.
namespace tokens {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
}  // namespace tokens

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t num_heads = 2;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t mlp_dim = 64;
  std::size_t vocab_size = 30;  // PAD, BOS, EOS, space, a-z
  std::size_t max_audio_frames = 64;
  std::size_t max_token_len = 32;

  /// Throws ContractError on an inconsistent configuration.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct LoraConfig {
  std::size_t rank = 4;
  double alpha = 4.0;
  double dropout = 0.1;

  void validate() const;

  bool operator==(const LoraConfig&) const = default;
};

}  // namespace dualtune
