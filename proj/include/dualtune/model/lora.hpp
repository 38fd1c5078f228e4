#pragma once

#include <cstdint>

#include "dualtune/model/config.hpp"
#include "dualtune/numerics/rng.hpp"
#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

/// Train/eval switch plus the dropout stream used in train mode.
struct ForwardMode {
  bool train = false;
  Rng* dropout_rng = nullptr;

  static ForwardMode eval() { return {}; }
  static ForwardMode training(Rng& rng) { return {true, &rng}; }
};

/// Low-rank additive update (alpha / rank) * B * A on a frozen [d_out x d_in]
/// weight. A starts small Gaussian and B at zero, so a fresh adapter is a no-op.
struct LoraAdapter {
  num::Tensor a;  // [rank x d_in]
  num::Tensor b;  // [d_out x rank]
  std::size_t rank = 0;
  double alpha = 0.0;
  double dropout = 0.0;

  static LoraAdapter create(std::size_t d_in, std::size_t d_out, const LoraConfig& cfg,
                            Rng& rng);

  double scaling() const { return alpha / static_cast<double>(rank); }
  std::size_t d_in() const { return a.cols(); }
  std::size_t d_out() const { return b.rows(); }

  /// (alpha / rank) * B * A as a plain tensor.
  num::Tensor delta() const;

  LoraAdapter clone() const;
};

/// x * W^T + bias + (alpha / rank) * drop(x) * A^T * B^T.
/// Dropout (rate p, inverted scaling) touches only the adapter branch and
/// only in train mode. A null adapter gives the plain linear layer.
num::Tensor lora_linear(const LoraAdapter* adapter, const num::Tensor& weight,
                        const num::Tensor& bias, const num::Tensor& x, const ForwardMode& mode);

}  // namespace dualtune
