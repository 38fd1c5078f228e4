#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

enum class Strategy { Voc, Mix, Random, Both, Cns };
enum class ConsistencyKind { L1, L2 };

std::string to_string(Strategy s);
std::string to_string(ConsistencyKind k);
Strategy parse_strategy(const std::string& text);
ConsistencyKind parse_consistency_kind(const std::string& text);

/// Which objective a fine-tuning run optimizes. `kind` and `weight` only
/// matter for Strategy::Cns.
struct LossConfig {
  Strategy strategy = Strategy::Cns;
  ConsistencyKind kind = ConsistencyKind::L2;
  double weight = 1.0;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

/// Scalar values of one objective evaluation. Absent terms stay empty
/// (e.g. no mixture path under the voc strategy).
struct LossBreakdown {
  std::optional<double> alt_vocal;
  std::optional<double> alt_mixture;
  std::optional<double> consistency;
  double total = 0.0;
};

/// Teacher-forced transcription loss: cross-entropy against the shifted
/// targets with PAD positions excluded.
num::Tensor alt_loss(const num::Tensor& logits, std::span<const int> targets);

/// Mean over masked elements of |E_v - E_m| (L1) or (E_v - E_m)^2 (L2).
/// Gradient flows into both encodings. An all-false mask yields 0.
num::Tensor consistency_loss(const num::Tensor& vocal, const num::Tensor& mixture,
                             ConsistencyKind kind, const std::vector<bool>& frame_mask);

/// (L_v + L_m) / 2 + w * L_cns.
num::Tensor combined_loss(const num::Tensor& alt_vocal, const num::Tensor& alt_mixture,
                          const num::Tensor& consistency, double weight);
double combined_loss(double alt_vocal, double alt_mixture, double consistency, double weight);

}  // namespace dualtune
