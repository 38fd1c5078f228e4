#include "dualtune/losses/losses.hpp"

#include <cmath>

#include "dualtune/model/config.hpp"
#include "dualtune/numerics/ops.hpp"

namespace dualtune {

using num::Tensor;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Voc: return "voc";
    case Strategy::Mix: return "mix";
    case Strategy::Random: return "random";
    case Strategy::Both: return "both";
    case Strategy::Cns: return "cns";
  }
  return "?";
}

std::string to_string(ConsistencyKind k) { return k == ConsistencyKind::L1 ? "L1" : "L2"; }

Strategy parse_strategy(const std::string& text) {
  for (auto s : {Strategy::Voc, Strategy::Mix, Strategy::Random, Strategy::Both, Strategy::Cns}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown strategy '" + text +
                              "' (expected voc, mix, random, both, or cns)");
}

ConsistencyKind parse_consistency_kind(const std::string& text) {
  if (text == "L1" || text == "l1") return ConsistencyKind::L1;
  if (text == "L2" || text == "l2") return ConsistencyKind::L2;
  throw std::invalid_argument("unknown consistency loss kind '" + text + "' (expected L1 or L2)");
}

void LossConfig::validate() const {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw num::ContractError("consistency weight must be finite and >= 0");
  }
}

Tensor alt_loss(const Tensor& logits, std::span<const int> targets) {
  return num::cross_entropy(logits, targets, tokens::kPad);
}

Tensor consistency_loss(const Tensor& vocal, const Tensor& mixture, ConsistencyKind kind,
                        const std::vector<bool>& frame_mask) {
  if (vocal.shape() != mixture.shape()) {
    throw num::ContractError("consistency_loss: shape mismatch " +
                             num::shape_string(vocal.shape()) + " vs " +
                             num::shape_string(mixture.shape()));
  }
  if (vocal.rank() != 2 || frame_mask.size() != vocal.rows()) {
    throw num::ContractError("consistency_loss: mask of length " +
                             std::to_string(frame_mask.size()) + " for encodings " +
                             num::shape_string(vocal.shape()));
  }
  const auto cols = vocal.cols();
  std::size_t valid_frames = 0;
  for (bool m : frame_mask) valid_frames += m ? 1 : 0;
  Tensor diff = num::sub(vocal, mixture);
  Tensor elementwise = kind == ConsistencyKind::L1 ? num::abs(diff) : num::square(diff);
  if (valid_frames == 0) return num::scale(num::sum(elementwise), 0.0);
  if (valid_frames != frame_mask.size()) {
    std::vector<double> mask(vocal.size());
    for (std::size_t i = 0; i < frame_mask.size(); ++i) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(i * cols), cols,
                  frame_mask[i] ? 1.0 : 0.0);
    }
    elementwise = num::mul(elementwise, Tensor::from(vocal.shape(), std::move(mask)));
  }
  return num::scale(num::sum(elementwise), 1.0 / static_cast<double>(valid_frames * cols));
}

Tensor combined_loss(const Tensor& alt_vocal, const Tensor& alt_mixture, const Tensor& consistency,
                     double weight) {
  Tensor alt = num::scale(num::add(alt_vocal, alt_mixture), 0.5);
  return num::add(alt, num::scale(consistency, weight));
}

double combined_loss(double alt_vocal, double alt_mixture, double consistency, double weight) {
  return (alt_vocal + alt_mixture) * 0.5 + weight * consistency;
}

}  // namespace dualtune
