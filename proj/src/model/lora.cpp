#include "dualtune/model/lora.hpp"

#include <cmath>
#include <string>

#include "dualtune/numerics/ops.hpp"

namespace dualtune {

using num::Tensor;

void LoraConfig::validate() const {
  if (rank < 1) throw num::ContractError("LoRA rank must be >= 1");
  if (!(alpha > 0.0)) throw num::ContractError("LoRA alpha must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw num::ContractError("LoRA dropout must lie in [0, 1), got " + std::to_string(dropout));
  }
}

LoraAdapter LoraAdapter::create(std::size_t d_in, std::size_t d_out, const LoraConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  const double sd = 1.0 / std::sqrt(static_cast<double>(d_in));
  std::vector<double> a(cfg.rank * d_in);
  for (auto& x : a) x = rng.normal(0.0, sd);
  LoraAdapter adapter;
  adapter.a = Tensor::from({cfg.rank, d_in}, std::move(a), true);
  adapter.b = Tensor::zeros({d_out, cfg.rank}, true);
  adapter.rank = cfg.rank;
  adapter.alpha = cfg.alpha;
  adapter.dropout = cfg.dropout;
  return adapter;
}

Tensor LoraAdapter::delta() const {
  return num::scale(num::matmul(b.detach(), a.detach()), scaling());
}

LoraAdapter LoraAdapter::clone() const {
  LoraAdapter copy = *this;
  copy.a = a.clone();
  copy.b = b.clone();
  return copy;
}

Tensor lora_linear(const LoraAdapter* adapter, const Tensor& weight, const Tensor& bias,
                   const Tensor& x, const ForwardMode& mode) {
  Tensor base = num::linear(x, weight, bias);
  if (adapter == nullptr) return base;
  if (adapter->d_in() != weight.cols() || adapter->d_out() != weight.rows()) {
    throw num::DimensionError("lora_linear: adapter " + std::to_string(adapter->d_out()) + "x" +
                              std::to_string(adapter->d_in()) + " does not fit weight " +
                              num::shape_string(weight.shape()));
  }
  Tensor branch_in = x;
  if (mode.train && adapter->dropout > 0.0) {
    if (mode.dropout_rng == nullptr) {
      throw num::ContractError("lora_linear: train mode needs a dropout stream");
    }
    const double keep = 1.0 - adapter->dropout;
    std::vector<double> mask(x.size());
    for (auto& m : mask) m = mode.dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    branch_in = num::mul(x, Tensor::from(x.shape(), std::move(mask)));
  }
  Tensor low = num::matmul_nt(branch_in, adapter->a);
  Tensor up = num::matmul_nt(low, adapter->b);
  return num::add(base, num::scale(up, adapter->scaling()));
}

}  // namespace dualtune
