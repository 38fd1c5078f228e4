#include "dualtune/training/adam.hpp"

#include <cmath>
#include <string>

namespace dualtune {

void adam_step(std::span<num::Tensor> params, OptimizerState& state, double lr,
               const AdamHyper& hyper) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw num::ContractError("optimizer state tracks " +
                             std::to_string(state.first_moment.size()) + " parameters, got " +
                             std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size()) {
      throw num::ContractError("optimizer moment " + std::to_string(i) + " has the wrong size");
    }
    for (double g : params[i].grad()) {
      if (!std::isfinite(g)) {
        throw NonFiniteGradient("non-finite gradient in parameter " + std::to_string(i) +
                                " at optimizer step " + std::to_string(state.step + 1));
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    const auto grads = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grads[k];
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g;
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      values[k] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

}  // namespace dualtune
