#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one buffer per parameter.
struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam: p -= lr * m_hat / (sqrt(v_hat) + eps).
/// Moments are allocated on the first call. If any gradient is NaN or
/// infinite, nothing is modified and NonFiniteGradient is thrown.
void adam_step(std::span<num::Tensor> params, OptimizerState& state, double lr,
               const AdamHyper& hyper);

}  // namespace dualtune
