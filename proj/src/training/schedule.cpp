#include "dualtune/training/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

LinearWarmupDecay::LinearWarmupDecay(std::size_t total_steps, double peak, double warmup_frac)
    : total_(total_steps), peak_(peak) {
  if (total_steps < 2) throw num::ContractError("schedule needs at least 2 steps");
  if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) {
    throw num::ContractError("warmup fraction must lie in (0, 1), got " +
                             std::to_string(warmup_frac));
  }
  // The small slack keeps e.g. 0.1 * 100 from rounding up to 11.
  const double raw = std::ceil(warmup_frac * static_cast<double>(total_steps) - 1e-9);
  warmup_ = std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, total_steps - 1);
}

double LinearWarmupDecay::operator()(std::size_t step) const {
  if (step >= total_) return 0.0;
  if (step <= warmup_) {
    return peak_ * static_cast<double>(step) / static_cast<double>(warmup_);
  }
  return peak_ * static_cast<double>(total_ - step) / static_cast<double>(total_ - warmup_);
}

}  // namespace dualtune
