#pragma once

#include <cstddef>

namespace dualtune {

/// Linear warmup to `peak` over the first W = ceil(warmup_frac * T) steps,
/// then linear decay to zero at step T.
class LinearWarmupDecay {
 public:
  LinearWarmupDecay(std::size_t total_steps, double peak, double warmup_frac);

  double operator()(std::size_t step) const;

  std::size_t total_steps() const { return total_; }
  std::size_t warmup_steps() const { return warmup_; }
  double peak() const { return peak_; }

 private:
  std::size_t total_;
  std::size_t warmup_;
  double peak_;
};

inline LinearWarmupDecay make_schedule(std::size_t total_steps, double peak, double warmup_frac) {
  return LinearWarmupDecay(total_steps, peak, warmup_frac);
}

}  // namespace dualtune
