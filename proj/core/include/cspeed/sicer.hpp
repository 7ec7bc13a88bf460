#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "cspeed/types.hpp"

namespace cspeed::sicer {

// Normalized sinc, sinc(0) = 1. This convention is what makes the identity
// ratio a true no-op: sinc(i - k) = delta_ik on the integer grid.
double sinc(double x);

// Ratio of a target sound speed to the speed the IRs are known at.
struct SpeedRatio {
  double c_new = 0.0;
  double c_old = 0.0;

  double alpha() const { return c_new / c_old; }

  // Validates both speeds against the physical sanity bounds.
  static SpeedRatio of(double c_new, double c_old);
};

// Maps an IR measured at ratio.c_old onto ratio.c_new by scaled sinc
// interpolation: out[i] = alpha * sum_k sinc(alpha*i - k) * h[k].
//
// Output length is ceil(K / alpha); when max_len > 0 the length is clamped to
// max_len (with a warning) so the result still fits the single-frame tail
// buffer of the block convolution pipeline. max_len == 0 leaves it unclamped.
ImpulseResponse resample_ir(const ImpulseResponse& h, const SpeedRatio& ratio,
                            std::size_t max_len = 0);

// Element-wise resample_ir over a bank sharing one tap count.
IrBank resample_bank(const IrBank& bank, const SpeedRatio& ratio,
                     std::size_t max_len = 0);

// Memoized resampling of a fixed set of reference IRs (one per loudspeaker),
// keyed by the candidate speed quantized to 1e-6 m/s. Grid searches hit the
// same candidate set every frame, so this removes resampling from the
// per-frame cost entirely. Concurrent readers are fine; inserts are locked.
class ResampleCache {
 public:
  ResampleCache(std::vector<ImpulseResponse> reference_irs, double c_old,
                std::size_t max_len);

  // Resampled IRs for all loudspeakers at candidate speed c_new.
  std::shared_ptr<const std::vector<ImpulseResponse>> get(double c_new);

  double reference_speed() const { return c_old_; }
  std::size_t size() const;

  static std::int64_t quantize(double c) {
    return static_cast<std::int64_t>(c * 1e6 + (c >= 0 ? 0.5 : -0.5));
  }

 private:
  std::vector<ImpulseResponse> reference_;
  double c_old_;
  std::size_t max_len_;
  mutable std::mutex mutex_;
  std::map<std::int64_t, std::shared_ptr<const std::vector<ImpulseResponse>>> entries_;
};

}  // namespace cspeed::sicer
