#include "cspeed/sicer.hpp"

#include <cmath>

#include "cspeed/common.hpp"

namespace cspeed::sicer {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

SpeedRatio SpeedRatio::of(double c_new, double c_old) {
  if (!speed_in_bounds(c_new) || !speed_in_bounds(c_old)) {
    throw DomainError(strcat_msg("SpeedRatio: speeds (", c_new, ", ", c_old,
                                 ") outside sanity bounds [", kMinSoundSpeed,
                                 ", ", kMaxSoundSpeed, "] m/s"));
  }
  return SpeedRatio{c_new, c_old};
}

ImpulseResponse resample_ir(const ImpulseResponse& h, const SpeedRatio& ratio,
                            std::size_t max_len) {
  if (h.taps.empty()) throw ConfigError("resample_ir: empty impulse response");
  const double alpha = ratio.alpha();
  const std::size_t in_len = h.taps.size();

  std::size_t out_len = static_cast<std::size_t>(
      std::ceil(static_cast<double>(in_len) / alpha - 1e-12));
  if (max_len > 0 && out_len > max_len) {
    log_warn(strcat_msg("resample_ir: output length ", out_len,
                        " clamped to ", max_len, " (alpha=", alpha, ")"));
    out_len = max_len;
  }

  ImpulseResponse out;
  out.sample_rate = h.sample_rate;
  out.reference_speed = ratio.c_new;
  out.taps.resize(out_len);

  // alpha == 1 reduces to the identity on the first K rows; take the exact
  // path so no roundoff leaks into a no-op.
  if (alpha == 1.0) {
    for (std::size_t i = 0; i < out_len; ++i)
      out.taps[i] = i < in_len ? h.taps[i] : 0.0;
    return out;
  }

  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = alpha * static_cast<double>(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < in_len; ++k)
      acc += sinc(pos - static_cast<double>(k)) * h.taps[k];
    out.taps[i] = alpha * acc;
  }
  return out;
}

IrBank resample_bank(const IrBank& bank, const SpeedRatio& ratio,
                     std::size_t max_len) {
  bank.require_uniform_length();
  IrBank out;
  out.num_mics = bank.num_mics;
  out.num_speakers = bank.num_speakers;
  out.irs.reserve(bank.irs.size());
  for (const auto& ir : bank.irs) out.irs.push_back(resample_ir(ir, ratio, max_len));
  return out;
}

ResampleCache::ResampleCache(std::vector<ImpulseResponse> reference_irs,
                             double c_old, std::size_t max_len)
    : reference_(std::move(reference_irs)), c_old_(c_old), max_len_(max_len) {
  if (reference_.empty()) throw ConfigError("ResampleCache: no reference IRs");
}

std::shared_ptr<const std::vector<ImpulseResponse>> ResampleCache::get(
    double c_new) {
  const std::int64_t key = quantize(c_new);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  const SpeedRatio ratio = SpeedRatio::of(c_new, c_old_);
  auto bank = std::make_shared<std::vector<ImpulseResponse>>();
  bank->reserve(reference_.size());
  for (const auto& ir : reference_) bank->push_back(resample_ir(ir, ratio, max_len_));
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.emplace(key, std::move(bank)).first->second;
}

std::size_t ResampleCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

}  // namespace cspeed::sicer
