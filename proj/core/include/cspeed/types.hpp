#pragma once

#include <cstddef>
#include <vector>

#include "cspeed/common.hpp"

namespace cspeed {

// Physically plausible sound speeds in air; estimates and plant speeds are
// rejected outside this range.
constexpr double kMinSoundSpeed = 250.0;
constexpr double kMaxSoundSpeed = 400.0;

inline bool speed_in_bounds(double c) {
  return c >= kMinSoundSpeed && c <= kMaxSoundSpeed;
}

// Finite impulse response of one loudspeaker -> microphone path, valid for
// the sound speed it was measured/simulated at.
struct ImpulseResponse {
  std::vector<double> taps;
  double sample_rate = 0.0;      // Hz
  double reference_speed = 0.0;  // m/s

  std::size_t length() const { return taps.size(); }
};

// Dense bank of IRs for all (microphone, loudspeaker) pairs, microphone-major.
struct IrBank {
  std::size_t num_mics = 0;
  std::size_t num_speakers = 0;
  std::vector<ImpulseResponse> irs;  // idx = mic * num_speakers + speaker

  const ImpulseResponse& at(std::size_t mic, std::size_t speaker) const {
    return irs[mic * num_speakers + speaker];
  }
  ImpulseResponse& at(std::size_t mic, std::size_t speaker) {
    return irs[mic * num_speakers + speaker];
  }

  // All IRs in a bank must share one tap count; 0 for an empty bank.
  std::size_t ir_length() const { return irs.empty() ? 0 : irs.front().taps.size(); }

  void require_uniform_length() const {
    for (const auto& ir : irs) {
      if (ir.taps.size() != ir_length()) {
        throw ConfigError(strcat_msg("IR bank has heterogeneous lengths: ",
                                     ir.taps.size(), " vs ", ir_length()));
      }
    }
  }
};

}  // namespace cspeed
