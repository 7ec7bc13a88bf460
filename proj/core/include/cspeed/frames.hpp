#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cspeed/types.hpp"

namespace cspeed::frames {

// Extracts the last tail_len samples of v and zero-pads to out_len. This is
// the buffering operator that carries a convolution tail into the next frame.
std::vector<double> buff(std::span<const double> v, std::size_t tail_len,
                         std::size_t out_len);

// Full direct convolution, length a+b-1. Reference path; also used where
// kernels are too short for the FFT route to pay off.
std::vector<double> convolve(std::span<const double> kernel,
                             std::span<const double> signal);

enum class Backend {
  kAuto,    // FFT when the size estimate says it wins, direct otherwise
  kDirect,
  kFft,
};

namespace detail {
struct KernelSpectrum;  // cached forward transform of a kernel (frames.cpp)
}

// Streaming frame-wise convolution with one kernel. Keeps the one-frame tail
// buffer, so concatenated outputs are sample-exact against the direct
// convolution of the concatenated input. Kernel length is limited to
// frame_len + 1: the tail must fit in a single frame.
class FrameConvolver {
 public:
  FrameConvolver() = default;
  FrameConvolver(std::vector<double> kernel, std::size_t frame_len,
                 Backend backend = Backend::kAuto);

  // Zeroes the tail (stream start).
  void reset();

  // Swaps the kernel mid-stream. The stale tail is deliberately kept: the
  // next frame consumes it, giving one transitional frame that mixes old and
  // new kernels.
  void set_kernel(std::vector<double> kernel);

  // One frame in, one frame out; updates the tail.
  std::vector<double> process(std::span<const double> frame);

  std::span<const double> tail() const { return tail_; }
  std::size_t kernel_length() const { return kernel_.size(); }
  std::size_t frame_length() const { return frame_len_; }
  bool uses_fft() const { return spectrum_ != nullptr; }

 private:
  void select_backend();

  std::vector<double> kernel_;
  std::vector<double> tail_;  // length frame_len, first kernel_len-1 entries live
  std::size_t frame_len_ = 0;
  Backend backend_ = Backend::kAuto;
  std::shared_ptr<const detail::KernelSpectrum> spectrum_;
};

// Loudspeaker feed synthesis y_l = q_l * x, one streaming convolver per
// loudspeaker.
class FeedRenderer {
 public:
  FeedRenderer(const std::vector<std::vector<double>>& filters,
               std::size_t frame_len, Backend backend = Backend::kAuto);

  // Installs a new filter set. Tails survive the swap (see FrameConvolver).
  void set_filters(const std::vector<std::vector<double>>& filters);

  std::vector<std::vector<double>> render(std::span<const double> input_frame);

  void reset();
  std::size_t num_speakers() const { return lanes_.size(); }

 private:
  std::vector<FrameConvolver> lanes_;
};

// Acoustic propagation p_m = sum_l h_{m,l} * y_l through an IR bank, one
// streaming convolver per (mic, speaker) pair. The per-mic sum runs in fixed
// speaker order, so results are deterministic.
class Plant {
 public:
  Plant(const IrBank& bank, std::size_t frame_len,
        Backend backend = Backend::kAuto);

  // Swaps in a new bank (e.g. a scheduled sound speed change); tails survive.
  void set_bank(const IrBank& bank);

  std::vector<std::vector<double>> propagate(
      const std::vector<std::vector<double>>& feeds);

  void reset();
  std::size_t num_mics() const { return num_mics_; }
  std::size_t num_speakers() const { return num_speakers_; }

 private:
  std::size_t num_mics_ = 0;
  std::size_t num_speakers_ = 0;
  std::vector<FrameConvolver> pairs_;  // mic-major
};

}  // namespace cspeed::frames
