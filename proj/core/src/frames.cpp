#include "cspeed/frames.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <mutex>

#include "cspeed/common.hpp"

namespace cspeed::frames {

std::vector<double> buff(std::span<const double> v, std::size_t tail_len,
                         std::size_t out_len) {
  if (v.size() < tail_len) {
    throw ConfigError(strcat_msg("buff: input length ", v.size(),
                                 " is shorter than tail length ", tail_len));
  }
  if (tail_len > out_len) {
    throw ConfigError(strcat_msg("buff: tail length ", tail_len,
                                 " exceeds output length ", out_len));
  }
  std::vector<double> out(out_len, 0.0);
  std::copy(v.end() - tail_len, v.end(), out.begin());
  return out;
}

std::vector<double> convolve(std::span<const double> kernel,
                             std::span<const double> signal) {
  if (kernel.empty() || signal.empty()) {
    throw ConfigError("convolve: empty kernel or signal");
  }
  std::vector<double> out(kernel.size() + signal.size() - 1, 0.0);
  for (std::size_t n = 0; n < signal.size(); ++n) {
    const double x = signal[n];
    if (x == 0.0) continue;
    double* dst = out.data() + n;
    for (std::size_t k = 0; k < kernel.size(); ++k) dst[k] += kernel[k] * x;
  }
  return out;
}

// ---- FFT path ------------------------------------------------------------
//
// Per-frame convolution of a fixed kernel: forward transform of the kernel is
// cached, each frame costs one r2c, a bin-wise product and one c2r. Plans are
// created once per size with FFTW_ESTIMATE | FFTW_UNALIGNED (deterministic,
// any buffer) and shared; plan creation is the only non-thread-safe FFTW call
// and is serialized.

namespace detail {

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  std::size_t n = 0;
};

namespace {

std::mutex g_plan_mutex;
std::map<std::size_t, FftPlans>& plan_cache() {
  static std::map<std::size_t, FftPlans> cache;
  return cache;
}

const FftPlans& plans_for(std::size_t n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> re(n, 0.0);
  std::vector<std::complex<double>> cx(n / 2 + 1);
  FftPlans p;
  p.n = n;
  p.forward = fftw_plan_dft_r2c_1d(
      static_cast<int>(n), re.data(), reinterpret_cast<fftw_complex*>(cx.data()),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_1d(
      static_cast<int>(n), reinterpret_cast<fftw_complex*>(cx.data()), re.data(),
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p.forward == nullptr || p.inverse == nullptr) {
    throw ConfigError(strcat_msg("FFTW plan creation failed for size ", n));
  }
  return cache.emplace(n, p).first->second;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

struct KernelSpectrum {
  std::size_t fft_len = 0;
  std::vector<std::complex<double>> bins;
};

namespace {

std::shared_ptr<const KernelSpectrum> make_spectrum(
    std::span<const double> kernel, std::size_t frame_len) {
  auto spec = std::make_shared<KernelSpectrum>();
  spec->fft_len = next_pow2(frame_len + kernel.size() - 1);
  const auto& plans = plans_for(spec->fft_len);
  std::vector<double> padded(spec->fft_len, 0.0);
  std::copy(kernel.begin(), kernel.end(), padded.begin());
  spec->bins.resize(spec->fft_len / 2 + 1);
  fftw_execute_dft_r2c(plans.forward, padded.data(),
                       reinterpret_cast<fftw_complex*>(spec->bins.data()));
  return spec;
}

std::vector<double> fft_convolve(const KernelSpectrum& spec,
                                 std::span<const double> frame,
                                 std::size_t full_len) {
  const auto& plans = plans_for(spec.fft_len);
  std::vector<double> padded(spec.fft_len, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  std::vector<std::complex<double>> bins(spec.fft_len / 2 + 1);
  fftw_execute_dft_r2c(plans.forward, padded.data(),
                       reinterpret_cast<fftw_complex*>(bins.data()));
  const double scale = 1.0 / static_cast<double>(spec.fft_len);
  for (std::size_t i = 0; i < bins.size(); ++i) bins[i] *= spec.bins[i] * scale;
  fftw_execute_dft_c2r(plans.inverse,
                       reinterpret_cast<fftw_complex*>(bins.data()),
                       padded.data());
  padded.resize(full_len);
  return padded;
}

// Rough flop comparison between N*K direct and the two transforms + product.
bool fft_wins(std::size_t kernel_len, std::size_t frame_len) {
  const std::size_t nf = next_pow2(frame_len + kernel_len - 1);
  const double fft_cost = 2.5 * 5.0 * static_cast<double>(nf) *
                          std::log2(static_cast<double>(nf));
  const double direct_cost =
      2.0 * static_cast<double>(kernel_len) * static_cast<double>(frame_len);
  return direct_cost > fft_cost;
}

}  // namespace
}  // namespace detail

// ---- FrameConvolver --------------------------------------------------------

FrameConvolver::FrameConvolver(std::vector<double> kernel,
                               std::size_t frame_len, Backend backend)
    : kernel_(std::move(kernel)),
      tail_(frame_len, 0.0),
      frame_len_(frame_len),
      backend_(backend) {
  if (kernel_.empty()) throw ConfigError("FrameConvolver: empty kernel");
  if (kernel_.size() > frame_len_ + 1) {
    throw ConfigError(strcat_msg(
        "FrameConvolver: kernel length ", kernel_.size(),
        " exceeds frame length + 1 (", frame_len_ + 1,
        "); the convolution tail would not fit in a single frame buffer"));
  }
  select_backend();
}

void FrameConvolver::select_backend() {
  bool use_fft = backend_ == Backend::kFft ||
                 (backend_ == Backend::kAuto &&
                  detail::fft_wins(kernel_.size(), frame_len_));
  spectrum_ = use_fft ? detail::make_spectrum(kernel_, frame_len_) : nullptr;
}

void FrameConvolver::reset() { std::fill(tail_.begin(), tail_.end(), 0.0); }

void FrameConvolver::set_kernel(std::vector<double> kernel) {
  if (kernel.empty()) throw ConfigError("FrameConvolver: empty kernel");
  if (kernel.size() > frame_len_ + 1) {
    throw ConfigError(strcat_msg("FrameConvolver: kernel length ", kernel.size(),
                                 " exceeds frame length + 1 (", frame_len_ + 1,
                                 ")"));
  }
  kernel_ = std::move(kernel);
  select_backend();
}

std::vector<double> FrameConvolver::process(std::span<const double> frame) {
  if (frame.size() != frame_len_) {
    throw ConfigError(strcat_msg("FrameConvolver: frame length ", frame.size(),
                                 " does not match configured length ",
                                 frame_len_));
  }
  const std::size_t full_len = frame_len_ + kernel_.size() - 1;
  std::vector<double> full =
      spectrum_ ? detail::fft_convolve(*spectrum_, frame, full_len)
                : convolve(kernel_, frame);

  std::vector<double> out(frame_len_);
  for (std::size_t i = 0; i < frame_len_; ++i) out[i] = full[i] + tail_[i];

  const std::size_t tail_len = kernel_.size() - 1;
  std::fill(tail_.begin(), tail_.end(), 0.0);
  std::copy(full.end() - tail_len, full.end(), tail_.begin());
  return out;
}

// ---- FeedRenderer ----------------------------------------------------------

FeedRenderer::FeedRenderer(const std::vector<std::vector<double>>& filters,
                           std::size_t frame_len, Backend backend) {
  if (filters.empty()) throw ConfigError("FeedRenderer: no filters");
  lanes_.reserve(filters.size());
  for (const auto& q : filters) lanes_.emplace_back(q, frame_len, backend);
}

void FeedRenderer::set_filters(const std::vector<std::vector<double>>& filters) {
  if (filters.size() != lanes_.size()) {
    throw ConfigError(strcat_msg("FeedRenderer: filter count ", filters.size(),
                                 " does not match speaker count ",
                                 lanes_.size()));
  }
  for (std::size_t l = 0; l < filters.size(); ++l) lanes_[l].set_kernel(filters[l]);
}

std::vector<std::vector<double>> FeedRenderer::render(
    std::span<const double> input_frame) {
  std::vector<std::vector<double>> feeds;
  feeds.reserve(lanes_.size());
  for (auto& lane : lanes_) feeds.push_back(lane.process(input_frame));
  return feeds;
}

void FeedRenderer::reset() {
  for (auto& lane : lanes_) lane.reset();
}

// ---- Plant -----------------------------------------------------------------

Plant::Plant(const IrBank& bank, std::size_t frame_len, Backend backend)
    : num_mics_(bank.num_mics), num_speakers_(bank.num_speakers) {
  bank.require_uniform_length();
  pairs_.reserve(bank.irs.size());
  for (const auto& ir : bank.irs) pairs_.emplace_back(ir.taps, frame_len, backend);
}

void Plant::set_bank(const IrBank& bank) {
  if (bank.num_mics != num_mics_ || bank.num_speakers != num_speakers_) {
    throw ConfigError("Plant: bank shape change across set_bank");
  }
  bank.require_uniform_length();
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    pairs_[i].set_kernel(bank.irs[i].taps);
}

std::vector<std::vector<double>> Plant::propagate(
    const std::vector<std::vector<double>>& feeds) {
  if (feeds.size() != num_speakers_) {
    throw ConfigError(strcat_msg("Plant: got ", feeds.size(),
                                 " feeds for ", num_speakers_, " speakers"));
  }
  std::vector<std::vector<double>> mics(num_mics_);
  for (std::size_t m = 0; m < num_mics_; ++m) {
    std::vector<double> acc;
    for (std::size_t l = 0; l < num_speakers_; ++l) {
      std::vector<double> part = pairs_[m * num_speakers_ + l].process(feeds[l]);
      if (acc.empty()) {
        acc = std::move(part);
      } else {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
      }
    }
    mics[m] = std::move(acc);
  }
  return mics;
}

void Plant::reset() {
  for (auto& p : pairs_) p.reset();
}

}  // namespace cspeed::frames
