#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cspeed/sicer.hpp"
#include "cspeed/szc.hpp"
#include "cspeed/types.hpp"

namespace cspeed::estimator {

// Candidate grid for the frame-wise speed search. When adaptive is set, from
// the second frame on the search shrinks to [prev - width, prev + width]
// (intersected with the full range) at the finer step.
struct GridConfig {
  double c_min = 326.0;
  double c_max = 360.0;
  double step = 0.25;
  bool adaptive = false;
  double width = 3.0;
  double step_adapt = 0.1;

  void validate() const;

  // Inclusive candidate list for one frame. prev is empty on the first frame.
  std::vector<double> candidates(std::optional<double> prev) const;
};

struct EstimateResult {
  double estimate = 0.0;
  double cost = 0.0;
  bool low_energy = false;  // feeds below the silence floor; estimate held
  bool boundary = false;    // optimum sat on a window edge
};

// Predicts the observation-mic frame for any candidate sound speed from the
// reference IRs (known at c_old) and the current + previous loudspeaker
// feeds. Resampled candidate IRs are memoized across frames.
class ObservationModel {
 public:
  ObservationModel(std::vector<ImpulseResponse> reference_irs, double c_old,
                   std::size_t frame_len);

  // Two-term frame prediction: first N taps of (h_hat * y[tau]) plus the
  // buffered tail of (h_hat * y[tau-1]).
  std::vector<double> predict(
      double candidate_c, const std::vector<std::vector<double>>& feeds_now,
      const std::vector<std::vector<double>>& feeds_prev) const;

  // Squared error between a measured frame and the candidate prediction.
  double cost(double candidate_c, std::span<const double> measured,
              const std::vector<std::vector<double>>& feeds_now,
              const std::vector<std::vector<double>>& feeds_prev) const;

  std::size_t frame_length() const { return frame_len_; }
  std::size_t num_speakers() const { return num_speakers_; }
  double reference_speed() const { return cache_->reference_speed(); }
  sicer::ResampleCache& resample_cache() const { return *cache_; }

 private:
  std::size_t frame_len_;
  std::size_t num_speakers_;
  mutable std::shared_ptr<sicer::ResampleCache> cache_;
};

struct SpeedEstimatorOptions {
  // Mean-square feed amplitude below which a frame counts as silent and the
  // previous estimate is held instead of trusting a flat cost surface.
  double energy_floor = 1e-8;
  unsigned threads = 1;
};

// Frame-wise grid search over candidate speeds (the estimation half of the
// controller). Owns the previous-feed frame and per-candidate tail buffers,
// so steady-state frames cost one convolution pass per candidate.
class SpeedEstimator {
 public:
  SpeedEstimator(ObservationModel model, GridConfig grid,
                 SpeedEstimatorOptions options = {});

  // Consumes the feeds for frame tau and the measured observation frame;
  // returns the estimate for this frame.
  EstimateResult step(std::span<const double> measured,
                      const std::vector<std::vector<double>>& feeds);

  const ObservationModel& model() const { return model_; }
  std::optional<double> previous_estimate() const { return prev_; }
  const std::vector<EstimateResult>& history() const { return history_; }
  void reset();

 private:
  struct CandidateTail {
    std::vector<double> tail;    // summed over speakers, length N
    std::size_t valid_frame = 0; // frame index the tail feeds into
  };

  ObservationModel model_;
  GridConfig grid_;
  SpeedEstimatorOptions options_;
  std::optional<double> prev_;
  std::vector<std::vector<double>> feeds_prev_;
  std::map<std::int64_t, CandidateTail> tails_;
  std::size_t frame_index_ = 0;  // frames seen so far
  std::vector<EstimateResult> history_;
};

// What drives a filter redesign and where the new design IRs come from.
enum class UpdateSource {
  kEstimated,   // Algorithm 1: redesign from SICER-resampled IRs at the estimate
  kOracleTrue,  // redesign from SICER-resampled IRs at the true speed
  kGroundTruth, // redesign from simulated banks at the true speed
};

// Everything needed to redesign the control filters at a new speed.
struct DesignContext {
  IrBank control_bank;       // control-point IRs at c_old (bright + dark rows)
  std::size_t num_bright = 0;
  std::size_t num_dark = 0;
  std::size_t filter_len = 0;     // J
  std::size_t rank = 0;           // V
  double mu = 1.0;
  double gamma = 0.0;
  std::size_t ref_speaker = 0;    // 0-based
  std::size_t modeling_delay = 0;
  std::size_t resample_max_len = 0;  // N+1 clamp for resampled IRs
  // Ground-truth banks per speed; required for UpdateSource::kGroundTruth.
  const std::map<double, IrBank>* gt_banks = nullptr;
};

szc::VastFilterBank design_filters(const DesignContext& ctx, const IrBank& bank,
                                   double design_speed);

struct ControllerResult {
  double estimate = 0.0;
  double cost = 0.0;
  bool low_energy = false;
  bool boundary = false;
  bool filter_updated = false;
  bool have_cost = false;  // false for oracle modes that skip the search
};

// The per-frame controller: render feeds with the installed filters, estimate
// the sound speed from the observation mic, and queue a redesign whenever the
// estimate drifts at least c_thresh away from the speed the current filters
// were designed for. New filters take effect on the next frame; the stale
// convolution tails are consumed by that frame unchanged.
class Controller {
 public:
  Controller(DesignContext design, szc::VastFilterBank initial_filters,
             ObservationModel model, GridConfig grid, double c_thresh,
             UpdateSource source, std::size_t frame_len,
             SpeedEstimatorOptions options = {});

  // Frame tau step 1: install any pending filters and render the feeds.
  std::vector<std::vector<double>> render(std::span<const double> input_frame);

  // Frame tau step 2: consume the measured observation frame. true_speed is
  // only read by the oracle update sources.
  ControllerResult observe(std::span<const double> measured,
                           const std::vector<std::vector<double>>& feeds,
                           double true_speed = 0.0);

  double filter_design_speed() const { return c_filt_; }
  const szc::VastFilterBank& filters() const { return filters_; }
  bool update_pending() const { return pending_.has_value(); }

 private:
  DesignContext design_;
  szc::VastFilterBank filters_;
  std::optional<szc::VastFilterBank> pending_;
  frames::FeedRenderer renderer_;
  SpeedEstimator estimator_;
  UpdateSource source_;
  double c_thresh_;
  double c_filt_;
};

}  // namespace cspeed::estimator
