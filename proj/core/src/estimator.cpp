#include "cspeed/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cspeed/common.hpp"
#include "cspeed/frames.hpp"

namespace cspeed::estimator {

void GridConfig::validate() const {
  if (!(c_min < c_max)) {
    throw ConfigError(strcat_msg("GridConfig: c_min ", c_min,
                                 " must be below c_max ", c_max));
  }
  if (step <= 0.0 || (adaptive && step_adapt <= 0.0)) {
    throw ConfigError("GridConfig: step sizes must be positive");
  }
  if (adaptive && width <= 0.0) {
    throw ConfigError("GridConfig: adaptive width must be positive");
  }
  if (!speed_in_bounds(c_min) || !speed_in_bounds(c_max)) {
    throw DomainError(strcat_msg("GridConfig: range [", c_min, ", ", c_max,
                                 "] outside sanity bounds"));
  }
}

std::vector<double> GridConfig::candidates(std::optional<double> prev) const {
  validate();
  double lo = c_min, hi = c_max, dc = step;
  if (adaptive && prev.has_value()) {
    lo = std::max(*prev - width, c_min);
    hi = std::min(*prev + width, c_max);
    dc = step_adapt;
  }
  const auto count =
      static_cast<std::size_t>(std::floor((hi - lo) / dc + 1e-9)) + 1;
  if (count == 0) throw ConfigError("GridConfig: empty candidate set");
  std::vector<double> cands(count);
  for (std::size_t i = 0; i < count; ++i)
    cands[i] = lo + static_cast<double>(i) * dc;
  return cands;
}

// ---- ObservationModel ------------------------------------------------------

ObservationModel::ObservationModel(std::vector<ImpulseResponse> reference_irs,
                                   double c_old, std::size_t frame_len)
    : frame_len_(frame_len), num_speakers_(reference_irs.size()) {
  if (reference_irs.empty()) {
    throw ConfigError("ObservationModel: no reference IRs");
  }
  for (const auto& ir : reference_irs) {
    if (ir.taps.size() != reference_irs.front().taps.size()) {
      throw ConfigError("ObservationModel: heterogeneous reference IR lengths");
    }
  }
  // Resampled lengths are clamped to N+1 so the tail fits one frame.
  cache_ = std::make_shared<sicer::ResampleCache>(std::move(reference_irs),
                                                  c_old, frame_len + 1);
}

std::vector<double> ObservationModel::predict(
    double candidate_c, const std::vector<std::vector<double>>& feeds_now,
    const std::vector<std::vector<double>>& feeds_prev) const {
  if (feeds_now.size() != num_speakers_) {
    throw ConfigError(strcat_msg("predict: got ", feeds_now.size(),
                                 " feeds for ", num_speakers_, " speakers"));
  }
  const auto bank = cache_->get(candidate_c);
  std::vector<double> pred(frame_len_, 0.0);
  for (std::size_t l = 0; l < num_speakers_; ++l) {
    const auto& taps = (*bank)[l].taps;
    const std::size_t tail_len = taps.size() - 1;
    const auto full_now = frames::convolve(taps, feeds_now[l]);
    for (std::size_t i = 0; i < frame_len_; ++i) pred[i] += full_now[i];
    if (!feeds_prev.empty() && tail_len > 0) {
      const auto full_prev = frames::convolve(taps, feeds_prev[l]);
      for (std::size_t i = 0; i < tail_len; ++i)
        pred[i] += full_prev[full_prev.size() - tail_len + i];
    }
  }
  return pred;
}

double ObservationModel::cost(
    double candidate_c, std::span<const double> measured,
    const std::vector<std::vector<double>>& feeds_now,
    const std::vector<std::vector<double>>& feeds_prev) const {
  const auto pred = predict(candidate_c, feeds_now, feeds_prev);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = measured[i] - pred[i];
    acc += d * d;
  }
  return acc;
}

// ---- SpeedEstimator ---------------------------------------------------------

SpeedEstimator::SpeedEstimator(ObservationModel model, GridConfig grid,
                               SpeedEstimatorOptions options)
    : model_(std::move(model)), grid_(grid), options_(options) {
  grid_.validate();
}

void SpeedEstimator::reset() {
  prev_.reset();
  feeds_prev_.clear();
  tails_.clear();
  frame_index_ = 0;
  history_.clear();
}

EstimateResult SpeedEstimator::step(
    std::span<const double> measured,
    const std::vector<std::vector<double>>& feeds) {
  const std::size_t n = model_.frame_length();
  if (measured.size() != n) {
    throw ConfigError("SpeedEstimator: measured frame length mismatch");
  }
  ++frame_index_;

  // Silence guard: mean-square feed amplitude over this and the previous
  // frame, against a full-scale-relative floor.
  double energy = 0.0;
  std::size_t samples = 0;
  for (const auto& y : feeds) {
    for (double v : y) energy += v * v;
    samples += y.size();
  }
  for (const auto& y : feeds_prev_) {
    for (double v : y) energy += v * v;
    samples += y.size();
  }
  if (samples == 0 || energy / static_cast<double>(samples) < options_.energy_floor) {
    EstimateResult res;
    res.estimate = prev_.value_or(model_.reference_speed());
    res.cost = 0.0;
    res.low_energy = true;
    prev_ = res.estimate;
    feeds_prev_ = feeds;
    history_.push_back(res);
    return res;
  }

  const std::vector<double> cands = grid_.candidates(prev_);

  // Candidate tails from the previous frame are reused when present; cold
  // candidates rebuild theirs from the stored previous feeds. Entries are
  // created up front so the sweep can run in parallel over stable slots.
  struct Slot {
    double cost = 0.0;
    CandidateTail* tail = nullptr;
  };
  std::vector<Slot> slots(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i)
    slots[i].tail = &tails_[sicer::ResampleCache::quantize(cands[i])];

  auto& cache = model_.resample_cache();
  parallel_for(cands.size(), options_.threads, [&](std::size_t i) {
    const auto bank = cache.get(cands[i]);
    CandidateTail& entry = *slots[i].tail;

    std::vector<double> pred(n, 0.0);
    if (entry.valid_frame == frame_index_) {
      pred = entry.tail;
    } else if (!feeds_prev_.empty()) {
      for (std::size_t l = 0; l < feeds_prev_.size(); ++l) {
        const auto& taps = (*bank)[l].taps;
        const std::size_t tail_len = taps.size() - 1;
        if (tail_len == 0) continue;
        const auto full = frames::convolve(taps, feeds_prev_[l]);
        for (std::size_t t = 0; t < tail_len; ++t)
          pred[t] += full[full.size() - tail_len + t];
      }
    }

    std::vector<double> next_tail(n, 0.0);
    for (std::size_t l = 0; l < feeds.size(); ++l) {
      const auto& taps = (*bank)[l].taps;
      const auto full = frames::convolve(taps, feeds[l]);
      for (std::size_t t = 0; t < n; ++t) pred[t] += full[t];
      const std::size_t tail_len = taps.size() - 1;
      for (std::size_t t = 0; t < tail_len; ++t)
        next_tail[t] += full[full.size() - tail_len + t];
    }
    entry.tail = std::move(next_tail);
    entry.valid_frame = frame_index_ + 1;

    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = measured[t] - pred[t];
      acc += d * d;
    }
    slots[i].cost = acc;
  });

  // Argmin with order-free tie-breaking: smaller cost, then nearer the
  // previous estimate (window midpoint on the first frame), then the smaller
  // speed.
  const double ref = prev_.value_or(0.5 * (cands.front() + cands.back()));
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double c_best = slots[best].cost, c_i = slots[i].cost;
    if (c_i < c_best) {
      best = i;
    } else if (c_i == c_best) {
      const double di = std::abs(cands[i] - ref);
      const double db = std::abs(cands[best] - ref);
      if (di < db || (di == db && cands[i] < cands[best])) best = i;
    }
  }

  EstimateResult res;
  res.estimate = cands[best];
  res.cost = slots[best].cost;
  res.boundary = best == 0 || best + 1 == cands.size();
  if (res.boundary) {
    log_warn(strcat_msg("speed estimate ", res.estimate,
                        " sits on the search window edge at frame ",
                        frame_index_));
  }
  prev_ = res.estimate;
  feeds_prev_ = feeds;
  history_.push_back(res);
  return res;
}

// ---- Controller -------------------------------------------------------------

szc::VastFilterBank design_filters(const DesignContext& ctx, const IrBank& bank,
                                   double design_speed) {
  const auto desired = szc::build_desired(bank, ctx.num_bright, ctx.ref_speaker,
                                          ctx.modeling_delay, ctx.filter_len);
  const auto cov = szc::build_covariances(bank, ctx.num_bright, ctx.num_dark,
                                          desired, ctx.filter_len);
  const std::size_t lj = ctx.filter_len * bank.num_speakers;
  const std::size_t rank = ctx.rank == 0 ? lj : ctx.rank;
  return szc::vast_solve(cov, rank, ctx.mu, ctx.gamma, design_speed);
}

Controller::Controller(DesignContext design, szc::VastFilterBank initial_filters,
                       ObservationModel model, GridConfig grid, double c_thresh,
                       UpdateSource source, std::size_t frame_len,
                       SpeedEstimatorOptions options)
    : design_(std::move(design)),
      filters_(std::move(initial_filters)),
      renderer_(filters_.filters, frame_len),
      estimator_(std::move(model), grid, options),
      source_(source),
      c_thresh_(c_thresh),
      c_filt_(filters_.designed_for_speed) {
  if (c_thresh_ < 0.0) throw ConfigError("Controller: negative c_thresh");
}

std::vector<std::vector<double>> Controller::render(
    std::span<const double> input_frame) {
  if (pending_.has_value()) {
    filters_ = std::move(*pending_);
    pending_.reset();
    renderer_.set_filters(filters_.filters);  // stale tails intentionally kept
  }
  return renderer_.render(input_frame);
}

ControllerResult Controller::observe(
    std::span<const double> measured,
    const std::vector<std::vector<double>>& feeds, double true_speed) {
  ControllerResult out;
  if (source_ == UpdateSource::kEstimated) {
    const EstimateResult est = estimator_.step(measured, feeds);
    out.estimate = est.estimate;
    out.cost = est.cost;
    out.low_energy = est.low_energy;
    out.boundary = est.boundary;
    out.have_cost = !est.low_energy;
  } else {
    out.estimate = true_speed;
    out.have_cost = false;
  }

  if (std::abs(out.estimate - c_filt_) >= c_thresh_) {
    try {
      const double c_old = design_.control_bank.irs.front().reference_speed;
      szc::VastFilterBank next;
      switch (source_) {
        case UpdateSource::kEstimated:
        case UpdateSource::kOracleTrue: {
          const auto ratio = sicer::SpeedRatio::of(out.estimate, c_old);
          const IrBank resampled = sicer::resample_bank(
              design_.control_bank, ratio, design_.resample_max_len);
          next = design_filters(design_, resampled, out.estimate);
          break;
        }
        case UpdateSource::kGroundTruth: {
          if (design_.gt_banks == nullptr) {
            throw ConfigError("Controller: ground-truth banks not provided");
          }
          next = design_filters(design_, design_.gt_banks->at(out.estimate),
                                out.estimate);
          break;
        }
      }
      pending_ = std::move(next);
      c_filt_ = out.estimate;
      out.filter_updated = true;
    } catch (const std::exception& e) {
      // Fail open: the current filters stay installed.
      log_warn(strcat_msg("filter redesign at ", out.estimate,
                          " m/s failed (", e.what(), "); keeping filters for ",
                          c_filt_, " m/s"));
      out.filter_updated = false;
    }
  }
  return out;
}

}  // namespace cspeed::estimator
