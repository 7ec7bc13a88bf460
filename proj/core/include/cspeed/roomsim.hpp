#pragma once

#include <map>
#include <vector>

#include "cspeed/types.hpp"

namespace cspeed::roomsim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// Shoebox room driving the image-source simulation. rt60 == 0 means free
// field: only the direct path is rendered.
struct RoomSpec {
  Vec3 dims;                    // meters
  double rt60 = 0.0;            // seconds
  double sample_rate = 16000.0; // Hz
  std::size_t max_ir_len = 0;   // K taps

  // Fractional-delay rendering: each arrival is a windowed-sinc pulse of
  // frac_delay_taps width, low-passed at lowpass_cutoff * sample_rate. The
  // soft band edge keeps simulated IRs consistent with sinc-resampled ones;
  // a brick-wall pulse would put irreducible energy right at Nyquist where
  // time dilation mismatches most.
  std::size_t frac_delay_taps = 16;
  double lowpass_cutoff = 0.4;
};

// Loudspeaker line plus the two control zones and the observation mic.
struct ArrayGeometry {
  std::vector<Vec3> loudspeakers;
  std::vector<Vec3> bright_mics;
  std::vector<Vec3> dark_mics;
  Vec3 observation_mic;

  std::size_t num_speakers() const { return loudspeakers.size(); }
  std::size_t num_bright() const { return bright_mics.size(); }
  std::size_t num_dark() const { return dark_mics.size(); }
  // Bank row layout: bright zone, then dark zone, then the observation mic.
  std::size_t num_mics() const { return num_bright() + num_dark() + 1; }

  std::vector<Vec3> all_mics() const;
};

// Ground-truth sound speed as a function of 1-based frame index:
// piecewise-constant, stepping by c_step every period_frames until c_end.
struct ScenarioSchedule {
  double c_start = 343.0;
  double c_step = 0.0;
  double c_end = 343.0;
  std::size_t period_frames = 1;

  double speed_at(std::size_t frame_index) const;
  std::vector<double> distinct_speeds() const;
};

// Image-source room impulse response for one source/mic pair at sound speed c.
// Deterministic in its inputs; direct path arrives at sample_rate*dist/c taps
// with 1/(4*pi*dist) amplitude. Wall absorption is uniform, derived from rt60
// via Sabine; the reflection coefficient carries the pressure-inversion sign.
ImpulseResponse simulate_ir(const RoomSpec& room, const Vec3& src,
                            const Vec3& mic, double c);

// Full (mic, speaker) bank at one sound speed, mic-major with the layout of
// ArrayGeometry::all_mics(). Pairs are simulated in parallel.
IrBank simulate_bank(const RoomSpec& room, const ArrayGeometry& geometry,
                     double c, unsigned threads = 0);

// One bank per requested speed; duplicate speeds map to one simulation.
std::map<double, IrBank> simulate_ground_truth_banks(
    const RoomSpec& room, const ArrayGeometry& geometry,
    const std::vector<double>& speeds, unsigned threads = 0);

}  // namespace cspeed::roomsim
