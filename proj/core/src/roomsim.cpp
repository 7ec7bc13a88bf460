#include "cspeed/roomsim.hpp"

#include <algorithm>
#include <cmath>

#include "cspeed/common.hpp"
#include "cspeed/sicer.hpp"

namespace cspeed::roomsim {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<Vec3> ArrayGeometry::all_mics() const {
  std::vector<Vec3> mics;
  mics.reserve(num_mics());
  mics.insert(mics.end(), bright_mics.begin(), bright_mics.end());
  mics.insert(mics.end(), dark_mics.begin(), dark_mics.end());
  mics.push_back(observation_mic);
  return mics;
}

double ScenarioSchedule::speed_at(std::size_t frame_index) const {
  if (frame_index == 0) throw ConfigError("ScenarioSchedule: frames are 1-based");
  if (period_frames == 0) throw ConfigError("ScenarioSchedule: zero period");
  const double steps =
      static_cast<double>((frame_index - 1) / period_frames);
  const double c = c_start + steps * c_step;
  if (c_step > 0.0) return std::min(c, c_end);
  if (c_step < 0.0) return std::max(c, c_end);
  return c_start;
}

std::vector<double> ScenarioSchedule::distinct_speeds() const {
  // Mirrors speed_at's arithmetic exactly so bank-map keys match bit-for-bit.
  std::vector<double> speeds{c_start};
  if (c_step != 0.0) {
    for (std::size_t k = 1; k <= 100000; ++k) {
      double c = c_start + static_cast<double>(k) * c_step;
      c = c_step > 0.0 ? std::min(c, c_end) : std::max(c, c_end);
      if (c == speeds.back()) break;
      speeds.push_back(c);
      if (c == c_end) break;
    }
  }
  return speeds;
}

namespace {

bool inside_room(const RoomSpec& room, const Vec3& p) {
  return p.x > 0.0 && p.x < room.dims.x && p.y > 0.0 && p.y < room.dims.y &&
         p.z > 0.0 && p.z < room.dims.z;
}

// Blackman-windowed sinc pulse for one image arrival, accumulated onto the
// tap grid around the fractional delay.
void add_arrival(std::vector<double>& taps, double delay, double gain,
                 std::size_t width, double cutoff) {
  const double base = std::floor(delay);
  const double frac = delay - base;
  const int start = static_cast<int>(base) - static_cast<int>(width) / 2 + 1;
  for (std::size_t n = 0; n < width; ++n) {
    const int idx = start + static_cast<int>(n);
    if (idx < 0 || idx >= static_cast<int>(taps.size())) continue;
    const double t = (static_cast<double>(n) - 0.5 * static_cast<double>(width) + 1.0) - frac;
    const double u = 2.0 * M_PI * t / static_cast<double>(width);
    const double w = 0.42 + 0.5 * std::cos(u) + 0.08 * std::cos(2.0 * u);
    taps[idx] += gain * w * 2.0 * cutoff * sicer::sinc(2.0 * cutoff * t);
  }
}

// Uniform wall reflection magnitude from Sabine's formula.
double sabine_beta(const RoomSpec& room, double c) {
  const double v = room.dims.x * room.dims.y * room.dims.z;
  const double s = 2.0 * (room.dims.x * room.dims.y + room.dims.x * room.dims.z +
                          room.dims.y * room.dims.z);
  const double absorption = 24.0 * v * std::log(10.0) / (c * s * room.rt60);
  if (absorption <= 0.0 || absorption > 1.0) {
    throw DomainError(strcat_msg(
        "simulate_ir: rt60=", room.rt60, " s implies wall absorption ",
        absorption, " outside (0, 1]; pick a longer rt60 or a bigger room"));
  }
  return std::sqrt(1.0 - absorption);
}

}  // namespace

ImpulseResponse simulate_ir(const RoomSpec& room, const Vec3& src,
                            const Vec3& mic, double c) {
  if (!speed_in_bounds(c)) {
    throw DomainError(strcat_msg("simulate_ir: sound speed ", c,
                                 " outside [", kMinSoundSpeed, ", ",
                                 kMaxSoundSpeed, "] m/s"));
  }
  if (!inside_room(room, src) || !inside_room(room, mic)) {
    throw DomainError("simulate_ir: source or microphone outside the room");
  }
  if (room.max_ir_len == 0) throw ConfigError("simulate_ir: max_ir_len is zero");

  ImpulseResponse ir;
  ir.sample_rate = room.sample_rate;
  ir.reference_speed = c;
  ir.taps.assign(room.max_ir_len, 0.0);

  const double samples_per_meter = room.sample_rate / c;

  if (room.rt60 <= 0.0) {
    const double dist = std::max(distance(src, mic), 1e-6);
    add_arrival(ir.taps, dist * samples_per_meter, 1.0 / (4.0 * M_PI * dist),
                room.frac_delay_taps, room.lowpass_cutoff);
    return ir;
  }

  // Reflection coefficient with the pressure-inversion sign.
  const double refl = -sabine_beta(room, c);

  // Enough image orders per axis for the image tail to cover the IR length.
  const double max_dist = static_cast<double>(room.max_ir_len) / samples_per_meter;
  const int n1 = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims.x)));
  const int n2 = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims.y)));
  const int n3 = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims.z)));

  for (int mx = -n1; mx <= n1; ++mx) {
    for (int my = -n2; my <= n2; ++my) {
      for (int mz = -n3; mz <= n3; ++mz) {
        for (int qx = 0; qx <= 1; ++qx) {
          const double ix = (1 - 2 * qx) * src.x - mic.x + 2.0 * mx * room.dims.x;
          const int ex = std::abs(mx - qx) + std::abs(mx);
          for (int qy = 0; qy <= 1; ++qy) {
            const double iy = (1 - 2 * qy) * src.y - mic.y + 2.0 * my * room.dims.y;
            const int ey = std::abs(my - qy) + std::abs(my);
            for (int qz = 0; qz <= 1; ++qz) {
              const double iz = (1 - 2 * qz) * src.z - mic.z + 2.0 * mz * room.dims.z;
              const int ez = std::abs(mz - qz) + std::abs(mz);

              const double dist = std::sqrt(ix * ix + iy * iy + iz * iz);
              const double delay = dist * samples_per_meter;
              if (delay >= static_cast<double>(room.max_ir_len) +
                               static_cast<double>(room.frac_delay_taps)) {
                continue;
              }
              const double gain = std::pow(refl, ex + ey + ez) /
                                  (4.0 * M_PI * std::max(dist, 1e-6));
              add_arrival(ir.taps, delay, gain, room.frac_delay_taps,
                          room.lowpass_cutoff);
            }
          }
        }
      }
    }
  }
  return ir;
}

IrBank simulate_bank(const RoomSpec& room, const ArrayGeometry& geometry,
                     double c, unsigned threads) {
  const std::vector<Vec3> mics = geometry.all_mics();
  IrBank bank;
  bank.num_mics = mics.size();
  bank.num_speakers = geometry.num_speakers();
  bank.irs.resize(bank.num_mics * bank.num_speakers);

  parallel_for(bank.irs.size(), threads, [&](std::size_t idx) {
    const std::size_t m = idx / bank.num_speakers;
    const std::size_t l = idx % bank.num_speakers;
    bank.irs[idx] = simulate_ir(room, geometry.loudspeakers[l], mics[m], c);
  });
  return bank;
}

std::map<double, IrBank> simulate_ground_truth_banks(
    const RoomSpec& room, const ArrayGeometry& geometry,
    const std::vector<double>& speeds, unsigned threads) {
  std::map<double, IrBank> banks;
  for (double c : speeds) {
    if (banks.count(c)) continue;
    banks.emplace(c, simulate_bank(room, geometry, c, threads));
  }
  return banks;
}

}  // namespace cspeed::roomsim
