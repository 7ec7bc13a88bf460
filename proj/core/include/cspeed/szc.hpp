#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "cspeed/types.hpp"

namespace cspeed::szc {

// Desired bright-zone field: the reference loudspeaker's IR at each bright
// mic, shifted right by a modeling delay and zero-padded to K+J-1 taps. The
// dark-zone target is silence and is never materialized.
struct DesiredField {
  std::vector<std::vector<double>> signals;  // one per bright mic, length K+J-1
  std::size_t ref_speaker = 0;               // 0-based
  std::size_t modeling_delay = 0;            // taps

  double energy() const;  // ||d_B||^2
};

// Zone covariance statistics for the stacked filter vector q in R^{LJ}:
// R_B = sum_{m in BZ} H_m^T H_m, R_D likewise over the dark zone, and
// r_B = sum_{m in BZ} H_m^T d_m, where H_m is the (K+J-1) x LJ convolution
// matrix of mic m's IRs.
struct SpatialCovariance {
  Eigen::MatrixXd bright;      // R_B, LJ x LJ
  Eigen::MatrixXd dark;        // R_D, LJ x LJ
  Eigen::VectorXd cross;       // r_B, LJ
  double desired_energy = 0.0; // ||d_B||^2
  std::size_t num_speakers = 0;
  std::size_t filter_len = 0;  // J
};

// The L control filters of length J plus their design metadata.
struct VastFilterBank {
  std::vector<std::vector<double>> filters;  // q_l, length J each
  std::size_t rank = 0;                      // V
  double mu = 0.0;
  double gamma = 0.0;
  double designed_for_speed = 0.0;  // m/s

  Eigen::VectorXd stacked() const;
};

DesiredField build_desired(const IrBank& bank, std::size_t num_bright,
                           std::size_t ref_speaker, std::size_t delay,
                           std::size_t filter_len);

// Accumulates R_B, R_D and r_B from an IR bank laid out bright-first,
// dark-second (extra rows such as an observation mic are ignored). Uses the
// Toeplitz block structure, so nothing of size (K+J-1) x LJ is materialized.
SpatialCovariance build_covariances(const IrBank& bank, std::size_t num_bright,
                                    std::size_t num_dark,
                                    const DesiredField& desired,
                                    std::size_t filter_len);

// Rank-V variable-span trade-off solution: generalized symmetric eigenpairs
// of (R_B, R_D + gamma*I) with eigenvectors scaled to u^T R'_D u = 1 and
// eigenvalues descending, combined as q = sum_v u_v (u_v^T r_B) / (lambda_v
// + mu). For V = LJ this coincides with solving (R_B + mu*R'_D) q = r_B.
VastFilterBank vast_solve(const SpatialCovariance& cov, std::size_t rank,
                          double mu, double gamma, double design_speed);

// Weighted reproduction error xi(q) = q^T R_B q + mu q^T R_D q - 2 q^T r_B
// + ||d_B||^2; the quantity vast_solve minimizes over the retained span.
double mse_cost(const Eigen::VectorXd& q, const SpatialCovariance& cov,
                double mu);
double mse_cost(const VastFilterBank& bank, const SpatialCovariance& cov,
                double mu);

}  // namespace cspeed::szc
