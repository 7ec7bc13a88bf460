#include "cspeed/szc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "cspeed/common.hpp"

namespace cspeed::szc {

double DesiredField::energy() const {
  double e = 0.0;
  for (const auto& d : signals)
    for (double v : d) e += v * v;
  return e;
}

Eigen::VectorXd VastFilterBank::stacked() const {
  const std::size_t j = filters.empty() ? 0 : filters.front().size();
  Eigen::VectorXd q(filters.size() * j);
  for (std::size_t l = 0; l < filters.size(); ++l)
    for (std::size_t i = 0; i < j; ++i)
      q[static_cast<Eigen::Index>(l * j + i)] = filters[l][i];
  return q;
}

DesiredField build_desired(const IrBank& bank, std::size_t num_bright,
                           std::size_t ref_speaker, std::size_t delay,
                           std::size_t filter_len) {
  bank.require_uniform_length();
  if (ref_speaker >= bank.num_speakers) {
    throw ConfigError(strcat_msg("build_desired: reference speaker ",
                                 ref_speaker, " out of range (L=",
                                 bank.num_speakers, ")"));
  }
  const std::size_t k = bank.ir_length();
  const std::size_t full = k + filter_len - 1;
  if (delay + k > full) {
    throw ConfigError(strcat_msg("build_desired: modeling delay ", delay,
                                 " overflows the K+J-1 support (K=", k,
                                 ", J=", filter_len, ")"));
  }

  DesiredField d;
  d.ref_speaker = ref_speaker;
  d.modeling_delay = delay;
  d.signals.resize(num_bright);
  for (std::size_t m = 0; m < num_bright; ++m) {
    const auto& h = bank.at(m, ref_speaker).taps;
    auto& sig = d.signals[m];
    sig.assign(full, 0.0);
    std::copy(h.begin(), h.end(), sig.begin() + static_cast<long>(delay));
  }
  return d;
}

namespace {

// Lag cross-correlation g[d] = sum_n a[n] * b[n+d] for d in [-(J-1), J-1];
// (H_a^T H_b)_{j,j'} = g[j - j'].
std::vector<double> lag_correlation(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    std::size_t filter_len) {
  const long j = static_cast<long>(filter_len);
  const long ka = static_cast<long>(a.size());
  const long kb = static_cast<long>(b.size());
  std::vector<double> g(2 * filter_len - 1, 0.0);
  for (long d = -(j - 1); d <= j - 1; ++d) {
    double acc = 0.0;
    const long lo = std::max(0L, -d);
    const long hi = std::min(ka, kb - d);
    for (long n = lo; n < hi; ++n) acc += a[n] * b[n + d];
    g[static_cast<std::size_t>(d + j - 1)] = acc;
  }
  return g;
}

void accumulate_zone(Eigen::MatrixXd& r, const IrBank& bank,
                     std::size_t mic_begin, std::size_t mic_end,
                     std::size_t filter_len) {
  const std::size_t num_l = bank.num_speakers;
  const long j = static_cast<long>(filter_len);
  for (std::size_t m = mic_begin; m < mic_end; ++m) {
    for (std::size_t la = 0; la < num_l; ++la) {
      for (std::size_t lb = la; lb < num_l; ++lb) {
        const auto g =
            lag_correlation(bank.at(m, la).taps, bank.at(m, lb).taps, filter_len);
        auto block = r.block(static_cast<long>(la) * j,
                             static_cast<long>(lb) * j, j, j);
        for (long row = 0; row < j; ++row)
          for (long col = 0; col < j; ++col)
            block(row, col) += g[static_cast<std::size_t>(row - col + j - 1)];
      }
    }
  }
  // Mirror the strictly-upper blocks.
  for (std::size_t la = 0; la < num_l; ++la)
    for (std::size_t lb = la + 1; lb < num_l; ++lb)
      r.block(static_cast<long>(lb) * j, static_cast<long>(la) * j, j, j) =
          r.block(static_cast<long>(la) * j, static_cast<long>(lb) * j, j, j)
              .transpose();
}

}  // namespace

SpatialCovariance build_covariances(const IrBank& bank, std::size_t num_bright,
                                    std::size_t num_dark,
                                    const DesiredField& desired,
                                    std::size_t filter_len) {
  bank.require_uniform_length();
  if (num_bright + num_dark > bank.num_mics) {
    throw ConfigError(strcat_msg("build_covariances: zone sizes ", num_bright,
                                 "+", num_dark, " exceed bank mics ",
                                 bank.num_mics));
  }
  if (desired.signals.size() != num_bright) {
    throw ConfigError("build_covariances: desired field does not match bright zone");
  }
  const std::size_t k = bank.ir_length();
  const std::size_t full = k + filter_len - 1;
  for (const auto& d : desired.signals) {
    if (d.size() != full) {
      throw ConfigError(strcat_msg("build_covariances: desired length ",
                                   d.size(), " != K+J-1 = ", full));
    }
  }

  const long lj = static_cast<long>(bank.num_speakers * filter_len);
  SpatialCovariance cov;
  cov.num_speakers = bank.num_speakers;
  cov.filter_len = filter_len;
  cov.bright = Eigen::MatrixXd::Zero(lj, lj);
  cov.dark = Eigen::MatrixXd::Zero(lj, lj);
  cov.cross = Eigen::VectorXd::Zero(lj);
  cov.desired_energy = desired.energy();

  accumulate_zone(cov.bright, bank, 0, num_bright, filter_len);
  accumulate_zone(cov.dark, bank, num_bright, num_bright + num_dark, filter_len);

  // r_B: (H_{m,l}^T d_m)_j = sum_n h[n - j] d[n].
  const long j = static_cast<long>(filter_len);
  for (std::size_t m = 0; m < num_bright; ++m) {
    const auto& d = desired.signals[m];
    for (std::size_t l = 0; l < bank.num_speakers; ++l) {
      const auto& h = bank.at(m, l).taps;
      for (long shift = 0; shift < j; ++shift) {
        double acc = 0.0;
        for (std::size_t n = 0; n < h.size(); ++n)
          acc += h[n] * d[n + static_cast<std::size_t>(shift)];
        cov.cross[static_cast<long>(l) * j + shift] += acc;
      }
    }
  }

  // Numerical symmetrization.
  cov.bright = ((cov.bright + cov.bright.transpose()) * 0.5).eval();
  cov.dark = ((cov.dark + cov.dark.transpose()) * 0.5).eval();
  return cov;
}

VastFilterBank vast_solve(const SpatialCovariance& cov, std::size_t rank,
                          double mu, double gamma, double design_speed) {
  const long lj = cov.bright.rows();
  if (lj == 0 || cov.dark.rows() != lj || cov.cross.size() != lj) {
    throw ConfigError("vast_solve: inconsistent covariance shapes");
  }
  if (rank < 1 || rank > static_cast<std::size_t>(lj)) {
    throw ConfigError(strcat_msg("vast_solve: rank ", rank,
                                 " outside [1, ", lj, "]"));
  }
  if (mu < 0.0 || gamma < 0.0) {
    throw ConfigError("vast_solve: mu and gamma must be non-negative");
  }

  Eigen::MatrixXd dark_reg = cov.dark;
  dark_reg.diagonal().array() += gamma;

  // Cholesky reduction of the generalized symmetric problem; fails when
  // R_D + gamma*I is not positive definite.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.compute(cov.bright, dark_reg,
                 Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw DomainError(
        "vast_solve: R_D + gamma*I is numerically singular; increase gamma");
  }

  // Eigen returns ascending eigenvalues with u^T (R_D + gamma I) u = 1.
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  const double scale = std::max(values.cwiseAbs().maxCoeff(), 1.0);
  if (values.minCoeff() < -1e-8 * scale) {
    throw DomainError(strcat_msg(
        "vast_solve: eigenvalue ", values.minCoeff(),
        " below the asymmetry tolerance; R_B is not numerically PSD"));
  }

  Eigen::VectorXd q = Eigen::VectorXd::Zero(lj);
  for (std::size_t v = 0; v < rank; ++v) {
    const long idx = lj - 1 - static_cast<long>(v);  // descending order
    const double lambda = values[idx];
    const Eigen::VectorXd u = vectors.col(idx);
    q += u * (u.dot(cov.cross) / (lambda + mu));
  }

  VastFilterBank bank;
  bank.rank = rank;
  bank.mu = mu;
  bank.gamma = gamma;
  bank.designed_for_speed = design_speed;
  const std::size_t j = cov.filter_len;
  bank.filters.resize(cov.num_speakers);
  for (std::size_t l = 0; l < cov.num_speakers; ++l) {
    bank.filters[l].assign(
        q.data() + l * j, q.data() + (l + 1) * j);
  }
  return bank;
}

double mse_cost(const Eigen::VectorXd& q, const SpatialCovariance& cov,
                double mu) {
  if (q.size() != cov.bright.rows()) {
    throw ConfigError("mse_cost: filter vector does not match covariance size");
  }
  return q.dot(cov.bright * q) + mu * q.dot(cov.dark * q) -
         2.0 * q.dot(cov.cross) + cov.desired_energy;
}

double mse_cost(const VastFilterBank& bank, const SpatialCovariance& cov,
                double mu) {
  return mse_cost(bank.stacked(), cov, mu);
}

}  // namespace cspeed::szc
