#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "safelqr/sim.hpp"

namespace safelqr {

/// Raised when the stacked regressors [x_t; u_t] do not have full row rank.
class RankDeficientError : public std::runtime_error {
public:
  RankDeficientError(const std::string& what, double sigma_min)
      : std::runtime_error(what), sigma_min_(sigma_min) {}
  [[nodiscard]] double sigma_min() const { return sigma_min_; }

private:
  double sigma_min_;
};

struct LeastSquaresFit {
  Matrix A_hat;
  Matrix B_hat;
  double gram_sigma_min = 0.0;  // smallest singular value of sum z_t z_t'
  double gram_sigma_max = 0.0;
  bool used_qr = false;
};

/// argmin over (A, B) of sum_t ||A x_t + B u_t - x_{t+1}||_2^2 over the whole trajectory.
/// Normal equations by Cholesky; column-pivoted QR on the data when the Gram condition
/// (sigma_min / sigma_max) drops below 1e-8.
LeastSquaresFit least_squares(const Trajectory& traj);

/// Spectral and l_inf -> l_inf norms of (A_hat - A_true, B_hat - B_true).
UncertaintySpec estimation_error(const Matrix& A_hat, const Matrix& B_hat, const Matrix& A_true,
                                 const Matrix& B_true);

struct EstimateReport {
  Matrix A_hat;
  Matrix B_hat;
  UncertaintySpec eps;     // actual error norms times `inflation`
  UncertaintySpec actual;  // actual error norms
  double inflation = 1.0;
  int T_used = 0;
  double condition = 0.0;  // smallest singular value of the Gram matrix
};

/// Least squares on `traj` with errors measured against the true system.
EstimateReport estimate(const Trajectory& traj, const LinearSystem& truth, double inflation);

struct RateBound {
  double T0 = 0.0;           // burn-in length, absolute constant set to 1
  double error_bound = 0.0;  // bound on max(||Delta_A||_2, ||Delta_B||_2), constant set to 1
  bool assumption_holds = true;  // sigma_eta <= sigma_w
  std::string warning;
};

/// Statistical rate of the excited least-squares estimator, evaluated up to absolute constants.
/// C_K^2 = n C_x^2 + d C_u^2.
RateBound theoretical_rate(double sigma_w, double sigma_eta, double C_x, double C_u, double rho, int n, int d,
                           double norm_B, double norm_x0, double T, double delta);

struct Quartiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

/// 25/50/75 percentiles with linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

struct DecayExperiment {
  LinearSystem truth;
  SlsController controller;
  NoiseModel noise;  // noise.seed is the master seed; trial i uses derive_seed(seed, i)
  Vector x0;
  std::vector<int> T_grid;
  int trials = 400;
};

struct DecayRow {
  int T = 0;
  Quartiles eps_A_2;
  Quartiles eps_B_2;
};

/// One rollout of length max(T_grid) per trial; every T uses the prefix of that rollout.
std::vector<DecayRow> error_decay_experiment(const DecayExperiment& exp);

/// Least-squares slope of log(median eps_A_2) against log T.
double loglog_slope(const std::vector<DecayRow>& rows);

}  // namespace safelqr
