#include "safelqr/sysid.hpp"

#include <algorithm>
#include <cmath>

namespace safelqr {

LeastSquaresFit least_squares(const Trajectory& traj) {
  const int T = traj.horizon();
  require_domain(T >= 1 && !traj.x.empty(), "least squares needs a non-empty trajectory");
  const int n = static_cast<int>(traj.x.front().size());
  const int d = static_cast<int>(traj.u.front().size());
  require_domain(T >= n + d, "least squares needs T >= n + d samples");

  Matrix Z(n + d, T);
  Matrix Y(n, T);
  for (int t = 0; t < T; ++t) {
    Z.col(t).head(n) = traj.x[static_cast<size_t>(t)];
    Z.col(t).tail(d) = traj.u[static_cast<size_t>(t)];
    Y.col(t) = traj.x[static_cast<size_t>(t) + 1];
  }
  const Matrix gram = Z * Z.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  LeastSquaresFit fit;
  fit.gram_sigma_min = std::max(0.0, eig.eigenvalues()(0));
  fit.gram_sigma_max = std::max(0.0, eig.eigenvalues()(n + d - 1));

  Matrix theta;  // n x (n + d)
  const double cond = fit.gram_sigma_max > 0.0 ? fit.gram_sigma_min / fit.gram_sigma_max : 0.0;
  if (cond >= 1e-8) {
    theta = gram.llt().solve(Z * Y.transpose()).transpose();
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(Z.transpose());
    if (qr.rank() < n + d) {
      throw RankDeficientError("regressors are rank deficient (Gram sigma_min = " +
                                   std::to_string(fit.gram_sigma_min) + ")",
                               fit.gram_sigma_min);
    }
    theta = qr.solve(Y.transpose()).transpose();
    fit.used_qr = true;
  }
  fit.A_hat = theta.leftCols(n);
  fit.B_hat = theta.rightCols(d);
  return fit;
}

UncertaintySpec estimation_error(const Matrix& A_hat, const Matrix& B_hat, const Matrix& A_true,
                                 const Matrix& B_true) {
  require_dims(A_hat.rows() == A_true.rows() && A_hat.cols() == A_true.cols(), "A estimate shape mismatch");
  require_dims(B_hat.rows() == B_true.rows() && B_hat.cols() == B_true.cols(), "B estimate shape mismatch");
  UncertaintySpec e;
  e.eps_A_2 = spectral_norm(A_hat - A_true);
  e.eps_B_2 = spectral_norm(B_hat - B_true);
  e.eps_A_inf = induced_inf_norm(A_hat - A_true);
  e.eps_B_inf = induced_inf_norm(B_hat - B_true);
  return e;
}

EstimateReport estimate(const Trajectory& traj, const LinearSystem& truth, double inflation) {
  require_domain(inflation >= 1.0, "uncertainty inflation must be at least 1");
  const LeastSquaresFit fit = least_squares(traj);
  EstimateReport rep;
  rep.A_hat = fit.A_hat;
  rep.B_hat = fit.B_hat;
  rep.actual = estimation_error(fit.A_hat, fit.B_hat, truth.A(), truth.B());
  rep.eps = rep.actual;
  rep.eps.eps_A_2 *= inflation;
  rep.eps.eps_B_2 *= inflation;
  rep.eps.eps_A_inf *= inflation;
  rep.eps.eps_B_inf *= inflation;
  rep.inflation = inflation;
  rep.T_used = traj.horizon();
  rep.condition = fit.gram_sigma_min;
  return rep;
}

RateBound theoretical_rate(double sigma_w, double sigma_eta, double C_x, double C_u, double rho, int n, int d,
                           double norm_B, double norm_x0, double T, double delta) {
  require_domain(sigma_w > 0.0 && sigma_eta > 0.0, "noise levels must be positive");
  require_domain(rho > 0.0 && rho < 1.0, "decay rate rho must lie in (0, 1)");
  require_domain(delta > 0.0 && delta < 1.0, "failure probability must lie in (0, 1)");
  require_domain(T > 0.0 && C_x >= 0.0 && C_u > 0.0 && n >= 1 && d >= 1, "invalid rate arguments");
  RateBound r;
  if (sigma_eta > sigma_w) {
    r.assumption_holds = false;
    r.warning = "sigma_eta > sigma_w: outside the simplifying assumption of the rate";
  }
  const double CK2 = n * C_x * C_x + d * C_u * C_u;
  const double ratio = sigma_w / sigma_eta;
  const double one_minus = 1.0 - rho * rho;

  const double burn_arg = d * C_u * C_u / delta +
                          ratio * ratio * rho * rho * C_u * C_u * CK2 / (delta * one_minus) *
                              (1.0 + norm_B * norm_B + norm_x0 * norm_x0 / (sigma_w * sigma_w * T));
  r.T0 = (n + d) * std::log(burn_arg);

  const double log_arg = d * C_u / delta + ratio * rho * C_u * std::sqrt(CK2) / (delta * one_minus) *
                                               (1.0 + norm_B + norm_x0 / (sigma_w * std::sqrt(T)));
  r.error_bound = ratio * C_u * std::sqrt((n + d) / T) * std::sqrt(std::log(log_arg));
  return r;
}

Quartiles quartiles(std::vector<double> values) {
  require_domain(!values.empty(), "quartiles of an empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::vector<DecayRow> error_decay_experiment(const DecayExperiment& exp) {
  require_domain(!exp.T_grid.empty() && exp.trials >= 1, "decay experiment needs a T grid and trials");
  std::vector<int> grid = exp.T_grid;
  std::sort(grid.begin(), grid.end());
  const int T_max = grid.back();
  std::vector<std::vector<double>> eA(grid.size()), eB(grid.size());
  for (int i = 0; i < exp.trials; ++i) {
    NoiseModel noise = exp.noise;
    noise.seed = derive_seed(exp.noise.seed, static_cast<std::uint64_t>(i));
    SlsController ctrl = exp.controller;
    const Trajectory traj = rollout(exp.truth, ctrl, noise, T_max, exp.x0);
    for (size_t g = 0; g < grid.size(); ++g) {
      const LeastSquaresFit fit = least_squares(traj.prefix(grid[g]));
      const UncertaintySpec e = estimation_error(fit.A_hat, fit.B_hat, exp.truth.A(), exp.truth.B());
      eA[g].push_back(e.eps_A_2);
      eB[g].push_back(e.eps_B_2);
    }
  }
  std::vector<DecayRow> rows;
  for (size_t g = 0; g < grid.size(); ++g) rows.push_back({grid[g], quartiles(eA[g]), quartiles(eB[g])});
  return rows;
}

double loglog_slope(const std::vector<DecayRow>& rows) {
  require_domain(rows.size() >= 2, "slope needs at least two rows");
  const auto m = static_cast<double>(rows.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.T));
    const double y = std::log(r.eps_A_2.median);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace safelqr
