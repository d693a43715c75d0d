#include <gtest/gtest.h>

#include "oracles.hpp"
#include "safelqr/sysid.hpp"

using namespace safelqr;

namespace {

Trajectory excited(const LinearSystem& sys, const Matrix& K, double sigma_w, double sigma_eta, int T,
                   std::uint64_t seed) {
  SlsController c = SlsController::static_gain(K);
  const NoiseModel noise{sigma_w, sigma_eta, NoiseDistribution::Uniform, seed};
  return rollout(sys, c, noise, T, Vector::Zero(sys.n()));
}

Matrix di_gain() {
  Matrix K(1, 2);
  K << -1.0, -1.5;
  return K;
}

struct RateInputs {
  double C_x;
  double C_u;
  double rho;
};

RateInputs di_rate_inputs() {
  SynthesisSpec spec;
  spec.sys = oracle::double_integrator();
  spec.cons = PolytopeConstraints::box(2, 1, 8.0, 4.0);
  spec.sigma_w = 0.1;
  spec.x0 = Vector::Zero(2);
  spec.L = 15;
  spec.Q = Matrix::Identity(2, 2);
  spec.R = Matrix::Identity(1, 1);
  const SynthesisResult res = solve(spec);
  const DecayEnvelope ex = fit_decay(res.phi_x);
  const DecayEnvelope eu = fit_decay(res.phi_u);
  return {ex.C, eu.C, std::max(ex.rho, eu.rho)};
}

}  // namespace

TEST(LeastSquares, NoiselessRecoveryIsExact) {
  std::mt19937_64 rng(1);
  const LinearSystem sys(oracle::random_stable(rng, 3, 0.9), oracle::random_matrix(rng, 3, 2));
  const Trajectory traj = excited(sys, Matrix::Zero(2, 3), 0.0, 1.0, 50, 3);
  const LeastSquaresFit fit = least_squares(traj);
  EXPECT_LT((fit.A_hat - sys.A()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((fit.B_hat - sys.B()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_FALSE(fit.used_qr);
}

TEST(LeastSquares, DegenerateDataIsRankDeficient) {
  const LinearSystem sys = oracle::double_integrator();
  const Trajectory traj = excited(sys, Matrix::Zero(1, 2), 0.0, 0.0, 20, 1);
  try {
    least_squares(traj);
    FAIL() << "expected a rank-deficiency error";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.sigma_min(), 0.0);
  }
  EXPECT_THROW(least_squares(traj.prefix(2)), DomainError);
}

TEST(LeastSquares, MatchesNormalEquationsOracle) {
  const LinearSystem sys(Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, 1.0));
  const Trajectory traj = excited(sys, Matrix::Zero(1, 1), 0.1, 0.5, 10, 2024);
  const LeastSquaresFit fit = least_squares(traj);
  const auto [A, B] = oracle::normal_equations(traj);
  EXPECT_NEAR(fit.A_hat(0, 0), A(0, 0), 1e-12);
  EXPECT_NEAR(fit.B_hat(0, 0), B(0, 0), 1e-12);
}

TEST(LeastSquares, SatisfiesNormalEquations) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearSystem sys(oracle::random_stable(rng, 2, 0.8), oracle::random_matrix(rng, 2, 1));
    const Trajectory traj = excited(sys, Matrix::Zero(1, 2), 0.1, 0.3, 60, derive_seed(5, trial));
    const LeastSquaresFit fit = least_squares(traj);
    Matrix theta(2, 3);
    theta << fit.A_hat, fit.B_hat;
    Matrix G = Matrix::Zero(3, 3);
    Matrix C = Matrix::Zero(2, 3);
    for (int t = 0; t < traj.horizon(); ++t) {
      Vector z(3);
      z << traj.x[static_cast<size_t>(t)], traj.u[static_cast<size_t>(t)];
      G += z * z.transpose();
      C += traj.x[static_cast<size_t>(t) + 1] * z.transpose();
    }
    EXPECT_LE((theta * G - C).norm(), 1e-8 * C.norm());
  }
}

TEST(LeastSquares, IllConditionedDataTakesOrthogonalPath) {
  const LinearSystem sys = oracle::double_integrator();
  SlsController c = SlsController::static_gain(di_gain());
  const NoiseModel noise{0.0, 1e-7, NoiseDistribution::Uniform, 4};
  const Trajectory traj = rollout(sys, c, noise, 50, Vector::Unit(2, 0));
  const LeastSquaresFit fit = least_squares(traj);
  EXPECT_TRUE(fit.used_qr);
  EXPECT_LT(fit.gram_sigma_min / fit.gram_sigma_max, 1e-8);
  EXPECT_LT((fit.A_hat - sys.A()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(EstimationError, Examples) {
  const Matrix A = oracle::double_integrator().A();
  const Matrix B = oracle::double_integrator().B();
  const UncertaintySpec zero = estimation_error(A, B, A, B);
  EXPECT_TRUE(zero.is_zero());
  Matrix dA = Matrix::Zero(2, 2);
  dA(0, 0) = 0.1;
  const UncertaintySpec e = estimation_error(A + dA, B, A, B);
  EXPECT_NEAR(e.eps_A_2, 0.1, 1e-15);
  EXPECT_NEAR(e.eps_A_inf, 0.1, 1e-15);
  EXPECT_EQ(e.eps_B_2, 0.0);
  EXPECT_THROW(estimation_error(Matrix::Zero(3, 3), B, A, B), DimensionError);
}

TEST(EstimationError, NormEquivalence) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3;
    const Matrix A = oracle::random_matrix(rng, n, n);
    const Matrix B = oracle::random_matrix(rng, n, 2);
    const UncertaintySpec e =
        estimation_error(A + oracle::random_matrix(rng, n, n, 0.1), B + oracle::random_matrix(rng, n, 2, 0.1), A, B);
    const double rn = std::sqrt(static_cast<double>(n));
    EXPECT_LE(e.eps_A_inf, rn * e.eps_A_2 + 1e-15);
    EXPECT_LE(e.eps_A_2, rn * e.eps_A_inf + 1e-15);
  }
}

TEST(Estimate, InflatesActualErrors) {
  const LinearSystem sys = oracle::double_integrator();
  const Trajectory traj = excited(sys, di_gain(), 0.1, 0.5, 200, 8);
  const EstimateReport rep = estimate(traj, sys, 1.2);
  EXPECT_EQ(rep.T_used, 200);
  EXPECT_DOUBLE_EQ(rep.eps.eps_A_2, 1.2 * rep.actual.eps_A_2);
  EXPECT_DOUBLE_EQ(rep.eps.eps_B_inf, 1.2 * rep.actual.eps_B_inf);
  const UncertaintySpec direct = estimation_error(rep.A_hat, rep.B_hat, sys.A(), sys.B());
  EXPECT_DOUBLE_EQ(direct.eps_A_inf, rep.actual.eps_A_inf);
  EXPECT_GT(rep.condition, 0.0);
}

TEST(TheoreticalRate, InverseSquareRootScaling) {
  const auto at = [](double T) { return theoretical_rate(0.1, 0.05, 2.0, 3.0, 0.7, 2, 1, 1.0, 0.0, T, 0.1); };
  const double r1 = at(1e6).error_bound / at(1e6 / 4).error_bound;
  const double r2 = at(1e12).error_bound / at(1e12 / 4).error_bound;
  EXPECT_NEAR(r1, 0.5, 1e-12);
  EXPECT_NEAR(r2, 0.5, 1e-12);
  const auto with_x0 = [](double T) { return theoretical_rate(0.1, 0.05, 2.0, 3.0, 0.7, 2, 1, 1.0, 5.0, T, 0.1); };
  const double far = with_x0(4e12).error_bound / with_x0(1e12).error_bound;
  const double near = with_x0(400.0).error_bound / with_x0(100.0).error_bound;
  EXPECT_LT(std::abs(far - 0.5), std::abs(near - 0.5));
}

TEST(TheoreticalRate, Monotonicity) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double sw = 0.1 + u(rng);
    const double se = sw * u(rng) * 0.5;
    const double Cx = 1.0 + u(rng);
    const double Cu = 1.0 + u(rng);
    const double rho = 0.2 + 0.7 * u(rng);
    const double T = 100.0 + 1000.0 * u(rng);
    const double x0 = u(rng);
    const double base = theoretical_rate(sw, se, Cx, Cu, rho, 2, 1, 1.0, x0, T, 0.1).error_bound;
    EXPECT_LT(theoretical_rate(sw, se, Cx, Cu, rho, 2, 1, 1.0, x0, 2.0 * T, 0.1).error_bound, base);
    EXPECT_LT(theoretical_rate(sw, std::min(sw, 2.0 * se), Cx, Cu, rho, 2, 1, 1.0, x0, T, 0.1).error_bound, base);
    EXPECT_GT(theoretical_rate(sw, se, Cx, 1.5 * Cu, rho, 2, 1, 1.0, x0, T, 0.1).error_bound, base);
  }
}

TEST(TheoreticalRate, FlagsAssumptionAndDomain) {
  const RateBound r = theoretical_rate(0.1, 0.5, 1.0, 1.0, 0.5, 2, 1, 1.0, 0.0, 100.0, 0.1);
  EXPECT_FALSE(r.assumption_holds);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_TRUE(theoretical_rate(0.5, 0.1, 1.0, 1.0, 0.5, 2, 1, 1.0, 0.0, 100.0, 0.1).assumption_holds);
  EXPECT_THROW(theoretical_rate(0.1, 0.05, 1.0, 1.0, 1.0, 2, 1, 1.0, 0.0, 100.0, 0.1), DomainError);
  EXPECT_THROW(theoretical_rate(0.1, 0.05, 1.0, 1.0, 0.5, 2, 1, 1.0, 0.0, 100.0, 1.0), DomainError);
}

TEST(TheoreticalRate, DoubleIntegratorSnapshot) {
  const RateInputs in = di_rate_inputs();
  const RateBound r = theoretical_rate(0.1, 0.5, in.C_x, in.C_u, in.rho, 2, 1, 1.0, 0.0, 1000.0, 0.1);
  EXPECT_TRUE(std::isfinite(r.T0));
  EXPECT_GT(r.error_bound, 0.0);
  RecordProperty("T0", std::to_string(r.T0));
  RecordProperty("error_bound", std::to_string(r.error_bound));
  EXPECT_NEAR(r.T0, 12.258235166237087, 1e-4 * 12.258235166237087);
  EXPECT_NEAR(r.error_bound, 0.025193658742908263, 1e-4 * 0.025193658742908263);
}

TEST(Quartiles, LinearInterpolation) {
  const Quartiles odd = quartiles({5.0, 1.0, 3.0, 2.0, 4.0});
  EXPECT_DOUBLE_EQ(odd.q25, 2.0);
  EXPECT_DOUBLE_EQ(odd.median, 3.0);
  EXPECT_DOUBLE_EQ(odd.q75, 4.0);
  const Quartiles even = quartiles({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(even.q25, 1.75);
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.q75, 3.25);
}

TEST(DecayExperiment, NoiselessIdentificationIsExact) {
  DecayExperiment exp;
  exp.truth = oracle::double_integrator();
  exp.controller = SlsController::static_gain(di_gain());
  exp.noise = NoiseModel{0.0, 0.5, NoiseDistribution::Uniform, 1};
  exp.x0 = Vector::Zero(2);
  exp.T_grid = {3, 10, 50};
  exp.trials = 20;
  for (const DecayRow& row : error_decay_experiment(exp)) {
    EXPECT_LT(row.eps_A_2.q75, 1e-10);
    EXPECT_LT(row.eps_B_2.q75, 1e-10);
  }
}

TEST(DecayExperiment, MedianDecaysAtSquareRootRate) {
  DecayExperiment exp;
  exp.truth = oracle::double_integrator();
  exp.controller = SlsController::static_gain(di_gain());
  exp.noise = NoiseModel{0.1, 0.5, NoiseDistribution::Uniform, 99};
  exp.x0 = Vector::Zero(2);
  exp.T_grid = {100, 200, 400, 800};
  exp.trials = 100;
  const auto rows = error_decay_experiment(exp);
  ASSERT_EQ(rows.size(), 4u);
  for (size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].eps_A_2.median, rows[i - 1].eps_A_2.median);
  const double slope = loglog_slope(rows);
  EXPECT_GE(slope, -0.7);
  EXPECT_LE(slope, -0.3);
  const auto again = error_decay_experiment(exp);
  EXPECT_EQ(again[2].eps_A_2.median, rows[2].eps_A_2.median);
}

TEST(DecayExperiment, SlopeOfExactPowerLaw) {
  std::vector<DecayRow> rows;
  for (int T : {100, 200, 400, 800}) {
    DecayRow r;
    r.T = T;
    r.eps_A_2.median = 3.0 / std::sqrt(static_cast<double>(T));
    rows.push_back(r);
  }
  EXPECT_NEAR(loglog_slope(rows), -0.5, 1e-12);
}
