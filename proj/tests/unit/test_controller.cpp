#include <gtest/gtest.h>

#include "oracles.hpp"
#include "safelqr/sim.hpp"

using namespace safelqr;

namespace {

// x_k = Phi_x(k+1) x0 + sum_{t=1..k} Phi_x(t) w_{k-t}, and the same for u with Phi_u.
Vector convolve(const FirResponse& phi, const Vector& x0, const std::vector<Vector>& w, int k) {
  Vector y = phi.coeff(k + 1) * x0;
  for (int t = 1; t <= k; ++t) y += phi.coeff(t) * w[static_cast<size_t>(k - t)];
  return y;
}

// Consistent responses whose tail vanishes, possible when B is square and invertible.
oracle::Responses deadbeat(std::mt19937_64& rng, const LinearSystem& sys, int L) {
  oracle::Responses r = oracle::random_consistent(rng, sys, L);
  std::vector<Matrix> bu = r.phi_u.blocks();
  bu.back() = -sys.B().inverse() * sys.A() * r.phi_x[L];
  r.phi_u = FirResponse(bu);
  r.V = Matrix::Zero(sys.n(), sys.n());
  return r;
}

}  // namespace

TEST(Controller, StaticGainIsStaticFeedback) {
  Matrix K(1, 2);
  K << -0.5, 2.0;
  SlsController c = SlsController::static_gain(K);
  Vector x(2);
  x << 1.0, -1.0;
  Vector eta(1);
  eta << 0.25;
  EXPECT_NEAR(c.step(x, eta)(0), -2.5 + 0.25, 1e-15);
  EXPECT_NEAR(c.step(2.0 * x)(0), -5.0, 1e-15);
}

TEST(Controller, ZeroStateGivesZeroInput) {
  std::mt19937_64 rng(1);
  const auto r = oracle::random_consistent(rng, oracle::double_integrator(), 5);
  SlsController c(r.phi_x, r.phi_u);
  for (int k = 0; k < 12; ++k) EXPECT_EQ(c.step(Vector::Zero(2), Vector::Zero(1)).norm(), 0.0);
}

TEST(Controller, ResetIsIdempotent) {
  std::mt19937_64 rng(2);
  const auto r = oracle::random_consistent(rng, oracle::double_integrator(), 4);
  SlsController c(r.phi_x, r.phi_u);
  std::vector<Vector> xs;
  for (int k = 0; k < 6; ++k) xs.push_back(oracle::random_vector(rng, 2));
  std::vector<Vector> first;
  for (const auto& x : xs) first.push_back(c.step(x));
  c.reset();
  c.reset();
  for (size_t k = 0; k < xs.size(); ++k) EXPECT_EQ(c.step(xs[k]), first[k]);
}

TEST(Controller, RejectsInvalidResponses) {
  const FirResponse px({2.0 * Matrix::Identity(2, 2)});
  const FirResponse pu({Matrix::Zero(1, 2)});
  EXPECT_THROW(SlsController(px, pu), DomainError);
  const FirResponse px2({Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  EXPECT_THROW(SlsController(px2, pu), DimensionError);
  SlsController ok(FirResponse({Matrix::Identity(2, 2)}), pu);
  EXPECT_THROW(ok.step(Vector::Zero(3)), DimensionError);
}

TEST(Controller, ReproducesConvolutionOnTheModel) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 2 + trial % 6;
    const LinearSystem sys(oracle::random_matrix(rng, 2, 2), oracle::random_matrix(rng, 2, 1));
    const auto r = oracle::random_consistent(rng, sys, L);
    SlsController c(r.phi_x, r.phi_u);
    std::vector<Vector> w;
    for (int k = 0; k < L; ++k) w.push_back(oracle::random_vector(rng, 2));
    const Vector x0 = oracle::random_vector(rng, 2, 2.0);
    const Trajectory traj = rollout(sys, c, w, {}, x0);
    // The tail V enters at k = L, so the first L steps are exact for any consistent pair.
    for (int k = 0; k < L; ++k) {
      EXPECT_LT((traj.x[static_cast<size_t>(k)] - convolve(r.phi_x, x0, w, k)).norm(), 1e-9);
      EXPECT_LT((traj.u[static_cast<size_t>(k)] - convolve(r.phi_u, x0, w, k)).norm(), 1e-9);
    }
  }
}

TEST(Controller, ZeroTailIsExactForever) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int L = 3 + trial % 4;
    Matrix B = oracle::random_matrix(rng, 2, 2) + 2.0 * Matrix::Identity(2, 2);
    const LinearSystem sys(oracle::random_matrix(rng, 2, 2), B);
    const auto r = deadbeat(rng, sys, L);
    ASSERT_LT(max_abs(affine_residual(r.phi_x, r.phi_u, r.V, sys)), 1e-12);
    SlsController c(r.phi_x, r.phi_u);
    std::vector<Vector> w;
    for (int k = 0; k < 4 * L; ++k) w.push_back(oracle::random_vector(rng, 2));
    const Vector x0 = oracle::random_vector(rng, 2);
    const Trajectory traj = rollout(sys, c, w, {}, x0);
    for (int k = 0; k <= 4 * L; ++k) {
      EXPECT_LT((traj.x[static_cast<size_t>(k)] - convolve(r.phi_x, x0, w, k)).norm(), 1e-9);
    }
  }
}

TEST(Controller, FreeResponseFollowsFirstColumnBlocks) {
  std::mt19937_64 rng(5);
  const LinearSystem sys = oracle::double_integrator();
  const auto r = oracle::random_consistent(rng, sys, 6);
  SlsController c(r.phi_x, r.phi_u);
  Vector x0(2);
  x0 << 1.5, -0.5;
  const Trajectory traj = rollout(sys, c, std::vector<Vector>(6, Vector::Zero(2)), {}, x0);
  for (int k = 0; k < 6; ++k) EXPECT_LT((traj.x[static_cast<size_t>(k)] - r.phi_x[k + 1] * x0).norm(), 1e-12);
}

TEST(Controller, RobustControllerStaysBoundedOnPerturbedTruth) {
  SynthesisSpec spec;
  spec.sys = oracle::double_integrator();
  spec.cons = PolytopeConstraints::box(2, 1, 4.0, 4.0);
  spec.sigma_w = 0.1;
  spec.x0 = Vector::Zero(2);
  spec.x0(0) = 1.0;
  spec.L = 8;
  spec.Q = Matrix::Identity(2, 2);
  spec.R = Matrix::Identity(1, 1);
  spec.unc = {0.01, 0.01, 0.01, 0.01};
  spec.gamma = 0.6;
  spec.tau = 0.15;
  const SynthesisResult res = solve(spec);
  ASSERT_TRUE(res.feasible());
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix dA = oracle::random_with_inf_norm(rng, 2, 2, 0.01);
    Matrix dB = oracle::random_with_inf_norm(rng, 2, 1, 0.01);
    dA *= std::min(1.0, 0.01 / spectral_norm(dA));
    dB *= std::min(1.0, 0.01 / spectral_norm(dB));
    const LinearSystem truth(spec.sys.A() + dA, spec.sys.B() + dB);
    SlsController c(res.phi_x, res.phi_u);
    NoiseModel noise{0.1, 0.0, NoiseDistribution::Uniform, derive_seed(7, static_cast<std::uint64_t>(trial))};
    const Trajectory traj = rollout(truth, c, noise, 10 * spec.L, spec.x0);
    for (const Vector& x : traj.x) EXPECT_LT(x.norm(), 1e3 * spec.x0.norm() + 1e3);
  }
}
