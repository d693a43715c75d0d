#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace safelqr;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

FirResponse scalar_fir(std::initializer_list<double> values) {
  std::vector<Matrix> blocks;
  for (double v : values) blocks.push_back(scalar(v));
  return FirResponse(std::move(blocks));
}

}  // namespace

TEST(FirResponse, ShapeChecksAndAccessors) {
  EXPECT_THROW(FirResponse(std::vector<Matrix>{}), DimensionError);
  EXPECT_THROW(FirResponse({Matrix::Zero(2, 2), Matrix::Zero(2, 3)}), DimensionError);
  const FirResponse phi = scalar_fir({1.0, 2.0});
  EXPECT_EQ(phi.coeff(0)(0, 0), 0.0);
  EXPECT_EQ(phi.coeff(3)(0, 0), 0.0);
  EXPECT_EQ(phi.coeff(2)(0, 0), 2.0);
  const Matrix row = phi.block_row(3);
  ASSERT_EQ(row.cols(), 3);
  EXPECT_EQ(row(0, 0), 0.0);
  EXPECT_EQ(row(0, 1), 2.0);
  EXPECT_EQ(row(0, 2), 1.0);
}

TEST(Compose, PureDelays) {
  const FirResponse delay({Matrix::Identity(2, 2)});
  const FirResponse out = fir_compose(delay, delay);
  ASSERT_EQ(out.length(), 2);
  EXPECT_EQ(out[1], Matrix::Zero(2, 2));
  EXPECT_EQ(out[2], Matrix::Identity(2, 2));
}

TEST(Compose, SingleTermConvolution) {
  std::mt19937_64 rng(1);
  const Matrix A1 = oracle::random_matrix(rng, 2, 3);
  const Matrix A2 = oracle::random_matrix(rng, 2, 3);
  const Matrix B1 = oracle::random_matrix(rng, 3, 2);
  const FirResponse out = fir_compose(FirResponse({A1, A2}), FirResponse({B1}));
  ASSERT_EQ(out.length(), 3);
  EXPECT_TRUE(out[1].isZero(0.0));
  EXPECT_TRUE(out[2].isApprox(A1 * B1, 1e-15));
  EXPECT_TRUE(out[3].isApprox(A2 * B1, 1e-15));
}

TEST(Compose, MatchesCascadeSimulation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const FirResponse M = oracle::random_fir(rng, 4, 2, 2);
    const FirResponse D = oracle::random_fir(rng, 4, 2, 2);
    std::vector<Vector> input;
    for (int k = 0; k < 20; ++k) input.push_back(oracle::random_vector(rng, 2));
    const auto cascade = oracle::filter(M, oracle::filter(D, input));
    const auto direct = oracle::filter(fir_compose(M, D), input);
    for (size_t k = 0; k < input.size(); ++k) EXPECT_LT((cascade[k] - direct[k]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Compose, AssociativeAndBilinear) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const FirResponse A = oracle::random_fir(rng, 3, 2, 3);
    const FirResponse B = oracle::random_fir(rng, 2, 3, 2);
    const FirResponse B2 = oracle::random_fir(rng, 2, 3, 2);
    const FirResponse C = oracle::random_fir(rng, 4, 2, 2);
    const FirResponse left = fir_compose(fir_compose(A, B), C);
    const FirResponse right = fir_compose(A, fir_compose(B, C));
    ASSERT_EQ(left.length(), right.length());
    for (int k = 1; k <= left.length(); ++k) EXPECT_LT((left[k] - right[k]).cwiseAbs().maxCoeff(), 1e-12);

    std::vector<Matrix> sum;
    for (int k = 1; k <= 2; ++k) sum.push_back(2.0 * B[k] - 0.5 * B2[k]);
    const FirResponse lin = fir_compose(A, FirResponse(sum));
    const FirResponse p1 = fir_compose(A, B);
    const FirResponse p2 = fir_compose(A, B2);
    for (int k = 1; k <= lin.length(); ++k) {
      EXPECT_LT((lin[k] - (2.0 * p1[k] - 0.5 * p2[k])).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Toeplitz, DefinitionExamples) {
  const Matrix t1 = toeplitz(scalar_fir({3.0}), 2);
  EXPECT_EQ(t1, (Matrix(2, 2) << 3, 0, 0, 3).finished());
  const Matrix t2 = toeplitz(scalar_fir({3.0, 5.0}), 2);
  EXPECT_EQ(t2, (Matrix(2, 2) << 3, 0, 5, 3).finished());
}

TEST(Toeplitz, BlockRowIdentityMatchesCompose) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const FirResponse M = oracle::random_fir(rng, 4, 2, 3);
    const FirResponse D = oracle::random_fir(rng, 3, 3, 2);
    const FirResponse Mt = fir_compose(M, D);
    for (int k = 1; k <= 5; ++k) {
      // [Mt(k+1) ... Mt(2)] = M[k:1] Toep_k(D)
      const Matrix lhs = Mt.block_row(k + 1).leftCols(k * 2);
      const Matrix rhs = M.block_row(k) * toeplitz(D, k);
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Norms, H2Examples) {
  EXPECT_NEAR(h2_norm(FirResponse({Matrix::Identity(2, 2)})), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h2_norm(FirResponse({Matrix::Identity(2, 2), 0.5 * Matrix::Identity(2, 2)})), std::sqrt(2.5), 1e-15);
  EXPECT_DOUBLE_EQ(h2_norm(scalar_fir({3.0})), 3.0);
}

TEST(Norms, L1Examples) {
  EXPECT_DOUBLE_EQ(l1_norm(FirResponse({Matrix::Identity(2, 2)})), 1.0);
  Matrix a(2, 2);
  a << 1, -2, 0, 3;
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  EXPECT_DOUBLE_EQ(l1_norm(FirResponse({a, b})), 4.0);
}

TEST(Norms, L1EqualsSignSequenceEnumeration) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const FirResponse phi = oracle::random_fir(rng, 3, 2, 2);
    double best = 0.0;
    for (int mask = 0; mask < (1 << 6); ++mask) {
      std::vector<Vector> input;
      for (int s = 0; s < 3; ++s) {
        Vector w(2);
        for (int i = 0; i < 2; ++i) w(i) = (mask >> (2 * s + i)) & 1 ? 1.0 : -1.0;
        input.push_back(w);
      }
      input.push_back(Vector::Zero(2));
      best = std::max(best, oracle::filter(phi, input)[3].lpNorm<Eigen::Infinity>());
    }
    EXPECT_NEAR(l1_norm(phi), best, 1e-12);
  }
}

TEST(Norms, HinfExamples) {
  Matrix m(2, 2);
  m << 2, 0, 0, 1;
  const FirResponse diag({m});
  for (auto mode : {HinfMode::GridLower, HinfMode::CertifiedUpper}) {
    EXPECT_NEAR(hinf_norm(diag, mode), 2.0, 1e-9);
    EXPECT_NEAR(hinf_norm(scalar_fir({1.0, 1.0}), mode), 2.0, 1e-9);
    EXPECT_NEAR(hinf_norm(scalar_fir({1.0, -1.0}), mode), 2.0, 1e-9);
  }
}

TEST(Norms, GridBelowCertifiedAndNearToeplitz) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = 2 + trial % 5;
    const FirResponse phi = oracle::random_fir(rng, L, 2, 3);
    const double grid = hinf_norm(phi, HinfMode::GridLower);
    const double cert = hinf_norm(phi, HinfMode::CertifiedUpper);
    const double toep = hinf_norm_toeplitz_estimate(phi, 100 * L);
    EXPECT_LE(grid, cert + 1e-12);
    EXPECT_LE(toep, cert + 1e-9);
    EXPECT_LE(cert, std::sqrt(l1_norm(phi) * l1_norm_transposed(phi)) + 1e-12);
    EXPECT_NEAR(grid, toep, 1e-3 * (1.0 + grid));
    EXPECT_LE(hinf_norm_certified(phi, 5e-4), hinf_norm_grid(phi, 100000) * (1.0 + 6e-4) + 1e-12);
  }
}

TEST(FitDecay, ExactGeometric) {
  std::vector<Matrix> blocks;
  for (int k = 1; k <= 6; ++k) blocks.push_back(std::pow(0.5, k) * Matrix::Identity(2, 2));
  const DecayEnvelope env = fit_decay(FirResponse(blocks));
  EXPECT_NEAR(env.C, 1.0, 1e-9);
  EXPECT_NEAR(env.rho, 0.5, 1e-9);
}

TEST(FitDecay, SingleSampleConvention) {
  const DecayEnvelope env = fit_decay(FirResponse({Matrix::Identity(2, 2)}));
  EXPECT_DOUBLE_EQ(env.C, 2.0);
  EXPECT_DOUBLE_EQ(env.rho, 0.5);
}

TEST(FitDecay, DominatesEveryBlockWithZerosSkipped) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    FirResponse phi = oracle::random_fir(rng, 8, 2, 2);
    phi[3].setZero();
    const double margin = 1.0 + 0.1 * (trial % 3);
    const DecayEnvelope env = fit_decay(phi, margin);
    EXPECT_GT(env.rho, 0.0);
    EXPECT_LT(env.rho, 1.0);
    for (int k = 1; k <= 8; ++k) EXPECT_LE(spectral_norm(phi[k]), env.bound(k) * (1.0 + 1e-12));
  }
  EXPECT_THROW(fit_decay(FirResponse({Matrix::Zero(2, 2)})), DomainError);
  EXPECT_THROW(fit_decay(FirResponse({Matrix::Identity(2, 2)}), 0.5), DomainError);
}

TEST(SeriesInverse, RecoversIdentity) {
  std::mt19937_64 rng(11);
  const FirResponse D = oracle::random_fir(rng, 3, 2, 2, 0.2);
  const FirResponse E = series_inverse(D, 12);
  // (I + D)(I + E) = I up to the truncation horizon: D + E + D E = 0 for k <= 12.
  const FirResponse DE = fir_compose(D, E);
  for (int k = 1; k <= 12; ++k) {
    const Matrix sum = D.coeff(k) + E.coeff(k) + DE.coeff(k);
    EXPECT_LT(sum.cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Lemma3, ToeplitzL1Bound) {
  std::mt19937_64 rng(12);
  int checked = 0;
  while (checked < 100) {
    const int L = 2 + checked % 4;
    FirResponse D = oracle::random_fir(rng, L, 2, 2);
    const double zeta = 0.05 + 0.8 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    D = D.scaled(zeta / l1_norm(D));
    ASSERT_NEAR(l1_norm(D), zeta, 1e-12);
    // D (I + D)^{-1} = D + D E with E the strictly proper part of the inverse.
    const FirResponse Dp = compose_with_inverse(D, D, 4 * L);
    for (int k = 1; k <= L; ++k) {
      const Vector v = oracle::random_vector(rng, 2 * k);
      const double lhs = (v.transpose() * toeplitz(Dp, k)).cwiseAbs().sum();
      EXPECT_LE(lhs, zeta / (1.0 - zeta) * v.lpNorm<1>() + 1e-12);
    }
    ++checked;
  }
}
