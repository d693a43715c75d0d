#include <benchmark/benchmark.h>

#include <random>

#include "safelqr/pipeline.hpp"

using namespace safelqr;

namespace {

LinearSystem double_integrator() {
  Matrix A(2, 2);
  A << 1.0, 0.1, 0.0, 1.0;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  return {A, B};
}

SynthesisSpec di_spec(int L, double eps) {
  SynthesisSpec spec;
  spec.sys = double_integrator();
  spec.cons = PolytopeConstraints::box(2, 1, 8.0, 4.0);
  spec.sigma_w = 0.1;
  spec.x0 = Vector::Zero(2);
  spec.L = L;
  spec.Q = Matrix::Identity(2, 2);
  spec.R = Matrix::Identity(1, 1);
  spec.unc = UncertaintySpec{eps, eps, eps, eps};
  spec.gamma = eps > 0.0 ? 0.5 : 0.0;
  spec.tau = eps > 0.0 ? 0.3 : 0.0;
  return spec;
}

FirResponse random_fir(int L, int rows, int cols) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrix> blocks;
  for (int k = 0; k < L; ++k) {
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = u(rng);
    blocks.push_back(M);
  }
  return FirResponse(std::move(blocks));
}

void BM_NominalSynthesis(benchmark::State& state) {
  const SynthesisSpec spec = di_spec(static_cast<int>(state.range(0)), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec));
}
BENCHMARK(BM_NominalSynthesis)->Arg(5)->Arg(10)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_RobustSynthesis(benchmark::State& state) {
  const SynthesisSpec spec = di_spec(static_cast<int>(state.range(0)), 0.001);
  SynthesisOptions options;
  options.backend = state.range(1) ? HinfBackend::Lmi : HinfBackend::Surrogate;
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec, options));
}
BENCHMARK(BM_RobustSynthesis)->Args({8, 0})->Args({8, 1})->Args({15, 0})->Args({15, 1})->Unit(benchmark::kMillisecond);

void BM_ConicSdp(benchmark::State& state) {
  // Smallest eigenvalue of a random symmetric matrix: minimize -t s.t. M - t I >= 0.
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = g(rng);
  M = 0.5 * (M + M.transpose());
  ConicProgram p;
  const int t = p.add_variables(1);
  p.set_objective(t, -1.0);
  std::vector<AffineExpr> lower;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      AffineExpr e(M(i, j));
      if (i == j) e.add(t, -1.0);
      lower.push_back(e);
    }
  }
  p.add_psd(n, lower);
  for (auto _ : state) benchmark::DoNotOptimize(solve_conic(p));
}
BENCHMARK(BM_ConicSdp)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_HinfCertified(benchmark::State& state) {
  const FirResponse phi = random_fir(static_cast<int>(state.range(0)), 3, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(phi, HinfMode::CertifiedUpper));
}
BENCHMARK(BM_HinfCertified)->Arg(15)->Arg(64);

void BM_Rollout(benchmark::State& state) {
  const SynthesisResult res = solve(di_spec(15, 0.0));
  SlsController ctrl(res.phi_x, res.phi_u);
  const NoiseModel noise{0.1, 0.5, NoiseDistribution::Uniform, 3};
  const int T = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rollout(double_integrator(), ctrl, noise, T, Vector::Zero(2)));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Rollout)->Arg(200)->Arg(800);

}  // namespace
BENCHMARK_MAIN();
