#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "safelqr/io.hpp"

using namespace safelqr;

namespace {

const char* kSmall = R"(
system:
  A: [[1.0, 0.1], [0.0, 1.0]]
  B: [[0.0], [1.0]]
noise:
  sigma_w: 0.1
  sigma_eta: 0.2
  seed: 7
initial_estimate:
  eps_inf: 0.01
  seed: 3
constraints:
  state_bound: 8.0
  input_bound: 4.0
synthesis:
  L: 6
  backend: surrogate
  grid: 4
  golden_rounds: 1
  golden_iterations: 4
learning:
  x0: [0.0, 0.0]
  horizon: 120
  T_schedule: [50, 100]
  trials: 5
tradeoff:
  r_x: [2.0, 4.0, 8.0]
  eps: [0.1, 0.01]
  tolerance: 0.01
figure1:
  x0: [[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]]
  refined_eps: 0.001
output:
  dir: out/small
)";

LearningConfig small() { return parse_learning_config(kSmall); }

std::string with(const std::string& from, const std::string& to) {
  std::string text = kSmall;
  text.replace(text.find(from), from.size(), to);
  return text;
}

bool same(const Trajectory& a, const Trajectory& b) {
  if (a.x.size() != b.x.size() || a.u.size() != b.u.size()) return false;
  for (size_t i = 0; i < a.x.size(); ++i) {
    if (a.x[i] != b.x[i]) return false;
  }
  for (size_t i = 0; i < a.u.size(); ++i) {
    if (a.u[i] != b.u[i]) return false;
  }
  return true;
}

}  // namespace

TEST(Config, ParsesSchema) {
  const LearningConfig cfg = small();
  EXPECT_EQ(cfg.L, 6);
  EXPECT_EQ(cfg.synthesis.backend, HinfBackend::Surrogate);
  EXPECT_EQ(cfg.search.grid, 4);
  EXPECT_EQ(cfg.noise.sigma_eta, 0.2);
  EXPECT_EQ(cfg.T_schedule, (std::vector<int>{50, 100}));
  EXPECT_EQ(cfg.figure1_x0.size(), 3u);
  EXPECT_EQ(cfg.output_dir, "out/small");
  EXPECT_NEAR(induced_inf_norm(cfg.dA0), 0.01, 1e-15);
  EXPECT_NEAR(induced_inf_norm(cfg.dB0), 0.01, 1e-15);
  EXPECT_DOUBLE_EQ(cfg.eps0.eps_A_2, spectral_norm(cfg.dA0));
  EXPECT_TRUE((cfg.estimate.A() - cfg.truth.A() - cfg.dA0).isZero(1e-15));
  EXPECT_TRUE(cfg.Q.isIdentity());
  EXPECT_EQ(cfg.source, kSmall);
}

TEST(Config, ExplicitEstimateAndUncertainty) {
  const LearningConfig cfg = parse_learning_config(with("  eps_inf: 0.01\n  seed: 3\n",
                                                        "  A: [[1.0, 0.12], [0.0, 1.0]]\n"
                                                        "  B: [[0.0], [0.9]]\n"
                                                        "  uncertainty: {eps_A_2: 0.05}\n"));
  EXPECT_NEAR(cfg.dA0(0, 1), 0.02, 1e-15);
  EXPECT_NEAR(cfg.dB0(1, 0), -0.1, 1e-15);
  EXPECT_EQ(cfg.eps0.eps_A_2, 0.05);
  EXPECT_NEAR(cfg.eps0.eps_B_inf, 0.1, 1e-15);
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(parse_learning_config("noise: {sigma_w: 0.1}\n"), DomainError);
  EXPECT_THROW(parse_learning_config(with("B: [[0.0], [1.0]]", "B: [[0.0], [1.0], [2.0]]")), DimensionError);
  EXPECT_THROW(parse_learning_config(with("backend: surrogate", "backend: scs")), DomainError);
  EXPECT_THROW(parse_learning_config(with("T_schedule: [50, 100]", "T_schedule: [2]")), DomainError);
  EXPECT_THROW(parse_learning_config(with("x0: [0.0, 0.0]", "x0: [0.0]")), DimensionError);
  EXPECT_THROW(load_learning_config("/nonexistent/config.yaml"), std::runtime_error);
}

TEST(Config, RepositoryConfigsLoad) {
  for (const char* name : {"double_integrator.yaml", "double_integrator_eps001.yaml"}) {
    const LearningConfig cfg = load_learning_config(std::string(SAFELQR_SOURCE_DIR) + "/configs/" + name);
    EXPECT_EQ(cfg.L, 15);
    EXPECT_EQ(cfg.trials, 400);
    EXPECT_EQ(cfg.noise.sigma_eta, 0.5);
  }
}

TEST(Config, RandomPerturbationHasExactNorm) {
  NoiseSampler a(NoiseDistribution::Uniform, 5);
  NoiseSampler b(NoiseDistribution::Uniform, 5);
  const Matrix D = random_perturbation(3, 2, 0.25, a);
  EXPECT_NEAR(induced_inf_norm(D), 0.25, 1e-15);
  EXPECT_EQ(D, random_perturbation(3, 2, 0.25, b));
  EXPECT_TRUE(random_perturbation(2, 2, 0.0, a).isZero(0.0));
}

TEST(Excitation, SubstitutionExamples) {
  const PolytopeConstraints cons = PolytopeConstraints::box(2, 1, 8.0, 4.0);
  const Matrix B0 = oracle::double_integrator().B();
  const ExcitationSubstitution none = substitute_excitation(0.1, 0.0, B0, 0.1, cons);
  EXPECT_EQ(none.sigma_w, 0.1);
  EXPECT_EQ(none.cons.bu(), cons.bu());
  EXPECT_EQ(none.cons.bx(), cons.bx());
  const ExcitationSubstitution s = substitute_excitation(0.1, 0.5, B0, 0.1, cons);
  EXPECT_NEAR(s.sigma_w, 0.65, 1e-15);
  EXPECT_TRUE(s.cons.bu().isApprox(Vector::Constant(2, 3.5)));
  EXPECT_EQ(s.cons.bx(), cons.bx());
  EXPECT_DOUBLE_EQ(excitation_ceiling(cons), 4.0);
  EXPECT_LT(substitute_excitation(0.1, 4.5, B0, 0.1, cons).cons.bu().maxCoeff(), 0.0);
  EXPECT_THROW(substitute_excitation(0.1, -0.1, B0, 0.1, cons), DomainError);
}

TEST(Excitation, LearningSpecWithoutExcitationIsPlainRobustSpec) {
  const LearningConfig cfg = small();
  const SynthesisSpec a = learning_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, 0.0, cfg.x0);
  const SynthesisSpec b = make_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_w, cfg.x0);
  EXPECT_EQ(a.sigma_w, b.sigma_w);
  EXPECT_EQ(a.cons.bu(), b.cons.bu());
  EXPECT_EQ(a.unc.eps_A_inf, b.unc.eps_A_inf);
  EXPECT_EQ(a.gamma, 0.0);
  EXPECT_EQ(a.tau, 0.0);
}

TEST(Feasibility, DoubleIntegratorCoarseEstimateWithoutExcitation) {
  const LearningConfig cfg =
      load_learning_config(std::string(SAFELQR_SOURCE_DIR) + "/configs/double_integrator.yaml");
  const SynthesisSpec spec = make_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_w, cfg.x0);
  EXPECT_TRUE(robust_feasible(spec, cfg.synthesis, cfg.search));
}

TEST(Feasibility, DiagnosisNamesARelaxation) {
  LearningConfig cfg = small();
  cfg.cons = PolytopeConstraints::box(2, 1, 0.05, 4.0);
  const SynthesisSpec spec = make_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_w, cfg.x0);
  EXPECT_FALSE(robust_feasible(spec, cfg.synthesis, cfg.search));
  EXPECT_EQ(diagnose_infeasibility(spec, cfg.synthesis, cfg.search), "state-constraints");
}

TEST(LearningRound, CompletesSafelyAndRefines) {
  const LearningConfig cfg = small();
  const LearningRound r = safe_learning_round(cfg);
  ASSERT_TRUE(r.initial.result.feasible());
  EXPECT_EQ(r.trajectory.horizon(), cfg.horizon);
  EXPECT_EQ(r.violations.count, 0);
  EXPECT_EQ(r.estimate.T_used, cfg.horizon);
  EXPECT_DOUBLE_EQ(r.refined_spec.unc.eps_A_inf, cfg.inflation * r.estimate.actual.eps_A_inf);
  EXPECT_DOUBLE_EQ(r.refined_spec.unc.eps_B_2, cfg.inflation * r.estimate.actual.eps_B_2);
  EXPECT_EQ(r.refined_spec.sigma_w, cfg.noise.sigma_w);
  EXPECT_EQ(r.refined_spec.cons.bu(), cfg.cons.bu());
  const LearningRound again = safe_learning_round(cfg);
  EXPECT_TRUE(same(r.trajectory, again.trajectory));
  EXPECT_EQ(r.refined.result.robust_cost, again.refined.result.robust_cost);
}

TEST(LearningRound, InitialInfeasibilityNamesBindingConstraint) {
  LearningConfig cfg = small();
  cfg.cons = PolytopeConstraints::box(2, 1, 0.05, 4.0);
  try {
    safe_learning_round(cfg);
    FAIL() << "expected an infeasibility error";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.binding(), "state-constraints");
  }
}

TEST(Tradeoff, MonotoneInRadiusAndEstimateQuality) {
  const LearningConfig cfg = small();
  const std::vector<TradeoffRow> rows = tradeoff_sweep(cfg);
  ASSERT_EQ(rows.size(), 6u);
  for (size_t e = 0; e < 2; ++e) {
    for (size_t i = 1; i < 3; ++i) EXPECT_GE(rows[3 * e + i].max_sigma_eta, rows[3 * e + i - 1].max_sigma_eta);
  }
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].eps, 0.1);
    EXPECT_EQ(rows[3 + i].eps, 0.01);
    EXPECT_GE(rows[3 + i].max_sigma_eta, rows[i].max_sigma_eta);
    EXPECT_LE(rows[3 + i].max_sigma_eta, excitation_ceiling(cfg.cons));
  }
  EXPECT_GT(rows[5].max_sigma_eta, rows[2].max_sigma_eta);
}

TEST(Figure1, TrajectoriesAreCleanAndRefinedSetIsLarger) {
  LearningConfig cfg = small();
  cfg.horizon = 60;
  const std::vector<Figure1Panel> panels = run_figure1(cfg);
  ASSERT_EQ(panels.size(), 2u);
  for (const Figure1Panel& p : panels) {
    EXPECT_EQ(p.trajectories.size() + p.skipped.size(), cfg.figure1_x0.size());
    for (const ViolationReport& v : p.violations) EXPECT_EQ(v.count, 0);
  }
  EXPECT_GE(panels[1].trajectories.size(), panels[0].trajectories.size());
  EXPECT_FALSE(panels[0].trajectories.empty());
}

TEST(Figure2a, DelegatesToDecayExperiment) {
  const LearningConfig cfg = small();
  const std::vector<DecayRow> rows = run_figure2a(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].T, 50);
  EXPECT_LT(rows[1].eps_A_2.median, rows[0].eps_A_2.median);
  EXPECT_EQ(run_figure2a(cfg)[1].eps_A_2.median, rows[1].eps_A_2.median);
}

TEST(Suboptimality, RefinedEstimateGapWithinBound) {
  const LearningConfig cfg = small();
  const auto [est, unc] = scaled_estimate(cfg, 0.001);
  EXPECT_NEAR(induced_inf_norm(est.A() - cfg.truth.A()), 0.001, 1e-15);
  const SuboptimalityReport rep = suboptimality_study(cfg, est, unc);
  ASSERT_TRUE(rep.measured);
  EXPECT_GT(rep.J_star, 0.0);
  EXPECT_DOUBLE_EQ(rep.gap, cost_gap(rep.J_hat, rep.J_star));
  if (rep.bound.applicable) EXPECT_LE(rep.gap, rep.bound.bound + 1e-3);
  EXPECT_GE(rep.fir_bound.bound, rep.bound.bound);
}

TEST(Io, ResponseCsvRoundTrip) {
  std::mt19937_64 rng(8);
  const FirResponse phi = oracle::random_fir(rng, 4, 2, 3);
  const std::string dir = (std::filesystem::temp_directory_path() / "safelqr_io_test").string();
  ensure_dir(dir);
  write_response_csv(dir + "/phi.csv", phi);
  const FirResponse back = read_response_csv(dir + "/phi.csv");
  ASSERT_EQ(back.length(), 4);
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(back[k], phi[k]);
  std::filesystem::remove_all(dir);
}
