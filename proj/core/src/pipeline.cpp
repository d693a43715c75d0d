#include "safelqr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safelqr {

ExcitationSubstitution substitute_excitation(double sigma_w, double sigma_eta, const Matrix& B0, double eps_B_inf,
                                             const PolytopeConstraints& cons) {
  require_domain(sigma_eta >= 0.0, "sigma_eta must be nonnegative");
  ExcitationSubstitution s;
  s.sigma_w = sigma_w + sigma_eta * (induced_inf_norm(B0) + eps_B_inf);
  const Vector row_l1 = cons.Fu().cwiseAbs().rowwise().sum();
  s.cons = PolytopeConstraints(cons.Fx(), cons.bx(), cons.Fu(), cons.bu() - sigma_eta * row_l1);
  return s;
}

double excitation_ceiling(const PolytopeConstraints& cons) {
  double ceiling = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < cons.Fu().rows(); ++j) {
    const double l1 = cons.Fu().row(j).cwiseAbs().sum();
    if (l1 > 0.0) ceiling = std::min(ceiling, cons.bu()(j) / l1);
  }
  return ceiling;
}

SynthesisSpec make_spec(const LearningConfig& cfg, const LinearSystem& estimate, const UncertaintySpec& unc,
                        const PolytopeConstraints& cons, double sigma_w, const Vector& x0) {
  SynthesisSpec spec;
  spec.sys = estimate;
  spec.unc = unc;
  spec.cons = cons;
  spec.sigma_w = sigma_w;
  spec.x0 = x0;
  spec.L = cfg.L;
  spec.Q = cfg.Q;
  spec.R = cfg.R;
  return spec;
}

SynthesisSpec learning_spec(const LearningConfig& cfg, const LinearSystem& estimate, const UncertaintySpec& unc,
                            const PolytopeConstraints& cons, double sigma_eta, const Vector& x0) {
  const ExcitationSubstitution sub =
      substitute_excitation(cfg.noise.sigma_w, sigma_eta, estimate.B(), unc.eps_B_inf, cons);
  return make_spec(cfg, estimate, unc, sub.cons, sub.sigma_w, x0);
}

bool robust_feasible(const SynthesisSpec& spec, const SynthesisOptions& options, const OuterSearchOptions& search) {
  const double top = 1.0 - search.delta;
  SynthesisSpec s = spec;
  s.gamma = top;
  SynthesisOptions surrogate = options;
  surrogate.backend = HinfBackend::Surrogate;
  for (int i = 0; i < search.grid; ++i) {
    s.tau = top * i / (search.grid - 1);
    // The surrogate bound dominates the exact norm, so its feasibility settles the question cheaply.
    if (solve(s, surrogate).feasible()) return true;
    if (options.backend == HinfBackend::Lmi && solve(s, options).feasible()) return true;
  }
  return false;
}

std::string diagnose_infeasibility(const SynthesisSpec& spec, const SynthesisOptions& options,
                                   const OuterSearchOptions& search) {
  SynthesisSpec s = spec;
  s.unc.eps_A_inf = s.unc.eps_B_inf = 0.0;
  if (robust_feasible(s, options, search)) return "l1-budget";
  const double big = 1e6;
  s = spec;
  s.cons = PolytopeConstraints(spec.cons.Fx(), Vector::Constant(spec.cons.state_rows(), big), spec.cons.Fu(),
                               spec.cons.bu());
  if (robust_feasible(s, options, search)) return "state-constraints";
  s.cons = PolytopeConstraints(spec.cons.Fx(), spec.cons.bx(), spec.cons.Fu(),
                               Vector::Constant(spec.cons.input_rows(), big));
  if (robust_feasible(s, options, search)) return "input-constraints";
  s = spec;
  s.unc.eps_A_2 = s.unc.eps_B_2 = 0.0;
  if (robust_feasible(s, options, search)) return "hinf-budget";
  return "unknown";
}

LearningRound safe_learning_round(const LearningConfig& cfg) {
  cfg.validate();
  LearningRound round;
  round.initial_spec = learning_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_eta, cfg.x0);
  round.initial = outer_search(round.initial_spec, cfg.synthesis, cfg.search);
  if (round.initial.result.status == SynthesisStatus::SolverError) {
    throw SolverFailureError("initial learning problem: " + round.initial.result.message);
  }
  if (!round.initial.result.feasible()) {
    const std::string binding = diagnose_infeasibility(round.initial_spec, cfg.synthesis, cfg.search);
    throw InfeasibleError("initial learning problem is infeasible (binding: " + binding + ")", binding);
  }
  const SynthesisResult& init = round.initial.result;
  round.controller = SlsController(init.phi_x, init.phi_u);

  SlsController ctrl = round.controller;
  round.trajectory = rollout(cfg.truth, ctrl, cfg.noise, cfg.horizon, cfg.x0);
  round.trajectory.system_id = "truth";
  round.trajectory.controller_id = "initial";
  round.violations = check_constraints(round.trajectory, cfg.cons);

  round.estimate = estimate(round.trajectory, cfg.truth, cfg.inflation);
  const LinearSystem refined(round.estimate.A_hat, round.estimate.B_hat);
  round.refined_spec = make_spec(cfg, refined, round.estimate.eps, cfg.cons, cfg.noise.sigma_w, cfg.x0);
  round.refined = outer_search(round.refined_spec, cfg.synthesis, cfg.search);
  return round;
}

std::pair<LinearSystem, UncertaintySpec> scaled_estimate(const LearningConfig& cfg, double eps) {
  require_domain(eps >= 0.0, "eps must be nonnegative");
  auto scale = [eps](const Matrix& D) {
    const double norm = induced_inf_norm(D);
    return norm > 0.0 ? Matrix(D * (eps / norm)) : Matrix(D);
  };
  const Matrix dA = scale(cfg.dA0);
  const Matrix dB = scale(cfg.dB0);
  UncertaintySpec unc{spectral_norm(dA), spectral_norm(dB), induced_inf_norm(dA), induced_inf_norm(dB)};
  return {LinearSystem(cfg.truth.A() + dA, cfg.truth.B() + dB), unc};
}

std::vector<TradeoffRow> tradeoff_sweep(const LearningConfig& cfg) {
  cfg.validate();
  require_domain(!cfg.tradeoff_r_x.empty(), "trade-off sweep needs state radii");
  const int n = cfg.truth.n();
  const int d = cfg.truth.d();
  const Vector x0 = Vector::Zero(n);
  std::vector<TradeoffRow> rows;
  for (double eps : cfg.tradeoff_eps) {
    const auto [est, unc] = scaled_estimate(cfg, eps);
    for (double r_x : cfg.tradeoff_r_x) {
      const PolytopeConstraints base =
          PolytopeConstraints::box(n, d, r_x, cfg.cons.bu().size() ? cfg.cons.bu().maxCoeff() : 0.0);
      TradeoffRow row{eps, r_x, 0.0, 0};
      auto feasible = [&](double sigma_eta) {
        ++row.probes;
        return robust_feasible(learning_spec(cfg, est, unc, base, sigma_eta, x0), cfg.synthesis, cfg.search);
      };
      if (feasible(0.0)) {
        double lo = 0.0;
        double hi = excitation_ceiling(base) * (1.0 - 1e-9);
        if (feasible(hi)) {
          lo = hi;
        } else {
          while (hi - lo > cfg.tradeoff_tol) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
          }
        }
        row.max_sigma_eta = lo;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<Figure1Panel> run_figure1(const LearningConfig& cfg) {
  cfg.validate();
  std::vector<Vector> starts = cfg.figure1_x0;
  if (starts.empty()) starts.push_back(cfg.x0);
  const auto [refined, refined_unc] = scaled_estimate(cfg, cfg.refined_eps);

  std::vector<Figure1Panel> panels(2);
  panels[0].name = "a";
  panels[1].name = "b";
  for (size_t p = 0; p < panels.size(); ++p) {
    Figure1Panel& panel = panels[p];
    NoiseModel noise = cfg.noise;
    if (p == 1) noise.sigma_eta = 0.0;
    for (size_t i = 0; i < starts.size(); ++i) {
      const Vector& x0 = starts[i];
      const SynthesisSpec spec = p == 0 ? learning_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, noise.sigma_eta, x0)
                                        : make_spec(cfg, refined, refined_unc, cfg.cons, noise.sigma_w, x0);
      const OuterSearchResult res = outer_search(spec, cfg.synthesis, cfg.search);
      if (!res.result.feasible()) {
        panel.skipped.push_back(x0);
        continue;
      }
      SlsController ctrl(res.result.phi_x, res.result.phi_u);
      noise.seed = derive_seed(cfg.noise.seed, 1000 * (p + 1) + i);
      Trajectory traj = rollout(cfg.truth, ctrl, noise, cfg.horizon, x0);
      traj.system_id = "truth";
      traj.controller_id = "figure1-" + panel.name + "-" + std::to_string(i);
      panel.violations.push_back(check_constraints(traj, cfg.cons));
      panel.x0.push_back(x0);
      panel.trajectories.push_back(std::move(traj));
    }
  }
  return panels;
}

std::vector<DecayRow> run_figure2a(const LearningConfig& cfg) {
  cfg.validate();
  const SynthesisSpec spec = learning_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_eta, cfg.x0);
  const OuterSearchResult res = outer_search(spec, cfg.synthesis, cfg.search);
  if (res.result.status == SynthesisStatus::SolverError) {
    throw SolverFailureError("initial learning problem: " + res.result.message);
  }
  if (!res.result.feasible()) {
    const std::string binding = diagnose_infeasibility(spec, cfg.synthesis, cfg.search);
    throw InfeasibleError("initial learning problem is infeasible (binding: " + binding + ")", binding);
  }
  DecayExperiment exp;
  exp.truth = cfg.truth;
  exp.controller = SlsController(res.result.phi_x, res.result.phi_u);
  exp.noise = cfg.noise;
  exp.x0 = cfg.x0;
  exp.T_grid = cfg.T_schedule;
  exp.trials = cfg.trials;
  return error_decay_experiment(exp);
}

SynthesisResult nominal_synthesis(const LearningConfig& cfg, const LinearSystem& sys, const Vector& x0) {
  SynthesisSpec spec = make_spec(cfg, sys, UncertaintySpec{}, cfg.cons, cfg.noise.sigma_w, x0);
  return solve(spec, cfg.synthesis);
}

SuboptimalityReport suboptimality_study(const LearningConfig& cfg, const LinearSystem& estimate,
                                        const UncertaintySpec& unc, double C_fir) {
  SuboptimalityReport rep;
  rep.optimal = nominal_synthesis(cfg, cfg.truth, cfg.x0);
  if (!rep.optimal.feasible()) throw InfeasibleError("nominal problem on the true system is infeasible", "nominal");
  rep.J_star = rep.optimal.nominal_cost;
  rep.norms = gain_norms(rep.optimal.phi_x, rep.optimal.phi_u);
  rep.margins = margins(rep.optimal.phi_x, rep.optimal.phi_u, cfg.cons, cfg.x0, cfg.noise.sigma_w);
  rep.zeta = zeta(unc, rep.norms);
  rep.bound = suboptimality_bound(rep.zeta, rep.margins);

  const DecayEnvelope star = fit_decay(FirResponse::stack(rep.optimal.phi_x, rep.optimal.phi_u), 1.0);
  const Matrix dA = cfg.truth.A() - estimate.A();
  const Matrix dB = cfg.truth.B() - estimate.B();
  std::vector<Matrix> blocks;
  for (int k = 1; k <= rep.optimal.phi_x.length(); ++k) {
    blocks.push_back(dA * rep.optimal.phi_x[k] + dB * rep.optimal.phi_u[k]);
  }
  const FirResponse inv = series_inverse(FirResponse(std::move(blocks)), 4 * cfg.L);
  DecayEnvelope delta{1.0, 0.5};
  if (inv.length() > 0 && inv.blocks().front().cwiseAbs().maxCoeff() > 0.0) delta = fit_decay(inv, 1.0);
  delta.C = std::max(delta.C, 1.0);
  rep.fir_bound = fir_suboptimality_bound(C_fir, cfg.L, combined_envelope(star, delta), rep.zeta, rep.margins.margin());

  const SynthesisSpec spec = make_spec(cfg, estimate, unc, cfg.cons, cfg.noise.sigma_w, cfg.x0);
  rep.robust = outer_search(spec, cfg.synthesis, cfg.search);
  if (rep.robust.result.feasible()) {
    rep.J_hat = achieved_cost(rep.robust.result.phi_x, rep.robust.result.phi_u, cfg.truth, cfg.Q, cfg.R).cost;
    rep.gap = cost_gap(rep.J_hat, rep.J_star);
    rep.measured = true;
  }
  return rep;
}

}  // namespace safelqr
