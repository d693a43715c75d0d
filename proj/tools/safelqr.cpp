#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "safelqr/io.hpp"
#include "safelqr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace safelqr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolver = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

LearningConfig load(const Common& c) {
  LearningConfig cfg = load_learning_config(c.config);
  if (c.seed) cfg.noise.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  ensure_dir(cfg.output_dir);
  write_text((fs::path(cfg.output_dir) / "config.yaml").string(), cfg.source);
  return cfg;
}

std::string path_in(const LearningConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

int status_code(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Feasible:
      return kExitOk;
    case SynthesisStatus::Infeasible:
      return kExitInfeasible;
    case SynthesisStatus::SolverError:
      return kExitSolver;
  }
  return kExitSolver;
}

void write_controller(const LearningConfig& cfg, const SynthesisResult& r, const std::string& prefix) {
  write_response_csv(path_in(cfg, prefix + "phi_x.csv"), r.phi_x);
  write_response_csv(path_in(cfg, prefix + "phi_u.csv"), r.phi_u);
}

std::string uncertainty_lines(const std::string& tag, const UncertaintySpec& u) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << tag << "_eps_A_2: " << u.eps_A_2 << "\n"
      << tag << "_eps_B_2: " << u.eps_B_2 << "\n"
      << tag << "_eps_A_inf: " << u.eps_A_inf << "\n"
      << tag << "_eps_B_inf: " << u.eps_B_inf << "\n";
  return out.str();
}

std::string violation_lines(const std::string& tag, const ViolationReport& v) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << tag << "_violations: " << v.count << "\n"
      << tag << "_worst_margin: " << v.worst_margin << "\n"
      << tag << "_first_violation: " << v.first_index << "\n";
  return out.str();
}

int cmd_synth(const Common& c) {
  const LearningConfig cfg = load(c);
  const SynthesisSpec spec = learning_spec(cfg, cfg.estimate, cfg.eps0, cfg.cons, cfg.noise.sigma_eta, cfg.x0);
  const OuterSearchResult res = outer_search(spec, cfg.synthesis, cfg.search);
  std::string report = synthesis_report(res.result);
  report += "search_evaluations: " + std::to_string(res.evaluations.size()) + "\n";
  if (!res.result.feasible() && res.result.status == SynthesisStatus::Infeasible) {
    report += "binding: " + diagnose_infeasibility(spec, cfg.synthesis, cfg.search) + "\n";
  }
  write_text(path_in(cfg, "synthesis.txt"), report);
  write_search_csv(path_in(cfg, "search.csv"), res.evaluations);
  if (res.result.feasible()) write_controller(cfg, res.result, "");
  std::cout << report;
  return status_code(res.result.status);
}

int cmd_simulate(const Common& c, const std::string& controller_dir, std::optional<int> horizon) {
  const LearningConfig cfg = load(c);
  const FirResponse phi_x = read_response_csv((fs::path(controller_dir) / "phi_x.csv").string());
  const FirResponse phi_u = read_response_csv((fs::path(controller_dir) / "phi_u.csv").string());
  SlsController ctrl(phi_x, phi_u);
  Trajectory traj = rollout(cfg.truth, ctrl, cfg.noise, horizon.value_or(cfg.horizon), cfg.x0);
  traj.system_id = "truth";
  traj.controller_id = fs::path(controller_dir).filename().string();
  write_trajectory_csv(path_in(cfg, "trajectory.csv"), traj);
  const ViolationReport v = check_constraints(traj, cfg.cons);
  std::ostringstream out;
  out << std::setprecision(12);
  out << "horizon: " << traj.horizon() << "\n" << violation_lines("trajectory", v);
  out << "empirical_cost: " << empirical_cost(traj, cfg.Q, cfg.R) << "\n";
  write_text(path_in(cfg, "simulate.txt"), out.str());
  std::cout << out.str();
  return kExitOk;
}

int cmd_learn(const Common& c, std::optional<int> trials) {
  LearningConfig cfg = load(c);
  if (trials) cfg.trials = *trials;
  const std::vector<DecayRow> rows = run_figure2a(cfg);
  write_decay_csv(path_in(cfg, "decay.csv"), rows);
  write_plot_script(cfg.output_dir, PlotKind::Decay);
  std::ostringstream out;
  out << std::setprecision(12);
  out << "trials: " << cfg.trials << "\n";
  for (const DecayRow& r : rows) {
    out << "T=" << r.T << " median_eps_A_2: " << r.eps_A_2.median << " median_eps_B_2: " << r.eps_B_2.median << "\n";
  }
  if (rows.size() >= 2) out << "loglog_slope: " << loglog_slope(rows) << "\n";
  write_text(path_in(cfg, "learn.txt"), out.str());
  std::cout << out.str();
  return kExitOk;
}

int cmd_suboptimality(const Common& c, double eps, double c_fir) {
  const LearningConfig cfg = load(c);
  const auto [est, unc] = scaled_estimate(cfg, eps);
  const SuboptimalityReport rep = suboptimality_study(cfg, est, unc, c_fir);
  std::ostringstream out;
  out << std::setprecision(12);
  out << "eps: " << eps << "\n" << uncertainty_lines("declared", unc);
  out << "J_star: " << rep.J_star << "\n";
  out << "margin_x: " << rep.margins.margin_x << "\n"
      << "margin_u: " << rep.margins.margin_u << "\n";
  out << "k_star_hinf: " << rep.norms.k_hinf << "\n"
      << "k_star_l1: " << rep.norms.k_l1 << "\n"
      << "phi_x_hinf: " << rep.norms.phi_x_hinf << "\n"
      << "phi_x_l1: " << rep.norms.phi_x_l1 << "\n"
      << "gain_norms_conservative: " << (rep.norms.conservative ? "true" : "false") << "\n";
  out << "zeta_2: " << rep.zeta.zeta_2 << "\n"
      << "zeta_inf: " << rep.zeta.zeta_inf << "\n";
  out << "bound_applicable: " << (rep.bound.applicable ? "true" : "false") << "\n"
      << "bound: " << rep.bound.bound << "\n";
  out << "fir_C: " << c_fir << "\n"
      << "fir_L_ok: " << (rep.fir_bound.L_ok ? "true" : "false") << "\n"
      << "fir_L_min: " << rep.fir_bound.L_min << "\n"
      << "fir_bound_applicable: " << (rep.fir_bound.applicable ? "true" : "false") << "\n"
      << "fir_bound: " << rep.fir_bound.bound << "\n";
  out << "robust_status: " << to_string(rep.robust.result.status) << "\n";
  if (rep.measured) {
    out << "gamma: " << rep.robust.gamma << "\n"
        << "tau: " << rep.robust.tau << "\n"
        << "J_hat: " << rep.J_hat << "\n"
        << "cost_gap: " << rep.gap << "\n";
  }
  write_text(path_in(cfg, "suboptimality.txt"), out.str());

  std::ofstream csv(path_in(cfg, "margins.csv"));
  csv << std::setprecision(17) << "kind,row,k,value\n";
  auto dump = [&csv](const char* kind, const Matrix& t) {
    for (int j = 0; j < t.rows(); ++j) {
      for (int k = 0; k < t.cols(); ++k) csv << kind << ',' << j << ',' << k << ',' << t(j, k) << '\n';
    }
  };
  dump("state", rep.margins.table_x);
  dump("input", rep.margins.table_u);
  std::cout << out.str();
  return rep.measured ? kExitOk : status_code(rep.robust.result.status);
}

int cmd_tradeoff(const Common& c) {
  const LearningConfig cfg = load(c);
  const std::vector<TradeoffRow> rows = tradeoff_sweep(cfg);
  write_tradeoff_csv(path_in(cfg, "tradeoff.csv"), rows);
  write_plot_script(cfg.output_dir, PlotKind::Tradeoff);
  std::cout << std::setprecision(6);
  for (const TradeoffRow& r : rows) {
    std::cout << "eps=" << r.eps << " r_x=" << r.r_x << " max_sigma_eta=" << r.max_sigma_eta << " probes=" << r.probes
              << "\n";
  }
  return kExitOk;
}

int cmd_pipeline(const Common& c) {
  const LearningConfig cfg = load(c);
  const LearningRound round = safe_learning_round(cfg);
  write_text(path_in(cfg, "initial.txt"), synthesis_report(round.initial.result));
  write_search_csv(path_in(cfg, "initial_search.csv"), round.initial.evaluations);
  write_controller(cfg, round.initial.result, "initial_");
  write_trajectory_csv(path_in(cfg, "learning_trajectory.csv"), round.trajectory);

  std::ostringstream out;
  out << std::setprecision(12);
  out << violation_lines("learning", round.violations);
  out << "T_used: " << round.estimate.T_used << "\n"
      << "gram_sigma_min: " << round.estimate.condition << "\n"
      << "inflation: " << round.estimate.inflation << "\n"
      << uncertainty_lines("actual", round.estimate.actual) << uncertainty_lines("refined", round.estimate.eps);
  out << "refined_status: " << to_string(round.refined.result.status) << "\n";
  write_text(path_in(cfg, "refined.txt"), synthesis_report(round.refined.result));
  if (round.refined.result.feasible()) write_controller(cfg, round.refined.result, "refined_");

  const std::vector<Figure1Panel> panels = run_figure1(cfg);
  bool all_clean = round.violations.clean();
  for (const Figure1Panel& panel : panels) {
    for (size_t i = 0; i < panel.trajectories.size(); ++i) {
      write_trajectory_csv(path_in(cfg, "traj_" + panel.name + "_" + std::to_string(i) + ".csv"),
                           panel.trajectories[i]);
      all_clean = all_clean && panel.violations[i].clean();
    }
    out << "panel_" << panel.name << "_trajectories: " << panel.trajectories.size() << "\n"
        << "panel_" << panel.name << "_skipped: " << panel.skipped.size() << "\n";
    for (const Vector& x0 : panel.skipped) {
      out << "panel_" << panel.name << "_skipped_x0: " << x0.transpose() << "\n";
    }
  }
  out << "all_trajectories_clean: " << (all_clean ? "true" : "false") << "\n";
  write_plot_script(cfg.output_dir, PlotKind::Trajectories);
  write_text(path_in(cfg, "summary.txt"), out.str());
  std::cout << out.str();
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed, overrides noise.seed");
  sub->add_option("--out", c.out, "output directory, overrides output.dir");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe robust constrained LQR through FIR system level synthesis"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "robust synthesis of the exciting controller on the initial estimate");
  add_common(synth, common);

  std::string controller_dir;
  std::optional<int> horizon;
  auto* simulate = app.add_subcommand("simulate", "closed-loop rollout of a stored controller on the true system");
  add_common(simulate, common);
  simulate->add_option("--controller", controller_dir, "directory holding phi_x.csv and phi_u.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  simulate->add_option("--horizon", horizon, "rollout length, overrides learning.horizon");

  std::optional<int> trials;
  auto* learn = app.add_subcommand("learn", "estimation error quartiles over repeated excited rollouts");
  add_common(learn, common);
  learn->add_option("--trials", trials, "number of rollouts, overrides learning.trials");

  double eps = -1.0;
  double c_fir = 1.1;
  auto* subopt = app.add_subcommand("suboptimality", "margins, zeta constants, bounds and measured cost gap");
  add_common(subopt, common);
  subopt->add_option("--eps", eps, "estimate error level, defaults to figure1.refined_eps");
  subopt->add_option("--c-fir", c_fir, "truncated-horizon bound parameter (> 1)");

  auto* tradeoff = app.add_subcommand("tradeoff", "largest feasible excitation per state radius and error level");
  add_common(tradeoff, common);

  auto* pipeline = app.add_subcommand("pipeline", "learning round plus trajectory panels");
  add_common(pipeline, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(common);
    if (simulate->parsed()) return cmd_simulate(common, controller_dir, horizon);
    if (learn->parsed()) return cmd_learn(common, trials);
    if (subopt->parsed()) {
      if (eps < 0.0) eps = load_learning_config(common.config).refined_eps;
      return cmd_suboptimality(common, eps, c_fir);
    }
    if (tradeoff->parsed()) return cmd_tradeoff(common);
    if (pipeline->parsed()) return cmd_pipeline(common);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const SolverFailureError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged at step " << e.step() << ": " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
