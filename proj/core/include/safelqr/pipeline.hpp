#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "safelqr/analysis.hpp"
#include "safelqr/config.hpp"
#include "safelqr/sysid.hpp"

namespace safelqr {

/// Raised when the initial learning problem has no feasible (gamma, tau).
class InfeasibleError : public std::runtime_error {
public:
  InfeasibleError(const std::string& what, std::string binding)
      : std::runtime_error(what), binding_(std::move(binding)) {}
  [[nodiscard]] const std::string& binding() const { return binding_; }

private:
  std::string binding_;
};

/// Raised when the conic solver fails numerically on every probe of a required problem.
class SolverFailureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Noise level and input bounds that make the excited loop look like an unexcited one:
/// sigma_w + sigma_eta (||B0||_inf + eps_B_inf) and b_u,j - sigma_eta ||F_u,j||_1.
struct ExcitationSubstitution {
  double sigma_w = 0.0;
  PolytopeConstraints cons;
};
ExcitationSubstitution substitute_excitation(double sigma_w, double sigma_eta, const Matrix& B0, double eps_B_inf,
                                             const PolytopeConstraints& cons);

/// Largest sigma_eta keeping every tightened input bound nonnegative.
double excitation_ceiling(const PolytopeConstraints& cons);

/// Robust synthesis spec on an estimate; budgets start at zero.
SynthesisSpec make_spec(const LearningConfig& cfg, const LinearSystem& estimate, const UncertaintySpec& unc,
                        const PolytopeConstraints& cons, double sigma_w, const Vector& x0);

/// Spec of the exciting controller: substituted noise and tightened inputs.
SynthesisSpec learning_spec(const LearningConfig& cfg, const LinearSystem& estimate, const UncertaintySpec& unc,
                            const PolytopeConstraints& cons, double sigma_eta, const Vector& x0);

/// Whether some (gamma, tau) admits a solution: gamma at the top of the search domain and
/// tau scanned over the search grid.
bool robust_feasible(const SynthesisSpec& spec, const SynthesisOptions& options, const OuterSearchOptions& search);

/// Names the relaxation that restores feasibility: "l1-budget", "state-constraints",
/// "input-constraints", "hinf-budget", or "unknown".
std::string diagnose_infeasibility(const SynthesisSpec& spec, const SynthesisOptions& options,
                                   const OuterSearchOptions& search);

struct LearningRound {
  SynthesisSpec initial_spec;
  OuterSearchResult initial;
  SlsController controller;
  Trajectory trajectory;
  ViolationReport violations;
  EstimateReport estimate;
  SynthesisSpec refined_spec;
  OuterSearchResult refined;
};

/// Synthesize an exciting safe controller on the initial estimate, roll it out on the truth,
/// re-identify, and re-synthesize on the refined estimate with sigma_eta = 0. A refined problem
/// without solution is returned as data.
LearningRound safe_learning_round(const LearningConfig& cfg);

/// Initial estimate scaled to ||dA||_inf = ||dB||_inf = eps, with matching uncertainty.
std::pair<LinearSystem, UncertaintySpec> scaled_estimate(const LearningConfig& cfg, double eps);

struct TradeoffRow {
  double eps = 0.0;
  double r_x = 0.0;
  double max_sigma_eta = 0.0;  // 0 when the problem is infeasible without excitation
  int probes = 0;
};

/// For every eps and state radius r_x, bisection on sigma_eta over feasibility of the
/// substituted problem with x0 = 0 and box constraints |x_i| <= r_x.
std::vector<TradeoffRow> tradeoff_sweep(const LearningConfig& cfg);

struct Figure1Panel {
  std::string name;
  std::vector<Vector> x0;
  std::vector<Trajectory> trajectories;  // one per feasible x0
  std::vector<ViolationReport> violations;
  std::vector<Vector> skipped;           // x0 values without a feasible controller
};

/// Panel a: exciting controller (sigma_eta from cfg) on the initial estimate. Panel b: unexcited
/// controller on an estimate with eps = cfg.refined_eps. One rollout of cfg.horizon steps per x0.
std::vector<Figure1Panel> run_figure1(const LearningConfig& cfg);

/// Estimation error quartiles over cfg.trials rollouts of the initial exciting controller.
std::vector<DecayRow> run_figure2a(const LearningConfig& cfg);

/// Unconstrained-by-uncertainty solve on `sys` (eps = 0, gamma = tau = 0).
SynthesisResult nominal_synthesis(const LearningConfig& cfg, const LinearSystem& sys, const Vector& x0);

struct SuboptimalityReport {
  SynthesisResult optimal;     // nominal solve on the truth
  OuterSearchResult robust;    // robust solve on the estimate
  GainNorms norms;
  MarginReport margins;
  ZetaReport zeta;
  BoundResult bound;
  FirBoundResult fir_bound;
  double J_star = 0.0;
  double J_hat = 0.0;
  double gap = 0.0;
  bool measured = false;  // robust problem feasible and gap evaluated
};

/// Measured cost gap of the robust controller synthesized on `estimate` against the bounds.
/// `C_fir` parametrizes the truncated-horizon bound.
SuboptimalityReport suboptimality_study(const LearningConfig& cfg, const LinearSystem& estimate,
                                        const UncertaintySpec& unc, double C_fir = 1.1);

}  // namespace safelqr
