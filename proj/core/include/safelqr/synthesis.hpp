#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safelqr/conic.hpp"
#include "safelqr/lti.hpp"
#include "safelqr/sigproc.hpp"

namespace safelqr {

/// Inputs of the robust FIR synthesis problem for fixed robustness budgets (gamma, tau).
struct SynthesisSpec {
  LinearSystem sys;  // model estimate
  UncertaintySpec unc;
  PolytopeConstraints cons;
  double sigma_w = 0.0;
  Vector x0;
  int L = 15;
  Matrix Q;
  Matrix R;
  double gamma = 0.0;
  double tau = 0.0;

  /// Throws DimensionError / DomainError on inconsistent data.
  void validate() const;
  /// max(1, ||x0||_inf / sigma_w); 1 when sigma_w == 0.
  [[nodiscard]] double c0() const;
};

enum class SynthesisStatus { Feasible, Infeasible, SolverError };
std::string to_string(SynthesisStatus status);

/// How the H-infinity budget is enforced.
/// Lmi: bounded-real-lemma LMI on the FIR realization (exact).
/// Surrogate: the average of the L1 and transposed-L1 gains, an upper bound on the H-infinity norm.
enum class HinfBackend { Lmi, Surrogate };
std::string to_string(HinfBackend backend);

struct SynthesisOptions {
  HinfBackend backend = HinfBackend::Lmi;
  /// Solve without the LMI first and add it only if the certified bound is violated.
  bool lazy_lmi = true;
  /// The H-infinity variable is inflated by this relative amount so the certified bound,
  /// which exceeds the true norm by at most 5e-4 relative, still fits the budget.
  double hinf_slack = 1e-3;
  double audit_tol = 1e-6;
  SolverOptions solver;
};

/// Independently evaluated constraint values of a candidate (Phi_x, Phi_u, V).
struct Certificates {
  double hinf = 0.0;        // certified upper bound on ||[eA2 Phi_x; eB2 Phi_u]||_Hinf
  double hinf_total = 0.0;  // sqrt(2) * hinf + ||V||_2, compared against gamma
  double l1 = 0.0;          // ||[eAinf Phi_x; eBinf Phi_u]||_L1
  double l1_total = 0.0;    // l1 + ||V||_inf, compared against tau
  double v_2 = 0.0;
  double v_inf = 0.0;
  double affine_residual = 0.0;
  /// G^tau values: rows are constraint rows, columns k = 0..L-1 followed by the stationary value.
  Matrix state_values;
  Matrix input_values;
  /// min over rows and columns of b - value.
  double state_slack = 0.0;
  double input_slack = 0.0;
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::SolverError;
  FirResponse phi_x;
  FirResponse phi_u;
  Matrix V;
  double nominal_cost = 0.0;  // H2 norm of the weighted responses on the model
  double robust_cost = 0.0;   // nominal_cost / (1 - gamma)
  double gamma = 0.0;
  double tau = 0.0;
  Certificates certificates;
  HinfBackend backend = HinfBackend::Lmi;
  bool lmi_active = false;  // whether the final solve carried the LMI block
  int solver_iterations = 0;
  std::string message;

  [[nodiscard]] bool feasible() const { return status == SynthesisStatus::Feasible; }
};

/// Worst-case value of F_j x_k over admissible disturbances, inflated for model error:
///   F_j Phi(k+1) x0 + sigma_w ||F_j Phi[k:1]||_1 + (tau sigma_w c0 / (1 - tau)) ||F_j Phi[k+1:1]||_1.
Vector constraint_value(const FirResponse& phi, const Matrix& F, const Vector& x0, double sigma_w,
                        double tau, double c0, int k);

/// The same quantity for every k >= L: sigma_w (1 + tau c0 / (1 - tau)) ||F_j Phi[L:1]||_1.
Vector stationary_constraint_value(const FirResponse& phi, const Matrix& F, double sigma_w, double tau,
                                   double c0);

/// Conic program plus the variable map needed to read a solution back.
struct AssembledProgram {
  ConicProgram program;
  int n = 0;
  int d = 0;
  int L = 0;
  int phi_x_offset = 0;  // Phi_x(2..L), column-major blocks
  int phi_u_offset = 0;  // Phi_u(1..L)
  int v_offset = 0;
  int cost_var = 0;
  int v_norm_var = 0;
  bool has_lmi = false;

  /// Decodes (Phi_x, Phi_u, V) from a solution vector.
  void decode(const Vector& x, FirResponse& phi_x, FirResponse& phi_u, Matrix& V) const;
};

/// Robust synthesis program for fixed (gamma, tau). `include_lmi` selects whether the
/// H-infinity LMI block (or surrogate rows) is present; without it only ||V|| <= gamma remains.
AssembledProgram assemble_program(const SynthesisSpec& spec, const SynthesisOptions& options = {},
                                  bool include_hinf = true);

/// Evaluates every certificate of a candidate solution directly from its blocks.
Certificates evaluate_certificates(const SynthesisSpec& spec, const FirResponse& phi_x,
                                   const FirResponse& phi_u, const Matrix& V);

/// True when every certificate holds within `tol`: affine residual, L1 and H-infinity budgets,
/// and all constraint rows including the stationary one.
bool certificates_hold(const SynthesisSpec& spec, const Certificates& cert, double tol = 1e-6,
                       std::string* reason = nullptr);

/// Independent feasibility check of a candidate for the robust problem.
bool check_feasible(const SynthesisSpec& spec, const FirResponse& phi_x, const FirResponse& phi_u,
                    const Matrix& V, double tol = 1e-6, std::string* reason = nullptr);

/// Solves the robust problem for the spec's (gamma, tau) and audits the result.
SynthesisResult solve(const SynthesisSpec& spec, const SynthesisOptions& options = {});

/// H2 cost of the weighted responses: ||[Q^1/2 Phi_x; R^1/2 Phi_u]||_H2.
double weighted_h2_cost(const FirResponse& phi_x, const FirResponse& phi_u, const Matrix& Q, const Matrix& R);

struct OuterSearchOptions {
  double delta = 1e-3;  // search domain [0, 1 - delta]^2
  int grid = 8;
  int golden_rounds = 2;
  int golden_iterations = 12;
  double tie_rel = 1e-9;
};

struct SearchPoint {
  double gamma;
  double tau;
  double robust_cost;  // +inf when infeasible
  SynthesisStatus status;
};

struct OuterSearchResult {
  double gamma = 0.0;
  double tau = 0.0;
  SynthesisResult result;
  std::vector<SearchPoint> evaluations;
};

/// Minimizes the robust cost over (gamma, tau): a coarse grid, then coordinate-wise golden
/// section inside the bracket around the best grid point. Infeasible points count as +inf.
OuterSearchResult outer_search(const SynthesisSpec& spec, const SynthesisOptions& options = {},
                               const OuterSearchOptions& search = {});

}  // namespace safelqr
