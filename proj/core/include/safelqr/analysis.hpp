#pragma once

#include <utility>
#include <vector>

#include "safelqr/synthesis.hpp"

namespace safelqr {

/// Normalized constraint slack (b_j - G(Phi; k)_j) / (sigma_w c0 ||F_j Phi[k+1:1]||_1).
/// Table columns are k = 0..L-1 followed by the stationary k >= L value; rows with a zero
/// denominator hold NaN and are listed in `skipped_*`.
struct MarginReport {
  double margin_x = 0.0;
  double margin_u = 0.0;
  std::pair<int, int> argmin_x{-1, -1};  // (row j, k); k == L marks the stationary value
  std::pair<int, int> argmin_u{-1, -1};
  Matrix table_x;
  Matrix table_u;
  std::vector<std::pair<int, int>> skipped_x;
  std::vector<std::pair<int, int>> skipped_u;

  [[nodiscard]] double margin() const { return std::min(margin_x, margin_u); }
};

/// Throws DomainError when every denominator is zero.
MarginReport margins(const FirResponse& phi_x, const FirResponse& phi_u, const PolytopeConstraints& cons,
                     const Vector& x0, double sigma_w);

struct ZetaReport {
  double zeta_2 = 0.0;
  double zeta_inf = 0.0;
  UncertaintySpec unc;
  double k_star_hinf = 0.0;
  double k_star_l1 = 0.0;
  double phi_hinf = 0.0;
  double phi_l1 = 0.0;
};

/// zeta_inf = (eps_A_inf + eps_B_inf ||K||_L1) ||Phi_x||_L1 and
/// zeta_2 = (eps_A_2 + eps_B_2 ||K||_Hinf) ||Phi_x||_Hinf.
ZetaReport zeta(const UncertaintySpec& unc, double k_star_l1, double k_star_hinf, double phi_l1, double phi_hinf);

struct GainNorms {
  double k_hinf = 0.0;
  double k_l1 = 0.0;
  double phi_x_hinf = 0.0;
  double phi_x_l1 = 0.0;
  int horizon = 0;
  double tail = 0.0;           // largest entry among the last L gain blocks
  bool conservative = true;    // gain norms come from a truncated expansion
};

/// Norms of K = Phi_u Phi_x^{-1} from the power-series inverse of Phi_x truncated at
/// `horizon` blocks (4L by default), and of Phi_x itself. H-infinity values are certified bounds.
GainNorms gain_norms(const FirResponse& phi_x, const FirResponse& phi_u, int horizon = 0);

ZetaReport zeta(const UncertaintySpec& unc, const GainNorms& norms);

struct BoundResult {
  bool applicable = false;
  double bound = 0.0;
};

/// 2 sqrt(2) zeta_2, applicable when zeta_2 <= 1/(4 sqrt 2) and
/// zeta_inf <= min(margin_x / 10, margin_u / 10, 1/4).
BoundResult suboptimality_bound(const ZetaReport& z, const MarginReport& m);

struct FirBoundResult {
  bool L_ok = false;
  bool applicable = false;
  double bound = 0.0;
  double L_min = 0.0;
};

/// Envelope of the composed responses: C = C_a C_b / log(rho / rho_max), rho = (rho_max + 1) / 2.
DecayEnvelope combined_envelope(const DecayEnvelope& star, const DecayEnvelope& delta);

/// Truncated-horizon bound 2 sqrt(2) C_fir (1 + C_fir) zeta_2 + C_fir - 1 with its horizon and
/// zeta preconditions; `margin` is min(margin_x, margin_u).
FirBoundResult fir_suboptimality_bound(double C_fir, int L, const DecayEnvelope& env, const ZetaReport& z,
                                       double margin);

/// Strictly proper model-mismatch response of (Phi_x, Phi_u, V) on the system (A, B):
/// block k is Phi_x(k+1) - A Phi_x(k) - B Phi_u(k) with Phi_x(L+1) = V.
FirResponse mismatch_response(const FirResponse& phi_x, const FirResponse& phi_u, const Matrix& V,
                              const LinearSystem& sys);

struct AchievedCost {
  double cost = 0.0;
  double mismatch_hinf = 0.0;  // certified bound on the mismatch response
  int horizon = 0;
};

/// H2 cost of Phi (I + D)^{-1} on the true system, where D is the mismatch of the FIR
/// responses (tail V dropped, as the realized controller does). The series is extended until
/// the last L blocks fall below 1e-10; requires the certified mismatch bound to be < 0.95.
AchievedCost achieved_cost(const FirResponse& phi_x, const FirResponse& phi_u, const LinearSystem& truth,
                           const Matrix& Q, const Matrix& R);

/// (J_hat - J_star) / J_star; J_star must be positive.
double cost_gap(double J_hat, double J_star);

struct OracleResult {
  bool applicable = false;
  bool feasible = false;
  double gamma = 0.0;
  double tau = 0.0;
  double tail = 0.0;  // max(||V||_2, ||V||_inf) of the construction
  ZetaReport zeta;
  std::string reason;
};

/// Builds Phi_star (I - Delta)^{-1} with Delta = -(dA Phi_x_star + dB Phi_u_star), truncates it
/// to the spec's L with the next block as V, and checks it against the robust problem posed on
/// the estimate in `spec` (spec.sys, spec.unc) with
///   gamma = sqrt(2) zeta_2 / (1 - sqrt(2) zeta_2) + tail, tau = zeta_inf / (1 - zeta_inf) + tail.
/// Declines (applicable = false) unless the zeta and margin preconditions hold.
OracleResult lemma1_feasibility_oracle(const FirResponse& phi_x_star, const FirResponse& phi_u_star,
                                       const Matrix& delta_A, const Matrix& delta_B, const SynthesisSpec& spec);

struct EndToEndBound {
  double T_required = 0.0;  // horizon after which the bound applies, constants set to 1
  double bound = 0.0;       // relative cost gap bound at T, constants set to 1
};

/// Sample-complexity evaluation combining the estimation rate with the sub-optimality bound.
EndToEndBound end_to_end_bound(double T0, double sigma_w, double sigma_eta, double C_u, int n, int d,
                               const GainNorms& norms, double margin_x, double T, double delta);

}  // namespace safelqr
