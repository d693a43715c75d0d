#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace safelqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when operands have incompatible shapes.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a scalar argument is outside its admissible range.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

void require_dims(bool ok, const std::string& what);
void require_domain(bool ok, const std::string& what);

/// x_{k+1} = A x_k + B u_k + w_k with full state observation.
class LinearSystem {
public:
  LinearSystem() = default;
  LinearSystem(Matrix A, Matrix B);

  [[nodiscard]] int n() const { return static_cast<int>(A_.rows()); }
  [[nodiscard]] int d() const { return static_cast<int>(B_.cols()); }
  [[nodiscard]] const Matrix& A() const { return A_; }
  [[nodiscard]] const Matrix& B() const { return B_; }

private:
  Matrix A_;
  Matrix B_;
};

/// Row-wise polytopes F_x x <= b_x and F_u u <= b_u.
class PolytopeConstraints {
public:
  PolytopeConstraints() = default;
  PolytopeConstraints(Matrix Fx, Vector bx, Matrix Fu, Vector bu);

  /// |x_i| <= state_bound and |u_i| <= input_bound.
  static PolytopeConstraints box(int n, int d, double state_bound, double input_bound);

  [[nodiscard]] const Matrix& Fx() const { return Fx_; }
  [[nodiscard]] const Vector& bx() const { return bx_; }
  [[nodiscard]] const Matrix& Fu() const { return Fu_; }
  [[nodiscard]] const Vector& bu() const { return bu_; }
  [[nodiscard]] int state_rows() const { return static_cast<int>(Fx_.rows()); }
  [[nodiscard]] int input_rows() const { return static_cast<int>(Fu_.rows()); }

  /// True when b_x > 0 and b_u > 0, i.e. the origin is strictly inside both polytopes.
  [[nodiscard]] bool origin_strictly_feasible() const;

private:
  Matrix Fx_;
  Vector bx_;
  Matrix Fu_;
  Vector bu_;
};

/// Declared model-error bounds: spectral norms and l_inf -> l_inf operator norms.
struct UncertaintySpec {
  double eps_A_2 = 0.0;
  double eps_B_2 = 0.0;
  double eps_A_inf = 0.0;
  double eps_B_inf = 0.0;

  [[nodiscard]] bool is_zero() const {
    return eps_A_2 == 0.0 && eps_B_2 == 0.0 && eps_A_inf == 0.0 && eps_B_inf == 0.0;
  }
  void validate() const;
};

/// Induced l_inf -> l_inf norm: maximum absolute row sum.
double induced_inf_norm(const Matrix& M);
/// Spectral norm (largest singular value).
double spectral_norm(const Matrix& M);

class FirResponse;

/// Residual of the FIR affine constraints
///   Phi_x(1) = I, Phi_x(k+1) = A Phi_x(k) + B Phi_u(k), V = A Phi_x(L) + B Phi_u(L).
/// Entry k-1 holds R(k) for k = 1..L-1; the last entry is V - (A Phi_x(L) + B Phi_u(L)).
/// Throws DimensionError on shape mismatch and DomainError when Phi_x(1) != I.
std::vector<Matrix> affine_residual(const FirResponse& phi_x, const FirResponse& phi_u,
                                    const Matrix& V, const LinearSystem& sys,
                                    double identity_tol = 1e-6);

/// Largest absolute entry over a residual sequence.
double max_abs(const std::vector<Matrix>& residual);

/// Exact max of f^T x_k over all disturbance sequences with w_t in {-sigma_w, +sigma_w}^n,
/// where x_k = Phi(k+1) x0 + sum_{t=1..k} Phi(t) w_{k-t}. Enumerates 2^(k n) vertices, so
/// k * n must not exceed 20.
double worst_case_disturbance_oracle(const FirResponse& phi, const Vector& f_row,
                                     double sigma_w, const Vector& x0, int k);

}  // namespace safelqr
