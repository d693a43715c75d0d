#include "safelqr/lti.hpp"

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>

#include "safelqr/sigproc.hpp"

namespace safelqr {

void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_domain(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

LinearSystem::LinearSystem(Matrix A, Matrix B) : A_(std::move(A)), B_(std::move(B)) {
  require_dims(A_.rows() == A_.cols() && A_.rows() > 0, "A must be square and nonempty");
  require_dims(B_.rows() == A_.rows() && B_.cols() > 0, "B must have n rows and d >= 1 columns");
  require_domain(A_.allFinite() && B_.allFinite(), "system matrices must be finite");
}

PolytopeConstraints::PolytopeConstraints(Matrix Fx, Vector bx, Matrix Fu, Vector bu)
    : Fx_(std::move(Fx)), bx_(std::move(bx)), Fu_(std::move(Fu)), bu_(std::move(bu)) {
  require_dims(Fx_.rows() == bx_.size(), "F_x row count must match b_x length");
  require_dims(Fu_.rows() == bu_.size(), "F_u row count must match b_u length");
  require_domain(Fx_.allFinite() && Fu_.allFinite() && bx_.allFinite() && bu_.allFinite(),
                 "constraint data must be finite");
  if (!origin_strictly_feasible()) {
    std::cerr << "warning: origin is not strictly feasible for the constraint polytopes\n";
  }
}

PolytopeConstraints PolytopeConstraints::box(int n, int d, double state_bound, double input_bound) {
  Matrix Fx(2 * n, n);
  Fx << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  Matrix Fu(2 * d, d);
  Fu << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  return {Fx, Vector::Constant(2 * n, state_bound), Fu, Vector::Constant(2 * d, input_bound)};
}

bool PolytopeConstraints::origin_strictly_feasible() const {
  return (bx_.size() == 0 || bx_.minCoeff() > 0.0) && (bu_.size() == 0 || bu_.minCoeff() > 0.0);
}

void UncertaintySpec::validate() const {
  require_domain(eps_A_2 >= 0.0 && eps_B_2 >= 0.0 && eps_A_inf >= 0.0 && eps_B_inf >= 0.0,
                 "uncertainty bounds must be nonnegative");
}

double induced_inf_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

std::vector<Matrix> affine_residual(const FirResponse& phi_x, const FirResponse& phi_u,
                                    const Matrix& V, const LinearSystem& sys, double identity_tol) {
  const int n = sys.n();
  const int L = phi_x.length();
  require_dims(L >= 1 && phi_u.length() == L, "phi_x and phi_u must have equal nonzero length");
  require_dims(phi_x.rows() == n && phi_x.cols() == n, "phi_x blocks must be n x n");
  require_dims(phi_u.rows() == sys.d() && phi_u.cols() == n, "phi_u blocks must be d x n");
  require_dims(V.rows() == n && V.cols() == n, "V must be n x n");
  require_domain((phi_x[1] - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= identity_tol,
                 "phi_x(1) must equal the identity");

  std::vector<Matrix> residual;
  residual.reserve(static_cast<size_t>(L));
  for (int k = 1; k < L; ++k) {
    residual.push_back(phi_x[k + 1] - sys.A() * phi_x[k] - sys.B() * phi_u[k]);
  }
  residual.push_back(V - (sys.A() * phi_x[L] + sys.B() * phi_u[L]));
  return residual;
}

double max_abs(const std::vector<Matrix>& residual) {
  double m = 0.0;
  for (const auto& r : residual) {
    if (r.size() > 0) m = std::max(m, r.cwiseAbs().maxCoeff());
  }
  return m;
}

double worst_case_disturbance_oracle(const FirResponse& phi, const Vector& f_row, double sigma_w,
                                     const Vector& x0, int k) {
  const int n = phi.cols();
  require_dims(f_row.size() == phi.rows(), "f_row length must match response rows");
  require_dims(x0.size() == n, "x0 length must match response columns");
  require_domain(k >= 0, "horizon index must be nonnegative");
  require_domain(static_cast<long>(k) * n <= 20, "horizon too large for vertex enumeration");

  const double initial = f_row.dot(phi.coeff(k + 1) * x0);
  // Row vectors f^T Phi(t) for the disturbances w_{k-t}, t = 1..k.
  std::vector<Eigen::RowVectorXd> rows;
  for (int t = 1; t <= k; ++t) rows.emplace_back(f_row.transpose() * phi.coeff(t));

  const int bits = k * n;
  const std::uint64_t count = std::uint64_t{1} << bits;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double value = 0.0;
    for (int t = 0; t < k; ++t) {
      for (int i = 0; i < n; ++i) {
        const int bit = t * n + i;
        const double w = ((mask >> bit) & 1U) ? sigma_w : -sigma_w;
        value += rows[static_cast<size_t>(t)](i) * w;
      }
    }
    best = std::max(best, value);
  }
  return initial + best;
}

}  // namespace safelqr
