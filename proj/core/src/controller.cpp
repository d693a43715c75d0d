#include "safelqr/controller.hpp"

namespace safelqr {

SlsController::SlsController(FirResponse phi_x, FirResponse phi_u, double identity_tol)
    : phi_x_(std::move(phi_x)), phi_u_(std::move(phi_u)) {
  require_dims(!phi_x_.empty() && phi_x_.length() == phi_u_.length(), "controller responses must share length L >= 1");
  require_dims(phi_x_.rows() == phi_x_.cols(), "Phi_x blocks must be square");
  require_dims(phi_u_.cols() == phi_x_.cols(), "Phi_u blocks must have n columns");
  const Matrix I = Matrix::Identity(phi_x_.rows(), phi_x_.cols());
  require_domain((phi_x_[1] - I).cwiseAbs().maxCoeff() <= identity_tol, "controller needs Phi_x(1) = I");
  reset();
}

void SlsController::reset() {
  history_.assign(static_cast<size_t>(phi_x_.length()), Vector::Zero(phi_x_.rows()));
  head_ = 0;
}

const Vector& SlsController::past(int t) const {
  const int L = phi_x_.length();
  return history_[static_cast<size_t>((head_ + t - 1) % L)];
}

Vector SlsController::step(const Vector& x, const Vector& eta) {
  require_dims(x.size() == n(), "controller state dimension mismatch");
  require_dims(eta.size() == d(), "controller excitation dimension mismatch");
  const int L = phi_x_.length();
  Vector w_hat = x;
  Vector u = eta;
  for (int t = 2; t <= L; ++t) {
    const Vector& w = past(t - 1);
    w_hat.noalias() -= phi_x_[t] * w;
    u.noalias() += phi_u_[t] * w;
  }
  u.noalias() += phi_u_[1] * w_hat;
  head_ = (head_ + L - 1) % L;
  history_[static_cast<size_t>(head_)] = std::move(w_hat);
  return u;
}

Vector SlsController::step(const Vector& x) { return step(x, Vector::Zero(d())); }

SlsController SlsController::static_gain(const Matrix& K) {
  return SlsController(FirResponse({Matrix::Identity(K.cols(), K.cols())}), FirResponse({K}));
}

}  // namespace safelqr
