#pragma once

#include <vector>

#include "safelqr/sigproc.hpp"

namespace safelqr {

/// Realization of K = Phi_u Phi_x^{-1} through the reconstructed disturbance sequence:
///   w_hat_k = x_k - sum_{t=2..L} Phi_x(t) w_hat_{k-t+1}
///   u_k     = sum_{t=1..L} Phi_u(t) w_hat_{k-t+1} + eta_k
/// The first step after reset reconstructs x0 itself, so the state follows Phi_x(k+1) x0.
class SlsController {
public:
  SlsController() = default;
  /// Throws DimensionError on inconsistent blocks and DomainError when Phi_x(1) != I.
  SlsController(FirResponse phi_x, FirResponse phi_u, double identity_tol = 1e-9);

  void reset();
  Vector step(const Vector& x, const Vector& eta);
  Vector step(const Vector& x);

  [[nodiscard]] int n() const { return phi_x_.rows(); }
  [[nodiscard]] int d() const { return phi_u_.rows(); }
  [[nodiscard]] int length() const { return phi_x_.length(); }
  [[nodiscard]] const FirResponse& phi_x() const { return phi_x_; }
  [[nodiscard]] const FirResponse& phi_u() const { return phi_u_; }

  /// Static feedback u = K x as a length-1 response pair.
  static SlsController static_gain(const Matrix& K);

private:
  // Reconstructed disturbance t steps back lives at history_[(head_ + t - 1) % L].
  [[nodiscard]] const Vector& past(int t) const;

  FirResponse phi_x_;
  FirResponse phi_u_;
  std::vector<Vector> history_;
  int head_ = 0;
};

}  // namespace safelqr
