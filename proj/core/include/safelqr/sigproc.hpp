#pragma once

#include <vector>

#include "safelqr/lti.hpp"

namespace safelqr {

/// Strictly proper FIR transfer function sum_{k=1..L} Phi(k) z^{-k}; blocks are p x q.
/// Indexing is 1-based to match the impulse-response convention; coefficients past L are zero.
class FirResponse {
public:
  FirResponse() = default;
  explicit FirResponse(std::vector<Matrix> blocks);
  static FirResponse zeros(int length, int rows, int cols);

  [[nodiscard]] int length() const { return static_cast<int>(blocks_.size()); }
  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return blocks_.empty(); }

  /// Block k for 1 <= k <= L.
  [[nodiscard]] const Matrix& operator[](int k) const { return blocks_.at(static_cast<size_t>(k - 1)); }
  Matrix& operator[](int k) { return blocks_.at(static_cast<size_t>(k - 1)); }

  /// Block k, or zero when k < 1 or k > L.
  [[nodiscard]] Matrix coeff(int k) const;

  /// Block row [Phi(k) ... Phi(1)] (zero-padded past L), p x (k q).
  [[nodiscard]] Matrix block_row(int k) const;

  /// Vertical concatenation [M; N] of two responses with equal length and column count.
  [[nodiscard]] static FirResponse stack(const FirResponse& top, const FirResponse& bottom);

  [[nodiscard]] FirResponse scaled(double s) const;
  [[nodiscard]] FirResponse left_multiplied(const Matrix& M) const;
  [[nodiscard]] FirResponse truncated(int length) const;

  [[nodiscard]] const std::vector<Matrix>& blocks() const { return blocks_; }

private:
  std::vector<Matrix> blocks_;
  int rows_ = 0;
  int cols_ = 0;
};

/// Envelope ||Phi(k)||_2 <= C rho^k.
struct DecayEnvelope {
  double C = 0.0;
  double rho = 0.5;
  [[nodiscard]] double bound(int k) const;
};

/// Product M D of strictly proper responses, length L_M + L_D; block k is sum_t M(t) D(k-t).
/// Equivalently [Mt(k+1) ... Mt(2)] = M[k:1] toeplitz(D, k).
FirResponse fir_compose(const FirResponse& M, const FirResponse& D);

/// Lower block-triangular Toeplitz matrix with D(i-j+1) in block (i, j); k*p x k*q.
Matrix toeplitz(const FirResponse& D, int k);

double h2_norm(const FirResponse& phi);

/// Induced l_inf -> l_inf gain: maximum over output rows of the absolute sum of all block entries.
double l1_norm(const FirResponse& phi);

/// Same quantity for the transposed system (maximum absolute column sum); l_1 -> l_1 gain.
double l1_norm_transposed(const FirResponse& phi);

enum class HinfMode { GridLower, CertifiedUpper };

/// Grid-lower: max of sigma_max(sum Phi(k) e^{-i w k}) over a uniform grid on [0, pi].
/// Certified-upper: a guaranteed upper bound, the smaller of sqrt(l1 * l1_transposed) and the
/// grid maximum inflated by the Bernstein bound for trigonometric polynomials of degree L-1.
double hinf_norm(const FirResponse& phi, HinfMode mode = HinfMode::GridLower);

/// Grid-lower value on an explicit number of points.
double hinf_norm_grid(const FirResponse& phi, int points);

/// Certified upper bound whose inflation over the grid maximum is at most `rel_slack`.
double hinf_norm_certified(const FirResponse& phi, double rel_slack = 5e-4);

/// sigma_max of the size-N truncated block-Toeplitz operator, by power iteration; converges
/// to the H-infinity norm from below as N grows.
double hinf_norm_toeplitz_estimate(const FirResponse& phi, int N);

/// Envelope from a least-squares fit of log ||Phi(k)||_2 against k, raised to dominate every
/// block and then multiplied by `margin` (>= 1).
DecayEnvelope fit_decay(const FirResponse& phi, double margin = 1.0);

/// Strictly proper part E of (I + D)^{-1} = I + E, computed by the exact recursion
/// E(k) = -D(k) - sum_{t=1..k-1} D(t) E(k-t) up to `horizon` blocks.
FirResponse series_inverse(const FirResponse& D, int horizon);

/// Achieved response Phi (I + D)^{-1} = Phi + Phi E, truncated to `horizon` blocks.
FirResponse compose_with_inverse(const FirResponse& phi, const FirResponse& D, int horizon);

}  // namespace safelqr
