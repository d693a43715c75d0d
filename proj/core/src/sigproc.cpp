#include "safelqr/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace safelqr {

FirResponse::FirResponse(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  require_dims(!blocks_.empty(), "FIR response needs at least one block");
  rows_ = static_cast<int>(blocks_.front().rows());
  cols_ = static_cast<int>(blocks_.front().cols());
  for (const auto& b : blocks_) {
    require_dims(b.rows() == rows_ && b.cols() == cols_, "FIR blocks must share dimensions");
  }
}

FirResponse FirResponse::zeros(int length, int rows, int cols) {
  require_dims(length >= 1, "FIR length must be >= 1");
  return FirResponse(std::vector<Matrix>(static_cast<size_t>(length), Matrix::Zero(rows, cols)));
}

Matrix FirResponse::coeff(int k) const {
  if (k < 1 || k > length()) return Matrix::Zero(rows_, cols_);
  return blocks_[static_cast<size_t>(k - 1)];
}

Matrix FirResponse::block_row(int k) const {
  Matrix row = Matrix::Zero(rows_, static_cast<Eigen::Index>(k) * cols_);
  for (int i = 0; i < k; ++i) {
    const int idx = k - i;
    if (idx <= length()) row.middleCols(static_cast<Eigen::Index>(i) * cols_, cols_) = (*this)[idx];
  }
  return row;
}

FirResponse FirResponse::stack(const FirResponse& top, const FirResponse& bottom) {
  require_dims(top.length() == bottom.length() && top.cols() == bottom.cols(),
               "stacked responses must share length and column count");
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(top.length()));
  for (int k = 1; k <= top.length(); ++k) {
    Matrix b(top.rows() + bottom.rows(), top.cols());
    b << top[k], bottom[k];
    out.push_back(std::move(b));
  }
  return FirResponse(std::move(out));
}

FirResponse FirResponse::scaled(double s) const {
  std::vector<Matrix> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(s * b);
  return FirResponse(std::move(out));
}

FirResponse FirResponse::left_multiplied(const Matrix& M) const {
  require_dims(M.cols() == rows_, "left multiplier has wrong column count");
  std::vector<Matrix> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(M * b);
  return FirResponse(std::move(out));
}

FirResponse FirResponse::truncated(int len) const {
  require_dims(len >= 1, "truncation length must be >= 1");
  std::vector<Matrix> out;
  for (int k = 1; k <= len; ++k) out.push_back(coeff(k));
  return FirResponse(std::move(out));
}

double DecayEnvelope::bound(int k) const { return C * std::pow(rho, k); }

FirResponse fir_compose(const FirResponse& M, const FirResponse& D) {
  require_dims(M.cols() == D.rows(), "inner dimensions of composed responses must match");
  const int len = M.length() + D.length();
  std::vector<Matrix> out(static_cast<size_t>(len), Matrix::Zero(M.rows(), D.cols()));
  for (int t = 1; t <= M.length(); ++t) {
    for (int s = 1; s <= D.length(); ++s) {
      out[static_cast<size_t>(t + s - 1)].noalias() += M[t] * D[s];
    }
  }
  return FirResponse(std::move(out));
}

Matrix toeplitz(const FirResponse& D, int k) {
  require_dims(k >= 1, "Toeplitz size must be >= 1");
  const int p = D.rows();
  const int q = D.cols();
  Matrix T = Matrix::Zero(static_cast<Eigen::Index>(k) * p, static_cast<Eigen::Index>(k) * q);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      const int idx = i - j + 1;
      if (idx <= D.length()) T.block(i * p, j * q, p, q) = D[idx];
    }
  }
  return T;
}

double h2_norm(const FirResponse& phi) {
  double s = 0.0;
  for (const auto& b : phi.blocks()) s += b.squaredNorm();
  return std::sqrt(s);
}

double l1_norm(const FirResponse& phi) {
  if (phi.empty()) return 0.0;
  Vector rows = Vector::Zero(phi.rows());
  for (const auto& b : phi.blocks()) rows += b.cwiseAbs().rowwise().sum();
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double l1_norm_transposed(const FirResponse& phi) {
  if (phi.empty()) return 0.0;
  Eigen::RowVectorXd cols = Eigen::RowVectorXd::Zero(phi.cols());
  for (const auto& b : phi.blocks()) cols += b.cwiseAbs().colwise().sum();
  return cols.size() ? cols.maxCoeff() : 0.0;
}

namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Squared largest singular value of sum_k Phi(k) e^{-i w k}.
double gain_squared(const FirResponse& phi, double w) {
  const int p = phi.rows();
  const int q = phi.cols();
  CMatrix H = CMatrix::Zero(p, q);
  const Complex step = std::polar(1.0, -w);
  Complex zk = step;
  for (int k = 1; k <= phi.length(); ++k) {
    H += zk * phi[k].cast<Complex>();
    zk *= step;
  }
  const CMatrix G = (q <= p) ? CMatrix(H.adjoint() * H) : CMatrix(H * H.adjoint());
  const auto m = G.rows();
  if (m == 1) return G(0, 0).real();
  if (m == 2) {
    const double a = G(0, 0).real();
    const double d = G(1, 1).real();
    const double b2 = std::norm(G(0, 1));
    return 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b2);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double grid_max_squared(const FirResponse& phi, int points) {
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double w = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
    best = std::max(best, gain_squared(phi, w));
  }
  return best;
}

constexpr int kDefaultGridPoints = 2048;

}  // namespace

double hinf_norm_grid(const FirResponse& phi, int points) {
  require_domain(points >= 2, "frequency grid needs at least two points");
  if (phi.empty()) return 0.0;
  return std::sqrt(grid_max_squared(phi, points));
}

double hinf_norm_certified(const FirResponse& phi, double rel_slack) {
  require_domain(rel_slack > 0.0, "certified slack must be positive");
  if (phi.empty()) return 0.0;
  const double analytic = std::sqrt(l1_norm(phi) * l1_norm_transposed(phi));
  const int degree = phi.length() - 1;
  if (degree == 0) return std::min(analytic, std::sqrt(gain_squared(phi, 0.0)));

  // u^H T(w) u is a real trigonometric polynomial of degree L-1 bounded by F = max gain^2, so
  // by Bernstein its slope is at most (L-1) F and F <= grid_max / (1 - (L-1) h / 2).
  const double x = 1.0 - 1.0 / ((1.0 + rel_slack) * (1.0 + rel_slack));
  const double needed = static_cast<double>(degree) * std::numbers::pi / (2.0 * x) + 1.0;
  const int points = std::max(kDefaultGridPoints, static_cast<int>(std::ceil(needed)));
  const double h = std::numbers::pi / static_cast<double>(points - 1);
  const double shrink = 1.0 - static_cast<double>(degree) * h / 2.0;
  const double bernstein = std::sqrt(grid_max_squared(phi, points) / shrink);
  return std::min(analytic, bernstein);
}

double hinf_norm(const FirResponse& phi, HinfMode mode) {
  if (mode == HinfMode::GridLower) return hinf_norm_grid(phi, kDefaultGridPoints);
  return hinf_norm_certified(phi);
}

double hinf_norm_toeplitz_estimate(const FirResponse& phi, int N) {
  require_domain(N >= 1, "Toeplitz size must be positive");
  if (phi.empty()) return 0.0;
  const int p = phi.rows();
  const int q = phi.cols();
  const int L = phi.length();
  auto apply = [&](const Vector& x) {
    Vector y = Vector::Zero(static_cast<Eigen::Index>(N) * p);
    for (int i = 0; i < N; ++i) {
      for (int t = 1; t <= std::min(L, i + 1); ++t) {
        y.segment(static_cast<Eigen::Index>(i) * p, p) += phi[t] * x.segment(static_cast<Eigen::Index>(i - t + 1) * q, q);
      }
    }
    return y;
  };
  auto apply_t = [&](const Vector& y) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(N) * q);
    for (int i = 0; i < N; ++i) {
      for (int t = 1; t <= std::min(L, i + 1); ++t) {
        x.segment(static_cast<Eigen::Index>(i - t + 1) * q, q) +=
            phi[t].transpose() * y.segment(static_cast<Eigen::Index>(i) * p, p);
      }
    }
    return x;
  };
  Vector x = Vector::Ones(static_cast<Eigen::Index>(N) * q).normalized();
  double value = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Vector z = apply_t(apply(x));
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    const double next = std::sqrt(nz);
    x = z / nz;
    if (std::abs(next - value) <= 1e-12 * std::max(1.0, next)) {
      value = next;
      break;
    }
    value = next;
  }
  return value;
}

DecayEnvelope fit_decay(const FirResponse& phi, double margin) {
  require_domain(margin >= 1.0, "decay margin must be >= 1");
  std::vector<std::pair<int, double>> samples;
  for (int k = 1; k <= phi.length(); ++k) {
    const double s = spectral_norm(phi[k]);
    if (s > 1e-300) samples.emplace_back(k, s);
  }
  require_domain(!samples.empty(), "cannot fit a decay envelope to a zero response");

  double rho = 0.5;
  if (samples.size() >= 2) {
    double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
    for (const auto& [k, s] : samples) {
      const double y = std::log(s);
      sk += k;
      sy += y;
      skk += static_cast<double>(k) * k;
      sky += k * y;
    }
    const double m = static_cast<double>(samples.size());
    const double slope = (m * sky - sk * sy) / (m * skk - sk * sk);
    rho = std::clamp(std::exp(slope), 1e-6, 0.999);
  }
  double C = 0.0;
  for (const auto& [k, s] : samples) C = std::max(C, s / std::pow(rho, k));
  return {C * margin, rho};
}

FirResponse series_inverse(const FirResponse& D, int horizon) {
  require_dims(D.rows() == D.cols(), "series inverse needs square blocks");
  require_domain(horizon >= 1, "series horizon must be >= 1");
  std::vector<Matrix> E;
  E.reserve(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    Matrix e = -D.coeff(k);
    for (int t = 1; t <= std::min(k - 1, D.length()); ++t) e.noalias() -= D[t] * E[static_cast<size_t>(k - t - 1)];
    E.push_back(std::move(e));
  }
  return FirResponse(std::move(E));
}

FirResponse compose_with_inverse(const FirResponse& phi, const FirResponse& D, int horizon) {
  require_dims(phi.cols() == D.rows(), "response columns must match the inverse dimension");
  const FirResponse E = series_inverse(D, horizon);
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    Matrix b = phi.coeff(k);
    for (int t = 1; t <= std::min(k - 1, phi.length()); ++t) b.noalias() += phi[t] * E[k - t];
    out.push_back(std::move(b));
  }
  return FirResponse(std::move(out));
}

}  // namespace safelqr
