#include "safelqr/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>

namespace safelqr {

AffineExpr& AffineExpr::add(int var, double coef) {
  if (coef != 0.0) terms.push_back({var, coef});
  return *this;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  for (auto& t : terms) t.coef *= s;
  constant *= s;
  return *this;
}

double AffineExpr::evaluate(const Vector& x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x(t.var);
  return v;
}

int ConicProgram::add_variables(int count) {
  require_dims(count >= 0, "variable count must be nonnegative");
  const int first = num_vars_;
  num_vars_ += count;
  c_.conservativeResize(num_vars_);
  c_.tail(count).setZero();
  return first;
}

void ConicProgram::set_objective(int var, double coef) {
  require_dims(var >= 0 && var < num_vars_, "objective variable out of range");
  c_(var) = coef;
}

void ConicProgram::check(const AffineExpr& e) const {
  for (const auto& t : e.terms) require_dims(t.var >= 0 && t.var < num_vars_, "expression variable out of range");
}

void ConicProgram::add_equality(const AffineExpr& expr) {
  check(expr);
  equalities_.push_back(expr);
}

void ConicProgram::add_nonneg(const AffineExpr& expr) {
  check(expr);
  nonneg_.push_back(expr);
}

void ConicProgram::add_soc(const std::vector<AffineExpr>& e) {
  require_dims(!e.empty(), "second-order cone needs at least one entry");
  for (const auto& x : e) check(x);
  soc_.push_back(e);
}

void ConicProgram::add_psd(int dim, const std::vector<AffineExpr>& lower) {
  require_dims(dim >= 1 && static_cast<int>(lower.size()) == dim * (dim + 1) / 2,
               "PSD block needs dim*(dim+1)/2 lower-triangular entries");
  for (const auto& x : lower) check(x);
  psd_.emplace_back(dim, lower);
}

double ConicProgram::max_violation(const Vector& x) const {
  double worst = 0.0;
  for (const auto& e : equalities_) worst = std::max(worst, std::abs(e.evaluate(x)));
  for (const auto& e : nonneg_) worst = std::max(worst, -e.evaluate(x));
  for (const auto& cone : soc_) {
    double tail = 0.0;
    for (size_t i = 1; i < cone.size(); ++i) tail += std::pow(cone[i].evaluate(x), 2);
    worst = std::max(worst, std::sqrt(tail) - cone[0].evaluate(x));
  }
  for (const auto& [dim, lower] : psd_) {
    Matrix S(dim, dim);
    int idx = 0;
    for (int j = 0; j < dim; ++j) {
      for (int i = j; i < dim; ++i) {
        S(i, j) = S(j, i) = lower[static_cast<size_t>(idx++)].evaluate(x);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    worst = std::max(worst, -es.eigenvalues()(0));
  }
  return worst;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::SolverError: return "solver-error";
  }
  return "unknown";
}

namespace {

using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseCM = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kSqrt2 = std::numbers::sqrt2;

int svec_size(int p) { return p * (p + 1) / 2; }

Matrix smat(const Vector& v, int off, int p) {
  Matrix M(p, p);
  int idx = off;
  for (int j = 0; j < p; ++j) {
    M(j, j) = v(idx++);
    for (int i = j + 1; i < p; ++i) {
      M(i, j) = M(j, i) = v(idx++) / kSqrt2;
    }
  }
  return M;
}

void svec_into(const Matrix& M, Vector& v, int off) {
  const auto p = static_cast<int>(M.rows());
  int idx = off;
  for (int j = 0; j < p; ++j) {
    v(idx++) = M(j, j);
    for (int i = j + 1; i < p; ++i) v(idx++) = kSqrt2 * 0.5 * (M(i, j) + M(j, i));
  }
}

struct Layout {
  int lp = 0;
  std::vector<int> soc, soc_off;
  std::vector<int> psd, psd_off;
  int m = 0;
  int degree = 0;
};

Vector identity(const Layout& K) {
  Vector e = Vector::Zero(K.m);
  e.head(K.lp).setOnes();
  for (size_t i = 0; i < K.soc.size(); ++i) e(K.soc_off[i]) = 1.0;
  for (size_t i = 0; i < K.psd.size(); ++i) {
    int idx = K.psd_off[i];
    for (int j = 0; j < K.psd[i]; ++j) {
      e(idx) = 1.0;
      idx += K.psd[i] - j;
    }
  }
  return e;
}

Vector jordan_product(const Layout& K, const Vector& u, const Vector& v) {
  Vector r(K.m);
  r.head(K.lp) = u.head(K.lp).cwiseProduct(v.head(K.lp));
  for (size_t i = 0; i < K.soc.size(); ++i) {
    const int o = K.soc_off[i];
    const int q = K.soc[i];
    r(o) = u.segment(o, q).dot(v.segment(o, q));
    r.segment(o + 1, q - 1) = u(o) * v.segment(o + 1, q - 1) + v(o) * u.segment(o + 1, q - 1);
  }
  for (size_t i = 0; i < K.psd.size(); ++i) {
    const Matrix U = smat(u, K.psd_off[i], K.psd[i]);
    const Matrix V = smat(v, K.psd_off[i], K.psd[i]);
    svec_into(0.5 * (U * V + V * U), r, K.psd_off[i]);
  }
  return r;
}

// Largest step a with x + a d inside the second-order cone, for interior x.
double soc_step(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& d) {
  const auto q = x.size();
  const double a = d(0) * d(0) - d.tail(q - 1).squaredNorm();
  const double b = x(0) * d(0) - x.tail(q - 1).dot(d.tail(q - 1));
  const double c = x(0) * x(0) - x.tail(q - 1).squaredNorm();
  const double inf = std::numeric_limits<double>::infinity();
  if (c <= 0.0) return 0.0;
  const double scale = std::max({std::abs(a), std::abs(b), c});
  if (std::abs(a) <= 1e-15 * scale) {
    if (b < 0.0) return -c / (2.0 * b);
    return d(0) < 0.0 ? -x(0) / d(0) : inf;
  }
  const double disc = b * b - a * c;
  if (disc < 0.0) return inf;
  const double sq = std::sqrt(disc);
  const double qq = -(b + (b >= 0.0 ? sq : -sq));
  double best = inf;
  for (double r : {qq / a, qq != 0.0 ? c / qq : inf}) {
    if (r > 0.0) best = std::min(best, r);
  }
  return best;
}

struct Scaling {
  Vector lp_w;
  std::vector<double> soc_eta;
  std::vector<Vector> soc_w;
  std::vector<Matrix> psd_R, psd_Rinv;
  std::vector<Vector> psd_lambda;
  Vector lambda;
};

bool compute_scaling(const Layout& K, const Vector& s, const Vector& z, Scaling& W) {
  W.lp_w = (s.head(K.lp).array() / z.head(K.lp).array()).sqrt();
  if (K.lp > 0 && !(s.head(K.lp).minCoeff() > 0.0 && z.head(K.lp).minCoeff() > 0.0)) return false;
  W.soc_eta.assign(K.soc.size(), 0.0);
  W.soc_w.assign(K.soc.size(), Vector());
  W.psd_R.assign(K.psd.size(), Matrix());
  W.psd_Rinv.assign(K.psd.size(), Matrix());
  W.psd_lambda.assign(K.psd.size(), Vector());
  W.lambda = Vector::Zero(K.m);
  W.lambda.head(K.lp) = (s.head(K.lp).array() * z.head(K.lp).array()).sqrt();

  for (size_t i = 0; i < K.soc.size(); ++i) {
    const int o = K.soc_off[i];
    const int q = K.soc[i];
    const Vector sv = s.segment(o, q);
    const Vector zv = z.segment(o, q);
    const double sj = sv(0) * sv(0) - sv.tail(q - 1).squaredNorm();
    const double zj = zv(0) * zv(0) - zv.tail(q - 1).squaredNorm();
    if (!(sj > 0.0 && zj > 0.0 && sv(0) > 0.0 && zv(0) > 0.0)) return false;
    const Vector sb = sv / std::sqrt(sj);
    const Vector zb = zv / std::sqrt(zj);
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    Vector w(q);
    w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
    w.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
    W.soc_eta[i] = std::pow(sj / zj, 0.25);
    W.soc_w[i] = w;
    // lambda = eta * Wbar z
    const double wz = w.tail(q - 1).dot(zv.tail(q - 1));
    W.lambda(o) = W.soc_eta[i] * (w(0) * zv(0) + wz);
    W.lambda.segment(o + 1, q - 1) =
        W.soc_eta[i] * (zv.tail(q - 1) + (zv(0) + wz / (1.0 + w(0))) * w.tail(q - 1));
  }

  for (size_t i = 0; i < K.psd.size(); ++i) {
    const int p = K.psd[i];
    const Matrix S = smat(s, K.psd_off[i], p);
    const Matrix Z = smat(z, K.psd_off[i], p);
    Eigen::LLT<Matrix> ls(S), lz(Z);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    const Matrix Ls = ls.matrixL();
    const Matrix Lz = lz.matrixL();
    Eigen::JacobiSVD<Matrix> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector lam = svd.singularValues();
    if (!(lam.minCoeff() > 0.0)) return false;
    const Vector isq = lam.array().rsqrt();
    W.psd_R[i] = Ls * svd.matrixV() * isq.asDiagonal();
    const Matrix LsInv = ls.matrixL().solve(Matrix::Identity(p, p));
    W.psd_Rinv[i] = lam.array().sqrt().matrix().asDiagonal() * svd.matrixV().transpose() * LsInv;
    W.psd_lambda[i] = lam;
    svec_into(Matrix(lam.asDiagonal()), W.lambda, K.psd_off[i]);
  }
  return true;
}

enum class Op { W, WT, Winv, WinvT };

void scale_soc(const Layout& K, const Scaling& W, size_t i, Op op, Vector& v) {
  const bool inverse = (op == Op::Winv || op == Op::WinvT);
  const int o = K.soc_off[i];
  const int q = K.soc[i];
  const Vector& w = W.soc_w[i];
  const double sign = inverse ? -1.0 : 1.0;
  const double v0 = v(o);
  const double wv = w.tail(q - 1).dot(v.segment(o + 1, q - 1));
  const double scale = inverse ? 1.0 / W.soc_eta[i] : W.soc_eta[i];
  // Wbar and J Wbar J differ only in the sign of the off-diagonal coupling.
  v(o) = scale * (w(0) * v0 + sign * wv);
  v.segment(o + 1, q - 1) = scale * (v.segment(o + 1, q - 1) + (sign * v0 + wv / (1.0 + w(0))) * w.tail(q - 1));
}

void scale_psd(const Layout& K, const Scaling& W, size_t i, Op op, Vector& v) {
  const Matrix X = smat(v, K.psd_off[i], K.psd[i]);
  const Matrix& R = W.psd_R[i];
  const Matrix& Ri = W.psd_Rinv[i];
  Matrix Y;
  switch (op) {
    case Op::W: Y = R.transpose() * X * R; break;
    case Op::WT: Y = R * X * R.transpose(); break;
    case Op::Winv: Y = Ri.transpose() * X * Ri; break;
    case Op::WinvT: Y = Ri * X * Ri.transpose(); break;
  }
  svec_into(Y, v, K.psd_off[i]);
}

void apply_scaling(const Layout& K, const Scaling& W, Op op, Vector& v) {
  if (op == Op::Winv || op == Op::WinvT) {
    v.head(K.lp).array() /= W.lp_w.array();
  } else {
    v.head(K.lp).array() *= W.lp_w.array();
  }
  for (size_t i = 0; i < K.soc.size(); ++i) scale_soc(K, W, i, op, v);
  for (size_t i = 0; i < K.psd.size(); ++i) scale_psd(K, W, i, op, v);
}

Vector scaled(const Layout& K, const Scaling& W, Op op, Vector v) {
  apply_scaling(K, W, op, v);
  return v;
}

// x with lambda o x = r.
Vector lambda_divide(const Layout& K, const Scaling& W, const Vector& r) {
  const Vector& lam = W.lambda;
  Vector x(K.m);
  x.head(K.lp) = r.head(K.lp).array() / lam.head(K.lp).array();
  for (size_t i = 0; i < K.soc.size(); ++i) {
    const int o = K.soc_off[i];
    const int q = K.soc[i];
    const double l0 = lam(o);
    const auto l1 = lam.segment(o + 1, q - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * r(o) - l1.dot(r.segment(o + 1, q - 1))) / det;
    x(o) = x0;
    x.segment(o + 1, q - 1) = (r.segment(o + 1, q - 1) - x0 * l1) / l0;
  }
  for (size_t i = 0; i < K.psd.size(); ++i) {
    const Vector& l = W.psd_lambda[i];
    int idx = K.psd_off[i];
    for (int j = 0; j < K.psd[i]; ++j) {
      for (int a = j; a < K.psd[i]; ++a) {
        x(idx) = 2.0 * r(idx) / (l(a) + l(j));
        ++idx;
      }
    }
  }
  return x;
}

// Largest step a with lambda + a d in the cone (scaled space).
double max_scaled_step(const Layout& K, const Scaling& W, const Vector& d) {
  const double inf = std::numeric_limits<double>::infinity();
  double a = inf;
  for (int i = 0; i < K.lp; ++i) {
    if (d(i) < 0.0) a = std::min(a, -W.lambda(i) / d(i));
  }
  for (size_t i = 0; i < K.soc.size(); ++i) {
    a = std::min(a, soc_step(W.lambda.segment(K.soc_off[i], K.soc[i]), d.segment(K.soc_off[i], K.soc[i])));
  }
  for (size_t i = 0; i < K.psd.size(); ++i) {
    const Vector isq = W.psd_lambda[i].array().rsqrt();
    const Matrix D = isq.asDiagonal() * smat(d, K.psd_off[i], K.psd[i]) * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(D, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < 0.0) a = std::min(a, -1.0 / lmin);
  }
  return a;
}

struct Block {
  bool psd = false;
  size_t cone = 0;
  int row_off;
  int rows;
  std::vector<int> cols;
  Matrix dense;  // rows x cols.size()
};

struct Standard {
  Layout K;
  SparseRM G;
  Vector h;
  Vector c;
  std::vector<Block> blocks;  // SOC then PSD blocks
  SparseCM Glp;               // LP rows
};

ConicSolution run_ipm(const Standard& P, const SolverOptions& opt, Vector& x_out) {
  const Layout& K = P.K;
  const auto n = P.c.size();
  const int m = K.m;
  ConicSolution sol;

  Vector x = Vector::Zero(n);
  const Vector e = identity(K);
  Vector s = e;
  Vector z = e;
  double tau = 1.0;
  double kappa = 1.0;

  const double resx0 = std::max(1.0, P.c.norm());
  const double resz0 = std::max(1.0, P.h.norm());
  const SparseCM Gt = P.G.transpose();

  Scaling W;
  // Measures of the latest iterate, reused for the reduced-accuracy classification on a stall.
  double last_pres = 0.0, last_dres = 0.0, last_gap = 0.0, last_relgap = 0.0, last_pinf = 0.0, last_dinf = 0.0;
  double last_hz = 0.0, last_cx = 0.0, last_pcost = 0.0;
  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    sol.iterations = iter;
    const Vector Gx = P.G * x;
    const Vector Gtz = Gt * z;
    const Vector rx = Gtz + P.c * tau;
    const Vector rz = s + Gx - P.h * tau;
    const double cx = P.c.dot(x);
    const double hz = P.h.dot(z);
    const double rt = kappa + cx + hz;
    const double sz = s.dot(z);
    const double mu = (sz + tau * kappa) / (K.degree + 1);

    const double pres = rz.norm() / tau / resz0;
    const double dres = rx.norm() / tau / resx0;
    const double pcost = cx / tau;
    const double dcost = -hz / tau;
    const double gap = sz / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = gap;
    if (opt.verbose) {
      std::cerr << "ipm " << iter << " pcost " << pcost << " dcost " << dcost << " gap " << gap << " pres " << pres
                << " dres " << dres << " tau " << tau << " kappa " << kappa << " pinf " << (hz < 0.0 ? Gtz.norm() / -hz : -1.0) << " hz " << hz
                << '\n';
    }
    last_pres = pres;
    last_dres = dres;
    last_gap = gap;
    last_relgap = relgap;
    last_hz = hz;
    last_cx = cx;
    last_pcost = pcost;
    last_pinf = hz < 0.0 ? Gtz.norm() / -hz : std::numeric_limits<double>::infinity();
    last_dinf = cx < 0.0 ? (Gx + s).norm() / -cx : std::numeric_limits<double>::infinity();
    if (pres <= opt.feastol && dres <= opt.feastol && (gap <= opt.abstol || relgap <= opt.reltol)) {
      x_out = x / tau;
      sol.status = SolveStatus::Optimal;
      sol.objective = pcost;
      return sol;
    }
    if (hz < 0.0 && Gtz.norm() / -hz <= 10.0 * opt.feastol) {
      sol.status = SolveStatus::Infeasible;
      sol.message = "primal infeasibility certificate";
      return sol;
    }
    if (cx < 0.0 && (Gx + s).norm() / -cx <= 10.0 * opt.feastol) {
      sol.status = SolveStatus::Unbounded;
      sol.message = "dual infeasibility certificate";
      return sol;
    }
    if (iter == opt.max_iterations) break;
    if (tau < 1e-9 * std::max(1.0, kappa)) {
      // The embedding has collapsed onto an improving ray without meeting the certificate
      // tolerance; typical of weakly infeasible problems near the feasibility boundary.
      sol.iterations = iter;
      if (hz < 0.0 && (cx >= 0.0 || -hz >= -cx)) {
        sol.status = SolveStatus::Infeasible;
        sol.message = "primal infeasibility, reduced accuracy (homogeneous variable vanished)";
        return sol;
      }
      if (cx < 0.0) {
        sol.status = SolveStatus::Unbounded;
        sol.message = "dual infeasibility, reduced accuracy (homogeneous variable vanished)";
        return sol;
      }
      sol.message = "homogeneous variable vanished";
      break;
    }

    if (!compute_scaling(K, s, z, W)) {
      sol.message = "iterate left the cone";
      break;
    }

    // Schur complement G' W^{-1} W^{-T} G.
    Matrix M = Matrix::Zero(n, n);
    if (K.lp > 0) {
      const Vector d = (z.head(K.lp).array() / s.head(K.lp).array()).matrix();
      const SparseCM DG = d.asDiagonal() * P.Glp;
      M += Matrix(SparseCM(P.Glp.transpose() * DG));
    }
    for (const Block& b : P.blocks) {
      Matrix Gh(b.rows, static_cast<Eigen::Index>(b.cols.size()));
      Vector col = Vector::Zero(m);
      for (Eigen::Index j = 0; j < Gh.cols(); ++j) {
        col.segment(b.row_off, b.rows) = b.dense.col(j);
        if (b.psd) {
          scale_psd(K, W, b.cone, Op::WinvT, col);
        } else {
          scale_soc(K, W, b.cone, Op::WinvT, col);
        }
        Gh.col(j) = col.segment(b.row_off, b.rows);
      }
      const Matrix blockM = Gh.transpose() * Gh;
      for (size_t a = 0; a < b.cols.size(); ++a) {
        for (size_t c2 = 0; c2 < b.cols.size(); ++c2) M(b.cols[a], b.cols[c2]) += blockM(a, c2);
      }
    }
    const double diag_max = std::max(1.0, M.diagonal().maxCoeff());
    double reg = 1e-13 * diag_max;
    Eigen::LLT<Matrix> llt;
    for (int attempt = 0; attempt < 8; ++attempt) {
      llt.compute(M + reg * Matrix::Identity(n, n));
      if (llt.info() == Eigen::Success) break;
      reg *= 100.0;
    }
    if (llt.info() != Eigen::Success) {
      sol.message = "Schur complement factorization failed";
      break;
    }
    auto msolve = [&](const Vector& rhs) {
      Vector u = llt.solve(rhs);
      for (int r = 0; r < 2; ++r) u += llt.solve(rhs - M * u);
      return u;
    };
    auto Ghat = [&](const Vector& v) { return scaled(K, W, Op::WinvT, P.G * v); };
    auto GhatT = [&](const Vector& v) -> Vector { return Gt * scaled(K, W, Op::Winv, v); };

    const Vector hhat = scaled(K, W, Op::WinvT, P.h);
    const Vector u2 = msolve(GhatT(hhat) - P.c);
    const Vector wz2 = Ghat(u2) - hhat;
    const double denom = -(wz2.squaredNorm() + kappa / tau);
    const Vector rz_hat = scaled(K, W, Op::WinvT, rz);

    struct Direction {
      Vector dx, dz, ds, ds_hat, dz_hat;
      double dtau, dkappa;
    };
    auto newton = [&](double eta, const Vector& rc, double rctau) {
      Direction d;
      const Vector q = lambda_divide(K, W, rc);
      const Vector t = eta * rz_hat + q;
      const Vector u1 = msolve(-eta * rx - GhatT(t));
      const Vector wz1 = Ghat(u1) + t;
      d.dtau = (-eta * rt - P.c.dot(u1) - hhat.dot(wz1) - rctau / tau) / denom;
      d.dx = u1 + u2 * d.dtau;
      d.dz_hat = wz1 + wz2 * d.dtau;
      d.dz = scaled(K, W, Op::Winv, d.dz_hat);
      d.ds_hat = q - d.dz_hat;
      d.ds = scaled(K, W, Op::WT, d.ds_hat);
      d.dkappa = (rctau - kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double a = std::min(max_scaled_step(K, W, d.ds_hat), max_scaled_step(K, W, d.dz_hat));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Vector ll = jordan_product(K, W.lambda, W.lambda);
    const Direction aff = newton(1.0, -ll, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const Vector rc = -ll + sigma * mu * e - jordan_product(K, aff.ds_hat, aff.dz_hat);
    const double rctau = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
    const Direction dir = newton(1.0 - sigma, rc, rctau);
    const double alpha = std::min(1.0, 0.99 * step_length(dir));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      sol.message = "zero step length";
      break;
    }
    x += alpha * dir.dx;
    s += alpha * dir.ds;
    z += alpha * dir.dz;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }

  if (sol.message.empty()) sol.message = "iteration limit reached";
  x_out = x / tau;
  const double f = opt.inaccurate_factor;
  if (last_pres <= f * opt.feastol && last_dres <= f * opt.feastol &&
      (last_gap <= f * opt.abstol || last_relgap <= f * opt.reltol)) {
    sol.status = SolveStatus::Optimal;
    sol.message = "reduced accuracy (" + sol.message + ")";
    sol.objective = last_pcost;
    return sol;
  }
  if (last_hz < 0.0 && last_pinf <= f * 10.0 * opt.feastol) {
    sol.status = SolveStatus::Infeasible;
    sol.message = "primal infeasibility certificate, reduced accuracy (" + sol.message + ")";
    return sol;
  }
  if (last_cx < 0.0 && last_dinf <= f * 10.0 * opt.feastol) {
    sol.status = SolveStatus::Unbounded;
    sol.message = "dual infeasibility certificate, reduced accuracy (" + sol.message + ")";
    return sol;
  }
  sol.status = SolveStatus::SolverError;
  sol.objective = P.c.dot(x_out);
  return sol;
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& program, const SolverOptions& options) {
  const int nv = program.num_variables();

  // Cone layout and G, h with G x + s = h, s in K (s = expr).
  Standard P;
  Layout& K = P.K;
  K.lp = program.num_nonneg();
  int row = K.lp;
  for (const auto& cone : program.soc()) {
    K.soc.push_back(static_cast<int>(cone.size()));
    K.soc_off.push_back(row);
    row += static_cast<int>(cone.size());
  }
  for (const auto& [dim, lower] : program.psd()) {
    K.psd.push_back(dim);
    K.psd_off.push_back(row);
    row += svec_size(dim);
  }
  K.m = row;
  K.degree = K.lp + static_cast<int>(K.soc.size());
  for (int p : K.psd) K.degree += p;

  std::vector<Triplet> trip;
  Vector h = Vector::Zero(K.m);
  auto emit = [&](int r, const AffineExpr& e, double scale) {
    for (const auto& t : e.terms) trip.emplace_back(r, t.var, -scale * t.coef);
    h(r) = scale * e.constant;
  };
  row = 0;
  for (const auto& e : program.nonneg()) emit(row++, e, 1.0);
  for (const auto& cone : program.soc()) {
    for (const auto& e : cone) emit(row++, e, 1.0);
  }
  for (const auto& [dim, lower] : program.psd()) {
    int idx = 0;
    for (int j = 0; j < dim; ++j) {
      for (int i = j; i < dim; ++i) emit(row++, lower[static_cast<size_t>(idx++)], i == j ? 1.0 : kSqrt2);
    }
  }
  SparseCM G(K.m, nv);
  G.setFromTriplets(trip.begin(), trip.end());

  // Eliminate equalities: x = offset + T y.
  const auto& eqs = program.equalities();
  std::set<int> eq_vars;
  for (const auto& e : eqs) {
    for (const auto& t : e.terms) eq_vars.insert(t.var);
  }
  Vector offset = Vector::Zero(nv);
  SparseCM T;
  if (eq_vars.empty()) {
    T.resize(nv, nv);
    T.setIdentity();
    if (!eqs.empty()) {
      for (const auto& e : eqs) {
        if (std::abs(e.constant) > 1e-9) {
          ConicSolution sol;
          sol.status = SolveStatus::Infeasible;
          sol.message = "inconsistent constant equality";
          return sol;
        }
      }
    }
  } else {
    const std::vector<int> ev(eq_vars.begin(), eq_vars.end());
    std::vector<int> pos(static_cast<size_t>(nv), -1);
    for (size_t i = 0; i < ev.size(); ++i) pos[static_cast<size_t>(ev[i])] = static_cast<int>(i);
    const auto ne = static_cast<Eigen::Index>(ev.size());
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(eqs.size()), ne);
    Vector b(static_cast<Eigen::Index>(eqs.size()));
    for (size_t r = 0; r < eqs.size(); ++r) {
      for (const auto& t : eqs[r].terms) A(static_cast<Eigen::Index>(r), pos[static_cast<size_t>(t.var)]) += t.coef;
      b(static_cast<Eigen::Index>(r)) = -eqs[r].constant;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
    qr.setThreshold(1e-11);
    qr.compute(A.transpose());
    const auto rank = qr.rank();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    cod.setThreshold(1e-11);
    cod.compute(A);
    const Vector xe = cod.solve(b);
    if ((A * xe - b).norm() > 1e-8 * (1.0 + b.norm())) {
      ConicSolution sol;
      sol.status = SolveStatus::Infeasible;
      sol.message = "inconsistent equality constraints";
      return sol;
    }
    const Matrix Q = qr.householderQ();
    const Matrix Z = Q.rightCols(ne - rank);
    for (Eigen::Index i = 0; i < ne; ++i) offset(ev[static_cast<size_t>(i)]) = xe(i);

    const auto nz = static_cast<int>(Z.cols());
    std::vector<Triplet> tt;
    for (Eigen::Index i = 0; i < ne; ++i) {
      for (int j = 0; j < nz; ++j) {
        if (Z(i, j) != 0.0) tt.emplace_back(ev[static_cast<size_t>(i)], j, Z(i, j));
      }
    }
    int col = nz;
    for (int v = 0; v < nv; ++v) {
      if (pos[static_cast<size_t>(v)] < 0) tt.emplace_back(v, col++, 1.0);
    }
    T.resize(nv, col);
    T.setFromTriplets(tt.begin(), tt.end());
  }

  const SparseCM Gr = (G * T).pruned(0.0);
  P.G = Gr;
  P.h = h - G * offset;
  P.c = T.transpose() * program.objective();
  P.Glp = Gr.topRows(K.lp);

  auto make_block = [&](int off, int rows, bool psd, size_t cone) {
    Block b;
    b.psd = psd;
    b.cone = cone;
    b.row_off = off;
    b.rows = rows;
    const SparseRM slice = P.G.middleRows(off, rows);
    const SparseCM cm = slice;
    for (int j = 0; j < cm.outerSize(); ++j) {
      if (cm.col(j).nonZeros() > 0) b.cols.push_back(j);
    }
    b.dense = Matrix::Zero(rows, static_cast<Eigen::Index>(b.cols.size()));
    for (size_t a = 0; a < b.cols.size(); ++a) b.dense.col(static_cast<Eigen::Index>(a)) = Matrix(cm.col(b.cols[a]));
    return b;
  };
  for (size_t i = 0; i < K.soc.size(); ++i) P.blocks.push_back(make_block(K.soc_off[i], K.soc[i], false, i));
  for (size_t i = 0; i < K.psd.size(); ++i) P.blocks.push_back(make_block(K.psd_off[i], svec_size(K.psd[i]), true, i));

  Vector y;
  ConicSolution sol = run_ipm(P, options, y);
  if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::SolverError) {
    sol.x = offset + T * y;
    sol.objective = program.objective().dot(sol.x);
  }
  return sol;
}

}  // namespace safelqr
