#include "safelqr/synthesis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace safelqr {

void SynthesisSpec::validate() const {
  const int n = sys.n();
  const int d = sys.d();
  require_dims(n > 0 && d > 0, "synthesis needs a nonempty system");
  require_domain(L >= 2, "FIR length L must be >= 2");
  require_dims(x0.size() == n, "x0 must have n entries");
  require_dims(Q.rows() == n && Q.cols() == n, "Q must be n x n");
  require_dims(R.rows() == d && R.cols() == d, "R must be d x d");
  require_dims(cons.Fx().cols() == n && cons.Fu().cols() == d, "constraint matrices do not match the system");
  require_domain(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require_domain(tau >= 0.0 && tau < 1.0, "tau must lie in [0, 1)");
  require_domain(sigma_w >= 0.0, "sigma_w must be nonnegative");
  require_domain(sigma_w > 0.0 || x0.lpNorm<Eigen::Infinity>() == 0.0, "sigma_w must be positive when x0 is nonzero");
  unc.validate();
  Eigen::SelfAdjointEigenSolver<Matrix> eq(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
  require_domain(eq.eigenvalues()(0) >= -1e-12, "Q must be positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Matrix> er(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
  require_domain(er.eigenvalues()(0) > 0.0, "R must be positive definite");
}

double SynthesisSpec::c0() const {
  if (sigma_w <= 0.0) return 1.0;
  return std::max(1.0, x0.lpNorm<Eigen::Infinity>() / sigma_w);
}

std::string to_string(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::Feasible: return "feasible";
    case SynthesisStatus::Infeasible: return "infeasible";
    case SynthesisStatus::SolverError: return "solver-error";
  }
  return "unknown";
}

std::string to_string(HinfBackend backend) { return backend == HinfBackend::Lmi ? "lmi" : "surrogate"; }

namespace {

// sum_{t=1..k} ||F_j Phi(t)||_1 for every row j.
Vector row_l1_prefix(const FirResponse& phi, const Matrix& F, int k) {
  Vector acc = Vector::Zero(F.rows());
  for (int t = 1; t <= std::min(k, phi.length()); ++t) acc += (F * phi[t]).cwiseAbs().rowwise().sum();
  return acc;
}

Matrix psd_sqrt(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Vector constraint_value(const FirResponse& phi, const Matrix& F, const Vector& x0, double sigma_w, double tau,
                        double c0, int k) {
  require_domain(tau < 1.0, "tau must be < 1");
  require_domain(k >= 0, "k must be nonnegative");
  require_dims(F.cols() == phi.rows(), "F columns must match response rows");
  require_dims(x0.size() == phi.cols(), "x0 must match response columns");
  const double inflation = tau * sigma_w * c0 / (1.0 - tau);
  return F * (phi.coeff(k + 1) * x0) + sigma_w * row_l1_prefix(phi, F, k) + inflation * row_l1_prefix(phi, F, k + 1);
}

Vector stationary_constraint_value(const FirResponse& phi, const Matrix& F, double sigma_w, double tau, double c0) {
  require_domain(tau < 1.0, "tau must be < 1");
  require_dims(F.cols() == phi.rows(), "F columns must match response rows");
  return sigma_w * (1.0 + tau * c0 / (1.0 - tau)) * row_l1_prefix(phi, F, phi.length());
}

double weighted_h2_cost(const FirResponse& phi_x, const FirResponse& phi_u, const Matrix& Q, const Matrix& R) {
  const Matrix Qh = psd_sqrt(Q);
  const Matrix Rh = psd_sqrt(R);
  double s = 0.0;
  for (int t = 1; t <= phi_x.length(); ++t) s += (Qh * phi_x[t]).squaredNorm();
  for (int t = 1; t <= phi_u.length(); ++t) s += (Rh * phi_u[t]).squaredNorm();
  return std::sqrt(s);
}

void AssembledProgram::decode(const Vector& x, FirResponse& phi_x, FirResponse& phi_u, Matrix& V) const {
  std::vector<Matrix> bx;
  std::vector<Matrix> bu;
  bx.push_back(Matrix::Identity(n, n));
  for (int k = 2; k <= L; ++k) {
    bx.push_back(Eigen::Map<const Matrix>(x.data() + phi_x_offset + (k - 2) * n * n, n, n));
  }
  for (int k = 1; k <= L; ++k) {
    bu.push_back(Eigen::Map<const Matrix>(x.data() + phi_u_offset + (k - 1) * d * n, d, n));
  }
  phi_x = FirResponse(std::move(bx));
  phi_u = FirResponse(std::move(bu));
  V = Eigen::Map<const Matrix>(x.data() + v_offset, n, n);
}

AssembledProgram assemble_program(const SynthesisSpec& spec, const SynthesisOptions& options, bool include_hinf) {
  spec.validate();
  AssembledProgram ap;
  ConicProgram& prog = ap.program;
  const int n = spec.sys.n();
  const int d = spec.sys.d();
  const int L = spec.L;
  ap.n = n;
  ap.d = d;
  ap.L = L;
  const Matrix& A = spec.sys.A();
  const Matrix& B = spec.sys.B();
  const UncertaintySpec& unc = spec.unc;

  ap.phi_x_offset = prog.add_variables((L - 1) * n * n);
  ap.phi_u_offset = prog.add_variables(L * d * n);
  ap.v_offset = prog.add_variables(n * n);

  auto px = [&](int k, int i, int j) {
    if (k == 1) return AffineExpr(i == j ? 1.0 : 0.0);
    AffineExpr e;
    e.add(ap.phi_x_offset + (k - 2) * n * n + j * n + i, 1.0);
    return e;
  };
  auto pu = [&](int k, int i, int j) {
    AffineExpr e;
    e.add(ap.phi_u_offset + (k - 1) * d * n + j * d + i, 1.0);
    return e;
  };
  auto pv = [&](int i, int j) {
    AffineExpr e;
    e.add(ap.v_offset + j * n + i, 1.0);
    return e;
  };
  auto scaled = [](AffineExpr e, double s) {
    e *= s;
    return e;
  };
  // Entry (i, j) of M * Phi(k) for a response accessor.
  auto left_mult = [&](const Matrix& M, auto&& entry, int k, int i, int j, int inner) {
    AffineExpr e;
    for (int l = 0; l < inner; ++l) {
      if (M(i, l) != 0.0) e += scaled(entry(k, l, j), M(i, l));
    }
    return e;
  };
  auto abs_of = [&](const AffineExpr& e) {
    if (e.terms.empty()) return AffineExpr(std::abs(e.constant));
    const int a = prog.add_variables(1);
    AffineExpr upper;
    upper.add(a, 1.0);
    upper += scaled(e, -1.0);
    AffineExpr lower;
    lower.add(a, 1.0);
    lower += e;
    prog.add_nonneg(upper);
    prog.add_nonneg(lower);
    AffineExpr r;
    r.add(a, 1.0);
    return r;
  };

  // Affine recursion and tail.
  for (int k = 1; k < L; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        AffineExpr e = px(k + 1, i, j);
        e += scaled(left_mult(A, px, k, i, j, n), -1.0);
        e += scaled(left_mult(B, pu, k, i, j, d), -1.0);
        prog.add_equality(e);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      AffineExpr e = pv(i, j);
      e += scaled(left_mult(A, px, L, i, j, n), -1.0);
      e += scaled(left_mult(B, pu, L, i, j, d), -1.0);
      prog.add_equality(e);
    }
  }

  // Worst-case polytope rows for k = 0..L-1 plus the stationary row.
  const double inflation = spec.tau * spec.sigma_w * spec.c0() / (1.0 - spec.tau);
  auto add_polytope_rows = [&](const Matrix& F, const Vector& b, auto&& entry, int rows_of_phi, bool has_x0) {
    for (int j = 0; j < F.rows(); ++j) {
      std::vector<AffineExpr> prefix(static_cast<size_t>(L + 1));
      for (int t = 1; t <= L; ++t) {
        AffineExpr acc = prefix[static_cast<size_t>(t - 1)];
        for (int c = 0; c < n; ++c) {
          AffineExpr fe;
          for (int i = 0; i < rows_of_phi; ++i) {
            if (F(j, i) != 0.0) fe += scaled(entry(t, i, c), F(j, i));
          }
          acc += abs_of(fe);
        }
        prefix[static_cast<size_t>(t)] = acc;
      }
      for (int k = 0; k < L; ++k) {
        AffineExpr row(b(j));
        if (has_x0) {
          for (int c = 0; c < n; ++c) {
            if (spec.x0(c) == 0.0) continue;
            for (int i = 0; i < rows_of_phi; ++i) {
              if (F(j, i) != 0.0) row += scaled(entry(k + 1, i, c), -F(j, i) * spec.x0(c));
            }
          }
        }
        row += scaled(prefix[static_cast<size_t>(k)], -spec.sigma_w);
        row += scaled(prefix[static_cast<size_t>(k + 1)], -inflation);
        prog.add_nonneg(row);
      }
      AffineExpr stationary(b(j));
      stationary += scaled(prefix[static_cast<size_t>(L)], -(spec.sigma_w + inflation));
      prog.add_nonneg(stationary);
    }
  };
  const bool has_x0 = spec.x0.lpNorm<Eigen::Infinity>() > 0.0;
  add_polytope_rows(spec.cons.Fx(), spec.cons.bx(), px, n, has_x0);
  add_polytope_rows(spec.cons.Fu(), spec.cons.bu(), pu, d, has_x0);

  // Absolute values of every response entry, shared by the L1 row sums and the surrogate.
  const bool need_inf = unc.eps_A_inf > 0.0 || unc.eps_B_inf > 0.0;
  const bool need_2 = unc.eps_A_2 > 0.0 || unc.eps_B_2 > 0.0;
  const bool surrogate = include_hinf && need_2 && options.backend == HinfBackend::Surrogate;
  std::vector<AffineExpr> abs_x;
  std::vector<AffineExpr> abs_u;
  auto ax = [&](int t, int i, int j) -> const AffineExpr& {
    return abs_x[static_cast<size_t>((t - 1) * n * n + j * n + i)];
  };
  auto au = [&](int t, int i, int j) -> const AffineExpr& {
    return abs_u[static_cast<size_t>((t - 1) * d * n + j * d + i)];
  };
  if (need_inf || surrogate) {
    for (int t = 1; t <= L; ++t) {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) abs_x.push_back(abs_of(px(t, i, j)));
      }
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) abs_u.push_back(abs_of(pu(t, i, j)));
      }
    }
  }

  // L1 budget: every stacked row sum plus ||V||_inf <= tau.
  const int v_inf = prog.add_variables(1);
  for (int i = 0; i < n; ++i) {
    AffineExpr row;
    row.add(v_inf, 1.0);
    for (int j = 0; j < n; ++j) row += scaled(abs_of(pv(i, j)), -1.0);
    prog.add_nonneg(row);
  }
  {
    AffineExpr base(spec.tau);
    base.add(v_inf, -1.0);
    if (!need_inf) {
      prog.add_nonneg(base);
    } else {
      for (int i = 0; i < n; ++i) {
        AffineExpr row = base;
        for (int t = 1; t <= L; ++t) {
          for (int j = 0; j < n; ++j) row += scaled(ax(t, i, j), -unc.eps_A_inf);
        }
        prog.add_nonneg(row);
      }
      for (int i = 0; i < d; ++i) {
        AffineExpr row = base;
        for (int t = 1; t <= L; ++t) {
          for (int j = 0; j < n; ++j) row += scaled(au(t, i, j), -unc.eps_B_inf);
        }
        prog.add_nonneg(row);
      }
    }
  }

  // H-infinity budget: s >= ||V||_F >= ||V||_2 and sqrt(2) g (1 + slack) + s <= gamma.
  ap.v_norm_var = prog.add_variables(1);
  {
    std::vector<AffineExpr> cone;
    AffineExpr head;
    head.add(ap.v_norm_var, 1.0);
    cone.push_back(head);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) cone.push_back(pv(i, j));
    }
    prog.add_soc(cone);
  }
  AffineExpr budget(spec.gamma);
  budget.add(ap.v_norm_var, -1.0);
  const double hinf_weight = std::numbers::sqrt2 * (1.0 + options.hinf_slack);
  if (surrogate) {
    const int g_rows = prog.add_variables(1);
    const int g_cols = prog.add_variables(1);
    for (int r = 0; r < n + d; ++r) {
      AffineExpr row;
      row.add(g_rows, 1.0);
      for (int t = 1; t <= L; ++t) {
        for (int j = 0; j < n; ++j) {
          row += r < n ? scaled(ax(t, r, j), -unc.eps_A_2) : scaled(au(t, r - n, j), -unc.eps_B_2);
        }
      }
      prog.add_nonneg(row);
    }
    for (int j = 0; j < n; ++j) {
      AffineExpr col;
      col.add(g_cols, 1.0);
      for (int t = 1; t <= L; ++t) {
        for (int i = 0; i < n; ++i) col += scaled(ax(t, i, j), -unc.eps_A_2);
        for (int i = 0; i < d; ++i) col += scaled(au(t, i, j), -unc.eps_B_2);
      }
      prog.add_nonneg(col);
    }
    budget.add(g_rows, -0.5 * hinf_weight).add(g_cols, -0.5 * hinf_weight);
  } else if (include_hinf && need_2) {
    // Bounded real lemma for y_k = sum_t M(t) w_{k-t}; the state stacks the last L inputs.
    ap.has_lmi = true;
    const int q = n;
    const int p = n + d;
    const int ns = L * q;
    const int g = prog.add_variables(1);
    const int p_offset = prog.add_variables(ns * (ns + 1) / 2);
    auto pvar = [&](int a, int b) {
      if (a < b) std::swap(a, b);
      // column-major lower triangle index of (a, b)
      const int idx = b * ns - b * (b - 1) / 2 + (a - b);
      AffineExpr e;
      e.add(p_offset + idx, 1.0);
      return e;
    };
    auto c_entry = [&](int r, int a) {
      const int t = a / q + 1;
      const int col = a % q;
      return r < n ? scaled(px(t, r, col), unc.eps_A_2) : scaled(pu(t, r - n, col), unc.eps_B_2);
    };
    const int dim = ns + q + p;
    std::vector<AffineExpr> lower;
    lower.reserve(static_cast<size_t>(dim * (dim + 1) / 2));
    for (int j = 0; j < dim; ++j) {
      for (int i = j; i < dim; ++i) {
        AffineExpr e;
        if (i < ns) {
          // state-state: P - A'PA
          e += pvar(i, j);
          if (i + q < ns && j + q < ns) e += scaled(pvar(i + q, j + q), -1.0);
        } else if (i < ns + q) {
          const int ci = i - ns;
          if (j < ns) {
            // input-state: -(A'PB)'
            if (j + q < ns) e += scaled(pvar(j + q, ci), -1.0);
          } else {
            const int cj = j - ns;
            e += scaled(pvar(ci, cj), -1.0);
            if (ci == cj) e.add(g, 1.0);
          }
        } else {
          const int r = i - ns - q;
          if (j < ns) {
            e += c_entry(r, j);
          } else if (j >= ns + q && i == j) {
            e.add(g, 1.0);
          }
        }
        lower.push_back(e);
      }
    }
    prog.add_psd(dim, lower);
    budget.add(g, -hinf_weight);
  }
  prog.add_nonneg(budget);

  // Objective: t >= ||[Q^1/2 Phi_x; R^1/2 Phi_u]||_F over all blocks.
  const Matrix Qh = psd_sqrt(spec.Q);
  const Matrix Rh = psd_sqrt(spec.R);
  ap.cost_var = prog.add_variables(1);
  {
    std::vector<AffineExpr> cone;
    AffineExpr head;
    head.add(ap.cost_var, 1.0);
    cone.push_back(head);
    for (int t = 1; t <= L; ++t) {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) cone.push_back(left_mult(Qh, px, t, i, j, n));
        for (int i = 0; i < d; ++i) cone.push_back(left_mult(Rh, pu, t, i, j, d));
      }
    }
    prog.add_soc(cone);
  }
  prog.set_objective(ap.cost_var, 1.0);
  return ap;
}

Certificates evaluate_certificates(const SynthesisSpec& spec, const FirResponse& phi_x, const FirResponse& phi_u,
                                   const Matrix& V) {
  Certificates cert;
  const UncertaintySpec& unc = spec.unc;
  const FirResponse stacked2 = FirResponse::stack(phi_x.scaled(unc.eps_A_2), phi_u.scaled(unc.eps_B_2));
  const FirResponse stacked_inf = FirResponse::stack(phi_x.scaled(unc.eps_A_inf), phi_u.scaled(unc.eps_B_inf));
  cert.hinf = (unc.eps_A_2 > 0.0 || unc.eps_B_2 > 0.0) ? hinf_norm_certified(stacked2) : 0.0;
  cert.v_2 = spectral_norm(V);
  cert.v_inf = induced_inf_norm(V);
  cert.hinf_total = std::numbers::sqrt2 * cert.hinf + cert.v_2;
  cert.l1 = l1_norm(stacked_inf);
  cert.l1_total = cert.l1 + cert.v_inf;
  cert.affine_residual = max_abs(affine_residual(phi_x, phi_u, V, spec.sys));

  const double c0 = spec.c0();
  auto table = [&](const FirResponse& phi, const Matrix& F) {
    Matrix values(F.rows(), spec.L + 1);
    for (int k = 0; k < spec.L; ++k) {
      values.col(k) = constraint_value(phi, F, spec.x0, spec.sigma_w, spec.tau, c0, k);
    }
    values.col(spec.L) = stationary_constraint_value(phi, F, spec.sigma_w, spec.tau, c0);
    return values;
  };
  cert.state_values = table(phi_x, spec.cons.Fx());
  cert.input_values = table(phi_u, spec.cons.Fu());
  auto slack = [](const Matrix& values, const Vector& b) {
    if (values.rows() == 0) return std::numeric_limits<double>::infinity();
    return (values.colwise() - b).maxCoeff() * -1.0;
  };
  cert.state_slack = slack(cert.state_values, spec.cons.bx());
  cert.input_slack = slack(cert.input_values, spec.cons.bu());
  return cert;
}

bool certificates_hold(const SynthesisSpec& spec, const Certificates& cert, double tol, std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  if (!(cert.affine_residual <= tol)) return fail("affine residual " + std::to_string(cert.affine_residual));
  if (!(cert.l1_total <= spec.tau + tol)) return fail("L1 budget " + std::to_string(cert.l1_total));
  if (!(cert.hinf_total <= spec.gamma + tol)) return fail("H-infinity budget " + std::to_string(cert.hinf_total));
  if (!(cert.state_slack >= -tol)) return fail("state constraint slack " + std::to_string(cert.state_slack));
  if (!(cert.input_slack >= -tol)) return fail("input constraint slack " + std::to_string(cert.input_slack));
  return true;
}

bool check_feasible(const SynthesisSpec& spec, const FirResponse& phi_x, const FirResponse& phi_u, const Matrix& V,
                    double tol, std::string* reason) {
  return certificates_hold(spec, evaluate_certificates(spec, phi_x, phi_u, V), tol, reason);
}

namespace {

SynthesisResult finish(const SynthesisSpec& spec, const SynthesisOptions& options, const AssembledProgram& ap,
                       const ConicSolution& sol) {
  SynthesisResult res;
  res.gamma = spec.gamma;
  res.tau = spec.tau;
  res.backend = options.backend;
  res.lmi_active = ap.has_lmi;
  res.solver_iterations = sol.iterations;
  res.message = sol.message;
  if (sol.status == SolveStatus::Infeasible) {
    res.status = SynthesisStatus::Infeasible;
    res.nominal_cost = res.robust_cost = std::numeric_limits<double>::infinity();
    return res;
  }
  if (sol.x.size() != ap.program.num_variables() || !sol.x.allFinite()) {
    res.status = SynthesisStatus::SolverError;
    res.nominal_cost = res.robust_cost = std::numeric_limits<double>::infinity();
    if (res.message.empty()) res.message = to_string(sol.status);
    return res;
  }
  ap.decode(sol.x, res.phi_x, res.phi_u, res.V);
  res.certificates = evaluate_certificates(spec, res.phi_x, res.phi_u, res.V);
  std::string reason;
  const bool ok = certificates_hold(spec, res.certificates, options.audit_tol, &reason);
  res.nominal_cost = weighted_h2_cost(res.phi_x, res.phi_u, spec.Q, spec.R);
  res.robust_cost = res.nominal_cost / (1.0 - spec.gamma);
  if (ok) {
    res.status = SynthesisStatus::Feasible;
    if (sol.status != SolveStatus::Optimal) res.message = "certified but possibly suboptimal: " + sol.message;
  } else {
    res.status = SynthesisStatus::SolverError;
    res.message = "certificate audit failed: " + reason;
    if (sol.status != SolveStatus::Optimal) res.message += " (" + sol.message + ")";
  }
  return res;
}

}  // namespace

SynthesisResult solve(const SynthesisSpec& spec, const SynthesisOptions& options) {
  spec.validate();
  const bool need_2 = spec.unc.eps_A_2 > 0.0 || spec.unc.eps_B_2 > 0.0;
  if (options.backend == HinfBackend::Lmi && options.lazy_lmi && need_2) {
    const AssembledProgram relaxed = assemble_program(spec, options, false);
    const ConicSolution sol = solve_conic(relaxed.program, options.solver);
    if (sol.status == SolveStatus::Infeasible) return finish(spec, options, relaxed, sol);
    if (sol.status == SolveStatus::Optimal) {
      FirResponse phi_x;
      FirResponse phi_u;
      Matrix V;
      relaxed.decode(sol.x, phi_x, phi_u, V);
      const FirResponse M = FirResponse::stack(phi_x.scaled(spec.unc.eps_A_2), phi_u.scaled(spec.unc.eps_B_2));
      const double s = sol.x(relaxed.v_norm_var);
      if (std::numbers::sqrt2 * hinf_norm_certified(M) * (1.0 + options.hinf_slack) + s <= spec.gamma) {
        return finish(spec, options, relaxed, sol);
      }
    }
  }
  const AssembledProgram full = assemble_program(spec, options, true);
  return finish(spec, options, full, solve_conic(full.program, options.solver));
}

}  // namespace safelqr
