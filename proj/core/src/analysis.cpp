#include "safelqr/analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace safelqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MarginTable {
  Matrix table;
  std::vector<std::pair<int, int>> skipped;
  double min = std::numeric_limits<double>::infinity();
  std::pair<int, int> argmin{-1, -1};
};

MarginTable margin_table(const FirResponse& phi, const Matrix& F, const Vector& b, const Vector& x0, double sigma_w,
                         double c0) {
  const int L = phi.length();
  MarginTable mt;
  mt.table = Matrix::Constant(F.rows(), L + 1, kNaN);
  Vector prefix = Vector::Zero(F.rows());  // sum_{t<=k} ||F_j Phi(t)||_1
  for (int k = 0; k <= L; ++k) {
    Vector num;
    Vector next = prefix;
    if (k < L) {
      next += (F * phi[k + 1]).cwiseAbs().rowwise().sum();
      num = b - constraint_value(phi, F, x0, sigma_w, 0.0, c0, k);
    } else {
      num = b - stationary_constraint_value(phi, F, sigma_w, 0.0, c0);
    }
    for (Eigen::Index j = 0; j < F.rows(); ++j) {
      const double den = sigma_w * c0 * next(j);
      const int jj = static_cast<int>(j);
      if (!(den > 0.0)) {
        mt.skipped.emplace_back(jj, k);
        continue;
      }
      const double v = num(j) / den;
      mt.table(j, k) = v;
      if (v < mt.min) {
        mt.min = v;
        mt.argmin = {jj, k};
      }
    }
    prefix = next;
  }
  return mt;
}

double max_abs_entry(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

}  // namespace

MarginReport margins(const FirResponse& phi_x, const FirResponse& phi_u, const PolytopeConstraints& cons,
                     const Vector& x0, double sigma_w) {
  require_domain(sigma_w >= 0.0, "sigma_w must be nonnegative");
  const double c0 = sigma_w > 0.0 ? std::max(1.0, x0.lpNorm<Eigen::Infinity>() / sigma_w) : 1.0;
  MarginTable mx = margin_table(phi_x, cons.Fx(), cons.bx(), x0, sigma_w, c0);
  MarginTable mu = margin_table(phi_u, cons.Fu(), cons.bu(), x0, sigma_w, c0);
  require_domain(mx.argmin.first >= 0 || mu.argmin.first >= 0, "every margin denominator is zero");
  MarginReport rep;
  rep.margin_x = mx.min;
  rep.margin_u = mu.min;
  rep.argmin_x = mx.argmin;
  rep.argmin_u = mu.argmin;
  rep.table_x = std::move(mx.table);
  rep.table_u = std::move(mu.table);
  rep.skipped_x = std::move(mx.skipped);
  rep.skipped_u = std::move(mu.skipped);
  return rep;
}

ZetaReport zeta(const UncertaintySpec& unc, double k_star_l1, double k_star_hinf, double phi_l1, double phi_hinf) {
  require_domain(k_star_l1 >= 0.0 && k_star_hinf >= 0.0 && phi_l1 >= 0.0 && phi_hinf >= 0.0,
                 "norms must be nonnegative");
  unc.validate();
  ZetaReport z;
  z.unc = unc;
  z.k_star_l1 = k_star_l1;
  z.k_star_hinf = k_star_hinf;
  z.phi_l1 = phi_l1;
  z.phi_hinf = phi_hinf;
  z.zeta_inf = (unc.eps_A_inf + unc.eps_B_inf * k_star_l1) * phi_l1;
  z.zeta_2 = (unc.eps_A_2 + unc.eps_B_2 * k_star_hinf) * phi_hinf;
  return z;
}

GainNorms gain_norms(const FirResponse& phi_x, const FirResponse& phi_u, int horizon) {
  const int L = phi_x.length();
  require_dims(L >= 1 && phi_u.length() == L, "responses must share length L >= 1");
  GainNorms g;
  g.horizon = horizon > 0 ? horizon : 4 * L;
  FirResponse gain = phi_u.truncated(g.horizon);
  if (L >= 2) {
    std::vector<Matrix> shifted;
    for (int k = 2; k <= L; ++k) shifted.push_back(phi_x[k]);
    gain = compose_with_inverse(phi_u, FirResponse(std::move(shifted)), g.horizon);
  }
  for (int k = std::max(1, gain.length() - L + 1); k <= gain.length(); ++k) {
    g.tail = std::max(g.tail, max_abs_entry(gain[k]));
  }
  g.conservative = L >= 2;
  g.k_hinf = hinf_norm(gain, HinfMode::CertifiedUpper);
  g.k_l1 = l1_norm(gain);
  g.phi_x_hinf = hinf_norm(phi_x, HinfMode::CertifiedUpper);
  g.phi_x_l1 = l1_norm(phi_x);
  return g;
}

ZetaReport zeta(const UncertaintySpec& unc, const GainNorms& norms) {
  return zeta(unc, norms.k_l1, norms.k_hinf, norms.phi_x_l1, norms.phi_x_hinf);
}

BoundResult suboptimality_bound(const ZetaReport& z, const MarginReport& m) {
  BoundResult r;
  r.bound = 2.0 * std::numbers::sqrt2 * z.zeta_2;
  const double inf_cap = std::min({m.margin_x / 10.0, m.margin_u / 10.0, 0.25});
  r.applicable = z.zeta_2 <= 1.0 / (4.0 * std::numbers::sqrt2) && z.zeta_inf <= inf_cap;
  return r;
}

DecayEnvelope combined_envelope(const DecayEnvelope& star, const DecayEnvelope& delta) {
  const double rho_max = std::max(star.rho, delta.rho);
  require_domain(rho_max > 0.0 && rho_max < 1.0, "envelope decay rates must lie in (0, 1)");
  DecayEnvelope env;
  env.rho = 0.5 * (rho_max + 1.0);
  env.C = star.C * delta.C / std::log(env.rho / rho_max);
  return env;
}

FirBoundResult fir_suboptimality_bound(double C_fir, int L, const DecayEnvelope& env, const ZetaReport& z,
                                       double margin) {
  require_domain(C_fir > 1.0, "C_FIR must exceed 1");
  require_domain(env.rho > 0.0 && env.rho < 1.0, "envelope rate must lie in (0, 1)");
  FirBoundResult r;
  const double growth = C_fir * (1.0 + C_fir);
  r.L_min = std::log(env.C / (1.0 - 1.0 / C_fir)) / std::log(1.0 / env.rho) - 1.0;
  r.L_ok = L >= r.L_min;
  r.bound = 2.0 * std::numbers::sqrt2 * growth * z.zeta_2 + C_fir - 1.0;
  const double inf_cap = std::min(margin / (2.0 * growth) - (C_fir - 1.0), 1.0 / (2.0 * (1.0 + C_fir)));
  r.applicable = r.L_ok && z.zeta_inf <= inf_cap && z.zeta_2 <= 1.0 / (2.0 * std::numbers::sqrt2 * (1.0 + C_fir));
  return r;
}

FirResponse mismatch_response(const FirResponse& phi_x, const FirResponse& phi_u, const Matrix& V,
                              const LinearSystem& sys) {
  const int L = phi_x.length();
  require_dims(L >= 1 && phi_u.length() == L, "responses must share length L >= 1");
  require_dims(phi_x.rows() == sys.n() && phi_u.rows() == sys.d(), "responses do not match the system");
  require_dims(V.rows() == sys.n() && V.cols() == phi_x.cols(), "V must be n x n");
  std::vector<Matrix> blocks;
  for (int k = 1; k <= L; ++k) {
    const Matrix next = k < L ? phi_x[k + 1] : V;
    blocks.push_back(next - sys.A() * phi_x[k] - sys.B() * phi_u[k]);
  }
  return FirResponse(std::move(blocks));
}

AchievedCost achieved_cost(const FirResponse& phi_x, const FirResponse& phi_u, const LinearSystem& truth,
                           const Matrix& Q, const Matrix& R) {
  const int L = phi_x.length();
  const FirResponse D = mismatch_response(phi_x, phi_u, Matrix::Zero(truth.n(), truth.n()), truth);
  AchievedCost out;
  out.mismatch_hinf = hinf_norm(D, HinfMode::CertifiedUpper);
  require_domain(out.mismatch_hinf < 0.95, "mismatch response too large for the series expansion");
  const FirResponse stacked = FirResponse::stack(phi_x, phi_u);
  for (int H = 8 * L;; H *= 2) {
    const FirResponse achieved = compose_with_inverse(stacked, D, H);
    double tail = 0.0;
    for (int k = H - L + 1; k <= H; ++k) tail = std::max(tail, max_abs_entry(achieved.coeff(k)));
    if (tail < 1e-10 || H >= (1 << 16)) {
      std::vector<Matrix> bx, bu;
      for (int k = 1; k <= achieved.length(); ++k) {
        bx.push_back(achieved[k].topRows(truth.n()));
        bu.push_back(achieved[k].bottomRows(truth.d()));
      }
      out.cost = weighted_h2_cost(FirResponse(std::move(bx)), FirResponse(std::move(bu)), Q, R);
      out.horizon = H;
      return out;
    }
  }
}

double cost_gap(double J_hat, double J_star) {
  require_domain(J_star > 0.0, "reference cost must be positive");
  return (J_hat - J_star) / J_star;
}

OracleResult lemma1_feasibility_oracle(const FirResponse& phi_x_star, const FirResponse& phi_u_star,
                                       const Matrix& delta_A, const Matrix& delta_B, const SynthesisSpec& spec) {
  spec.validate();
  const int L = spec.L;
  OracleResult res;
  const GainNorms norms = gain_norms(phi_x_star, phi_u_star);
  res.zeta = zeta(spec.unc, norms);
  const MarginReport m = margins(phi_x_star, phi_u_star, spec.cons, spec.x0, spec.sigma_w);
  if (!suboptimality_bound(res.zeta, m).applicable) {
    res.reason = "zeta or margin preconditions do not hold";
    return res;
  }

  std::vector<Matrix> blocks;
  for (int k = 1; k <= phi_x_star.length(); ++k) {
    blocks.push_back(delta_A * phi_x_star[k] + delta_B * phi_u_star[k]);
  }
  const FirResponse D(std::move(blocks));  // I - Delta = I + D
  if (hinf_norm(D, HinfMode::CertifiedUpper) >= 1.0) {
    res.reason = "mismatch is not a contraction";
    return res;
  }
  res.applicable = true;

  const int horizon = L + 1;
  const FirResponse tx = compose_with_inverse(phi_x_star, D, horizon);
  const FirResponse tu = compose_with_inverse(phi_u_star, D, horizon);
  const FirResponse phi_x = tx.truncated(L);
  const FirResponse phi_u = tu.truncated(L);
  const Matrix V = tx.coeff(L + 1);
  res.tail = std::max(spectral_norm(V), induced_inf_norm(V));
  const double s2 = std::numbers::sqrt2 * res.zeta.zeta_2;
  res.gamma = s2 / (1.0 - s2) + res.tail;
  res.tau = res.zeta.zeta_inf / (1.0 - res.zeta.zeta_inf) + res.tail;
  if (res.gamma >= 1.0 || res.tau >= 1.0) {
    res.reason = "constructed budgets reach 1";
    return res;
  }
  SynthesisSpec s = spec;
  s.gamma = res.gamma;
  s.tau = res.tau;
  res.feasible = check_feasible(s, phi_x, phi_u, V, 1e-6, &res.reason);
  return res;
}

EndToEndBound end_to_end_bound(double T0, double sigma_w, double sigma_eta, double C_u, int n, int d,
                               const GainNorms& norms, double margin_x, double T, double delta) {
  require_domain(sigma_eta > 0.0 && margin_x > 0.0 && T > 0.0, "invalid end-to-end arguments");
  require_domain(delta > 0.0 && delta < 1.0, "failure probability must lie in (0, 1)");
  const double ratio = sigma_w * C_u / sigma_eta;
  const double linf_term = (n + d) / (margin_x * margin_x) * std::pow((1.0 + norms.k_l1) * norms.phi_x_l1, 2);
  const double hinf_term = std::pow((1.0 + norms.k_hinf) * norms.phi_x_hinf, 2);
  EndToEndBound out;
  out.T_required = T0 * ratio * ratio * std::max(linf_term, hinf_term);
  out.bound = ratio * std::sqrt((n + d) / T) * (1.0 + norms.k_hinf) * norms.phi_x_hinf *
              std::sqrt(std::log(d / delta));
  return out;
}

}  // namespace safelqr
