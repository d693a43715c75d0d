#include "safelqr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safelqr {

namespace {

void advance(const LinearSystem& sys, Trajectory& traj, const Vector& u, const Vector& eta, const Vector& w) {
  const Vector& x = traj.x.back();
  Vector next = sys.A() * x + sys.B() * u + w;
  const int k = static_cast<int>(traj.u.size());
  if (!next.allFinite()) throw DivergenceError("rollout produced a non-finite state at step " + std::to_string(k + 1), k + 1);
  if (next.lpNorm<Eigen::Infinity>() > kDivergenceThreshold) {
    throw DivergenceError("rollout diverged (||x||_inf > 1e9) at step " + std::to_string(k + 1), k + 1);
  }
  traj.u.push_back(u);
  traj.eta.push_back(eta);
  traj.w.push_back(w);
  traj.x.push_back(std::move(next));
}

void check_loop(const LinearSystem& sys, const SlsController& ctrl, const Vector& x0) {
  require_dims(ctrl.n() == sys.n() && ctrl.d() == sys.d(), "controller and system dimensions differ");
  require_dims(x0.size() == sys.n(), "initial state dimension mismatch");
}

}  // namespace

Trajectory Trajectory::prefix(int T) const {
  require_domain(T >= 0 && T <= horizon(), "prefix length outside the trajectory");
  Trajectory out;
  out.x.assign(x.begin(), x.begin() + T + 1);
  out.u.assign(u.begin(), u.begin() + T);
  out.eta.assign(eta.begin(), eta.begin() + T);
  out.w.assign(w.begin(), w.begin() + T);
  out.seed = seed;
  out.system_id = system_id;
  out.controller_id = controller_id;
  return out;
}

Trajectory rollout(const LinearSystem& sys, SlsController& ctrl, const NoiseModel& noise, int T, const Vector& x0) {
  require_domain(T >= 1, "rollout horizon must be at least 1");
  noise.validate();
  check_loop(sys, ctrl, x0);
  NoiseSampler sampler(noise.distribution, noise.seed);
  Trajectory traj;
  traj.seed = noise.seed;
  traj.x.reserve(static_cast<size_t>(T) + 1);
  traj.x.push_back(x0);
  ctrl.reset();
  for (int k = 0; k < T; ++k) {
    Vector eta = sampler.sample(sys.d(), noise.sigma_eta);
    Vector w = sampler.sample(sys.n(), noise.sigma_w);
    Vector u = ctrl.step(traj.x.back(), eta);
    advance(sys, traj, u, eta, w);
  }
  return traj;
}

Trajectory rollout(const LinearSystem& sys, SlsController& ctrl, const std::vector<Vector>& w,
                   const std::vector<Vector>& eta, const Vector& x0) {
  require_domain(!w.empty(), "rollout needs at least one disturbance");
  require_dims(eta.empty() || eta.size() == w.size(), "excitation and disturbance sequences differ in length");
  check_loop(sys, ctrl, x0);
  Trajectory traj;
  traj.x.push_back(x0);
  ctrl.reset();
  const Vector zero = Vector::Zero(sys.d());
  for (size_t k = 0; k < w.size(); ++k) {
    require_dims(w[k].size() == sys.n(), "disturbance dimension mismatch");
    const Vector& e = eta.empty() ? zero : eta[k];
    Vector u = ctrl.step(traj.x.back(), e);
    advance(sys, traj, u, e, w[k]);
  }
  return traj;
}

ViolationReport check_constraints(const Trajectory& traj, const PolytopeConstraints& cons) {
  ViolationReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  auto scan = [&](const std::vector<Vector>& seq, const Matrix& F, const Vector& b) {
    for (size_t k = 0; k < seq.size(); ++k) {
      const Vector slack = b - F * seq[k];
      for (Eigen::Index j = 0; j < slack.size(); ++j) {
        rep.worst_margin = std::min(rep.worst_margin, slack(j));
        if (slack(j) < 0.0) {
          ++rep.count;
          const int idx = static_cast<int>(k);
          if (rep.first_index < 0 || idx < rep.first_index) rep.first_index = idx;
        }
      }
    }
  };
  if (cons.state_rows() > 0) scan(traj.x, cons.Fx(), cons.bx());
  if (cons.input_rows() > 0) scan(traj.u, cons.Fu(), cons.bu());
  return rep;
}

double empirical_cost(const Trajectory& traj, const Matrix& Q, const Matrix& R, int burn_in) {
  const int T = traj.horizon();
  require_domain(burn_in >= 0 && T - burn_in >= 1, "empirical cost needs T - burn_in >= 1");
  double sum = 0.0;
  for (int k = burn_in; k < T; ++k) {
    const Vector& x = traj.x[static_cast<size_t>(k)];
    const Vector& u = traj.u[static_cast<size_t>(k)];
    sum += x.dot(Q * x) + u.dot(R * u);
  }
  return sum / (T - burn_in);
}

}  // namespace safelqr
