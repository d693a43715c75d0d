#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "safelqr/controller.hpp"
#include "safelqr/noise.hpp"

namespace safelqr {

/// Raised when a rollout leaves ||x||_inf <= 1e9 or produces a non-finite state.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  [[nodiscard]] int step() const { return step_; }

private:
  int step_;
};

/// States x_0..x_T, inputs/excitation/disturbances for k = 0..T-1.
struct Trajectory {
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<Vector> eta;
  std::vector<Vector> w;
  std::uint64_t seed = 0;
  std::string system_id;
  std::string controller_id;

  [[nodiscard]] int horizon() const { return static_cast<int>(u.size()); }
  /// First `T` steps (states up to x_T).
  [[nodiscard]] Trajectory prefix(int T) const;
};

constexpr double kDivergenceThreshold = 1e9;

/// Closed loop x_{k+1} = A x_k + B u_k + w_k with u_k = K(x) + eta_k. Per step the excitation
/// is drawn before the disturbance, both from one sampler seeded with noise.seed.
/// The controller is reset before the first step.
Trajectory rollout(const LinearSystem& sys, SlsController& ctrl, const NoiseModel& noise, int T, const Vector& x0);

/// Same loop with explicit disturbance and excitation sequences (an empty eta means zero).
Trajectory rollout(const LinearSystem& sys, SlsController& ctrl, const std::vector<Vector>& w,
                   const std::vector<Vector>& eta, const Vector& x0);

struct ViolationReport {
  int count = 0;             // number of violated (step, row) pairs
  double worst_margin = 0.0; // min over steps and rows of b_j - F_j v
  int first_index = -1;      // step of the first violation, -1 if none
  [[nodiscard]] bool clean() const { return count == 0; }
};

/// States x_0..x_T against F_x x <= b_x and applied inputs u_0..u_{T-1} against F_u u <= b_u.
ViolationReport check_constraints(const Trajectory& traj, const PolytopeConstraints& cons);

/// (1 / (T - burn_in)) sum_{k >= burn_in} x_k' Q x_k + u_k' R u_k over k < T.
double empirical_cost(const Trajectory& traj, const Matrix& Q, const Matrix& R, int burn_in = 0);

}  // namespace safelqr
