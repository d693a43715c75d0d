#pragma once

#include <string>
#include <vector>

#include "safelqr/lti.hpp"

namespace safelqr {

struct Term {
  int var;
  double coef;
};

/// constant + sum coef * x[var].
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  AffineExpr& add(int var, double coef);
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator*=(double s);
  [[nodiscard]] double evaluate(const Vector& x) const;
};

/// Linear objective over nonnegative, second-order and semidefinite cones, plus equalities.
class ConicProgram {
public:
  /// Appends `count` free variables; returns the index of the first.
  int add_variables(int count);
  [[nodiscard]] int num_variables() const { return num_vars_; }

  void set_objective(int var, double coef);

  /// expr == 0.
  void add_equality(const AffineExpr& expr);
  /// expr >= 0.
  void add_nonneg(const AffineExpr& expr);
  /// e[0] >= ||(e[1], ..., e[m-1])||_2.
  void add_soc(const std::vector<AffineExpr>& e);
  /// Symmetric dim x dim matrix is PSD; `lower` holds the lower triangle in column-major order.
  void add_psd(int dim, const std::vector<AffineExpr>& lower);

  [[nodiscard]] int num_equalities() const { return static_cast<int>(equalities_.size()); }
  [[nodiscard]] int num_nonneg() const { return static_cast<int>(nonneg_.size()); }
  [[nodiscard]] int num_soc() const { return static_cast<int>(soc_.size()); }
  [[nodiscard]] int num_psd() const { return static_cast<int>(psd_.size()); }

  [[nodiscard]] const Vector& objective() const { return c_; }
  [[nodiscard]] const std::vector<AffineExpr>& equalities() const { return equalities_; }
  [[nodiscard]] const std::vector<AffineExpr>& nonneg() const { return nonneg_; }
  [[nodiscard]] const std::vector<std::vector<AffineExpr>>& soc() const { return soc_; }
  [[nodiscard]] const std::vector<std::pair<int, std::vector<AffineExpr>>>& psd() const { return psd_; }

  /// Largest violation of any constraint at x (cone constraints measured by distance to the cone
  /// boundary along its axis: -min(e) for nonneg, ||tail|| - head for SOC, -lambda_min for PSD).
  [[nodiscard]] double max_violation(const Vector& x) const;

private:
  void check(const AffineExpr& e) const;

  int num_vars_ = 0;
  Vector c_;
  std::vector<AffineExpr> equalities_;
  std::vector<AffineExpr> nonneg_;
  std::vector<std::vector<AffineExpr>> soc_;
  std::vector<std::pair<int, std::vector<AffineExpr>>> psd_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, SolverError };

std::string to_string(SolveStatus status);

struct SolverOptions {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iterations = 100;
  /// On stalls (iteration limit or numerical breakdown) the tolerances are relaxed by this
  /// factor before giving up; such results carry "reduced accuracy" in their message.
  double inaccurate_factor = 1e4;
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::SolverError;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and Mehrotra
/// predictor-corrector steps. Equalities are eliminated through a null-space basis first.
ConicSolution solve_conic(const ConicProgram& program, const SolverOptions& options = {});

}  // namespace safelqr
