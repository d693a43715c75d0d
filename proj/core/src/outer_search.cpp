#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "safelqr/synthesis.hpp"

namespace safelqr {

namespace {

class Evaluator {
public:
  Evaluator(const SynthesisSpec& spec, const SynthesisOptions& options, double tie_rel)
      : spec_(spec), options_(options), tie_rel_(tie_rel) {}

  double cost(double gamma, double tau) {
    const auto key = std::make_pair(gamma, tau);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second.robust_cost;
    SynthesisSpec s = spec_;
    s.gamma = gamma;
    s.tau = tau;
    SynthesisResult r = solve(s, options_);
    if (!r.feasible()) r.robust_cost = std::numeric_limits<double>::infinity();
    points_.push_back({gamma, tau, r.robust_cost, r.status});
    const double c = r.robust_cost;
    if (r.feasible() && better(gamma, tau, c)) {
      best_gamma_ = gamma;
      best_tau_ = tau;
      best_ = r;
      has_best_ = true;
    }
    cache_.emplace(key, std::move(r));
    return c;
  }

  [[nodiscard]] bool has_best() const { return has_best_; }
  [[nodiscard]] double best_gamma() const { return best_gamma_; }
  [[nodiscard]] double best_tau() const { return best_tau_; }
  [[nodiscard]] const SynthesisResult& best() const { return best_; }
  [[nodiscard]] const std::vector<SearchPoint>& points() const { return points_; }

private:
  bool better(double gamma, double tau, double c) const {
    if (!has_best_) return true;
    const double b = best_.robust_cost;
    if (std::abs(c - b) <= tie_rel_ * std::max(std::abs(c), std::abs(b))) {
      if (gamma != best_gamma_) return gamma < best_gamma_;
      return tau < best_tau_;
    }
    return c < b;
  }

  const SynthesisSpec& spec_;
  const SynthesisOptions& options_;
  double tie_rel_;
  std::map<std::pair<double, double>, SynthesisResult> cache_;
  std::vector<SearchPoint> points_;
  bool has_best_ = false;
  double best_gamma_ = 0.0;
  double best_tau_ = 0.0;
  SynthesisResult best_;
};

// Golden-section minimization of f on [lo, hi]; infeasible points are +inf.
template <class F>
void golden(F&& f, double lo, double hi, int iterations) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations; ++i) {
    // Ties, including both infeasible, shrink toward the lower end where budgets are smaller
    // only if the lower probe is feasible; otherwise toward the upper end.
    bool keep_left = f1 < f2 || (f1 == f2 && std::isfinite(f1));
    if (!std::isfinite(f1) && !std::isfinite(f2)) keep_left = false;
    if (keep_left) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
}

}  // namespace

OuterSearchResult outer_search(const SynthesisSpec& spec, const SynthesisOptions& options,
                               const OuterSearchOptions& search) {
  require_domain(search.delta > 0.0 && search.delta < 1.0, "search margin delta must lie in (0, 1)");
  require_domain(search.grid >= 2, "search grid needs at least two points per axis");
  spec.validate();
  Evaluator eval(spec, options, search.tie_rel);

  const double top = 1.0 - search.delta;
  std::vector<double> axis(static_cast<size_t>(search.grid));
  for (int i = 0; i < search.grid; ++i) axis[static_cast<size_t>(i)] = top * i / (search.grid - 1);
  for (double g : axis) {
    for (double t : axis) eval.cost(g, t);
  }

  OuterSearchResult out;
  if (eval.has_best()) {
    const double step = top / (search.grid - 1);
    double width = step;
    for (int round = 0; round < search.golden_rounds; ++round) {
      const double g0 = eval.best_gamma();
      const double t0 = eval.best_tau();
      golden([&](double g) { return eval.cost(g, t0); }, std::max(0.0, g0 - width), std::min(top, g0 + width),
             search.golden_iterations);
      const double g1 = eval.best_gamma();
      golden([&](double t) { return eval.cost(g1, t); }, std::max(0.0, t0 - width), std::min(top, t0 + width),
             search.golden_iterations);
      width *= 0.5;
    }
    out.gamma = eval.best_gamma();
    out.tau = eval.best_tau();
    out.result = eval.best();
  } else {
    out.result.status = SynthesisStatus::Infeasible;
    out.result.robust_cost = out.result.nominal_cost = std::numeric_limits<double>::infinity();
    out.result.message = "no feasible (gamma, tau) in the search domain";
    // Surface a solver error if every point failed numerically rather than by certificate.
    const auto& pts = eval.points();
    if (!pts.empty() && std::all_of(pts.begin(), pts.end(),
                                    [](const SearchPoint& p) { return p.status == SynthesisStatus::SolverError; })) {
      out.result.status = SynthesisStatus::SolverError;
    }
  }
  out.evaluations = eval.points();
  return out;
}

}  // namespace safelqr
