#include "safelqr/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace safelqr {

namespace {

Matrix read_matrix(const YAML::Node& node, const std::string& what) {
  require_domain(node && node.IsSequence() && node.size() > 0, what + " must be a nonempty list of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  const auto cols = static_cast<Eigen::Index>(node[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const YAML::Node row = node[static_cast<size_t>(i)];
    require_dims(row.IsSequence() && static_cast<Eigen::Index>(row.size()) == cols, what + " rows differ in length");
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = row[static_cast<size_t>(j)].as<double>();
  }
  return M;
}

Vector read_vector(const YAML::Node& node, const std::string& what) {
  require_domain(node && node.IsSequence(), what + " must be a list");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = node[i].as<double>();
  return v;
}

template <class T>
T get(const YAML::Node& node, const char* key, T fallback) {
  return node && node[key] ? node[key].as<T>() : fallback;
}

}  // namespace

void LearningConfig::validate() const {
  const int n = truth.n();
  const int d = truth.d();
  require_dims(n > 0 && estimate.n() == n && estimate.d() == d, "estimate must match the true system");
  require_dims(cons.Fx().cols() == n && cons.Fu().cols() == d, "constraints do not match the system");
  require_dims(Q.rows() == n && R.rows() == d && x0.size() == n, "Q, R or x0 has the wrong size");
  require_domain(L >= 2 && horizon >= 1 && trials >= 1, "L, horizon and trials must be positive");
  require_domain(inflation >= 1.0, "inflation must be at least 1");
  require_domain(!T_schedule.empty(), "T schedule must not be empty");
  for (int T : T_schedule) require_domain(T >= n + d, "every T must be at least n + d");
  for (const Vector& x : figure1_x0) require_dims(x.size() == n, "figure x0 entries must have n coordinates");
  eps0.validate();
  noise.validate();
}

Matrix random_perturbation(int rows, int cols, double eps, NoiseSampler& sampler) {
  require_domain(eps >= 0.0, "perturbation size must be nonnegative");
  Matrix D(rows, cols);
  for (int i = 0; i < rows; ++i) D.row(i) = sampler.sample(cols, 1.0).transpose();
  const double norm = induced_inf_norm(D);
  return norm > 0.0 ? Matrix(D * (eps / norm)) : Matrix(D);
}

LearningConfig parse_learning_config(const std::string& yaml_text) {
  const YAML::Node root = YAML::Load(yaml_text);
  LearningConfig cfg;
  cfg.source = yaml_text;

  const YAML::Node sys = root["system"];
  require_domain(static_cast<bool>(sys), "config needs a 'system' section");
  cfg.truth = LinearSystem(read_matrix(sys["A"], "system.A"), read_matrix(sys["B"], "system.B"));
  const int n = cfg.truth.n();
  const int d = cfg.truth.d();

  const YAML::Node noise = root["noise"];
  cfg.noise.sigma_w = get(noise, "sigma_w", 0.1);
  cfg.noise.sigma_eta = get(noise, "sigma_eta", 0.0);
  cfg.noise.distribution = parse_distribution(get<std::string>(noise, "distribution", "uniform"));
  cfg.noise.seed = get<std::uint64_t>(noise, "seed", 0);

  const YAML::Node est = root["initial_estimate"];
  if (est && est["A"]) {
    const Matrix A0 = read_matrix(est["A"], "initial_estimate.A");
    const Matrix B0 = read_matrix(est["B"], "initial_estimate.B");
    require_dims(A0.rows() == n && A0.cols() == n && B0.rows() == n && B0.cols() == d, "initial estimate shape");
    cfg.dA0 = A0 - cfg.truth.A();
    cfg.dB0 = B0 - cfg.truth.B();
  } else {
    const double eps = get(est, "eps_inf", 0.1);
    NoiseSampler sampler(NoiseDistribution::Uniform, get<std::uint64_t>(est, "seed", 0));
    cfg.dA0 = random_perturbation(n, n, eps, sampler);
    cfg.dB0 = random_perturbation(n, d, eps, sampler);
  }
  cfg.estimate = LinearSystem(cfg.truth.A() + cfg.dA0, cfg.truth.B() + cfg.dB0);
  cfg.eps0.eps_A_2 = spectral_norm(cfg.dA0);
  cfg.eps0.eps_B_2 = spectral_norm(cfg.dB0);
  cfg.eps0.eps_A_inf = induced_inf_norm(cfg.dA0);
  cfg.eps0.eps_B_inf = induced_inf_norm(cfg.dB0);
  if (est && est["uncertainty"]) {
    const YAML::Node u = est["uncertainty"];
    cfg.eps0.eps_A_2 = get(u, "eps_A_2", cfg.eps0.eps_A_2);
    cfg.eps0.eps_B_2 = get(u, "eps_B_2", cfg.eps0.eps_B_2);
    cfg.eps0.eps_A_inf = get(u, "eps_A_inf", cfg.eps0.eps_A_inf);
    cfg.eps0.eps_B_inf = get(u, "eps_B_inf", cfg.eps0.eps_B_inf);
  }

  const YAML::Node cons = root["constraints"];
  if (cons && cons["Fx"]) {
    cfg.cons = PolytopeConstraints(read_matrix(cons["Fx"], "constraints.Fx"), read_vector(cons["bx"], "constraints.bx"),
                                   read_matrix(cons["Fu"], "constraints.Fu"), read_vector(cons["bu"], "constraints.bu"));
  } else {
    cfg.cons = PolytopeConstraints::box(n, d, get(cons, "state_bound", 8.0), get(cons, "input_bound", 4.0));
  }

  const YAML::Node syn = root["synthesis"];
  cfg.L = get(syn, "L", 15);
  cfg.Q = syn && syn["Q"] ? read_matrix(syn["Q"], "synthesis.Q") : Matrix::Identity(n, n);
  cfg.R = syn && syn["R"] ? read_matrix(syn["R"], "synthesis.R") : Matrix::Identity(d, d);
  const std::string backend = get<std::string>(syn, "backend", "lmi");
  require_domain(backend == "lmi" || backend == "surrogate", "synthesis.backend must be 'lmi' or 'surrogate'");
  cfg.synthesis.backend = backend == "lmi" ? HinfBackend::Lmi : HinfBackend::Surrogate;
  cfg.search.grid = get(syn, "grid", cfg.search.grid);
  cfg.search.golden_rounds = get(syn, "golden_rounds", cfg.search.golden_rounds);
  cfg.search.golden_iterations = get(syn, "golden_iterations", cfg.search.golden_iterations);
  cfg.search.delta = get(syn, "delta", cfg.search.delta);

  const YAML::Node learn = root["learning"];
  cfg.x0 = learn && learn["x0"] ? read_vector(learn["x0"], "learning.x0") : Vector::Zero(n);
  cfg.horizon = get(learn, "horizon", cfg.horizon);
  if (learn && learn["T_schedule"]) cfg.T_schedule = learn["T_schedule"].as<std::vector<int>>();
  cfg.trials = get(learn, "trials", cfg.trials);
  cfg.inflation = get(learn, "inflation", cfg.inflation);

  const YAML::Node trade = root["tradeoff"];
  if (trade && trade["r_x"]) cfg.tradeoff_r_x = trade["r_x"].as<std::vector<double>>();
  if (trade && trade["eps"]) cfg.tradeoff_eps = trade["eps"].as<std::vector<double>>();
  cfg.tradeoff_tol = get(trade, "tolerance", cfg.tradeoff_tol);

  const YAML::Node fig = root["figure1"];
  if (fig && fig["x0"]) {
    for (const auto& x : fig["x0"]) cfg.figure1_x0.push_back(read_vector(x, "figure1.x0"));
  }
  cfg.refined_eps = get(fig, "refined_eps", cfg.refined_eps);

  cfg.output_dir = get<std::string>(root["output"], "dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

LearningConfig load_learning_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_learning_config(ss.str());
}

}  // namespace safelqr
