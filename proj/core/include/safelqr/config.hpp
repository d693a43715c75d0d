#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safelqr/noise.hpp"
#include "safelqr/synthesis.hpp"

namespace safelqr {

/// Everything a learning run needs. The initial estimate is truth + (dA0, dB0).
struct LearningConfig {
  LinearSystem truth;
  LinearSystem estimate;
  Matrix dA0;
  Matrix dB0;
  UncertaintySpec eps0;
  NoiseModel noise;
  PolytopeConstraints cons;
  int L = 15;
  Matrix Q;
  Matrix R;
  Vector x0;
  int horizon = 200;  // rollout length of a learning round
  std::vector<int> T_schedule{100, 200, 400, 800};
  int trials = 400;
  double inflation = 1.2;
  SynthesisOptions synthesis;
  OuterSearchOptions search;

  std::vector<double> tradeoff_r_x;
  std::vector<double> tradeoff_eps{0.1, 0.01};
  double tradeoff_tol = 1e-3;

  std::vector<Vector> figure1_x0;
  double refined_eps = 0.001;

  std::string output_dir = "out";
  std::string source;  // YAML text the config was read from

  void validate() const;
};

/// Random perturbation with independent uniform entries, rescaled so ||D||_inf = eps exactly.
Matrix random_perturbation(int rows, int cols, double eps, NoiseSampler& sampler);

/// Parses the YAML schema documented in the README.
LearningConfig parse_learning_config(const std::string& yaml_text);
LearningConfig load_learning_config(const std::string& path);

}  // namespace safelqr
