#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "safelqr/lti.hpp"

namespace safelqr {

enum class NoiseDistribution { Uniform, SymmetricDiscrete };

NoiseDistribution parse_distribution(const std::string& name);
std::string to_string(NoiseDistribution dist);

/// Bounded process noise (||w||_inf <= sigma_w) and excitation (||eta||_inf <= sigma_eta).
struct NoiseModel {
  double sigma_w = 0.0;
  double sigma_eta = 0.0;
  NoiseDistribution distribution = NoiseDistribution::Uniform;
  std::uint64_t seed = 0;

  void validate() const;

  /// Per-coordinate second moment of a sample with bound sigma: sigma^2/3 for uniform,
  /// sigma^2 for the symmetric two-point law.
  [[nodiscard]] double second_moment(double sigma) const;
};

/// Seed for trial `index` derived from a master seed (splitmix64 of the pair).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Coordinate-independent zero-mean sampler bounded in l_inf. One instance per thread.
class NoiseSampler {
public:
  NoiseSampler(NoiseDistribution dist, std::uint64_t seed);

  /// Vector of `dim` coordinates, each in [-sigma, sigma].
  Vector sample(int dim, double sigma);
  /// Single uniform draw on [0, 1).
  double unit();

private:
  NoiseDistribution dist_;
  std::mt19937_64 engine_;
};

}  // namespace safelqr
