#include "safelqr/noise.hpp"

namespace safelqr {

NoiseDistribution parse_distribution(const std::string& name) {
  if (name == "uniform") return NoiseDistribution::Uniform;
  if (name == "symmetric-discrete" || name == "rademacher") return NoiseDistribution::SymmetricDiscrete;
  throw DomainError("unknown noise distribution '" + name + "'");
}

std::string to_string(NoiseDistribution dist) {
  return dist == NoiseDistribution::Uniform ? "uniform" : "symmetric-discrete";
}

void NoiseModel::validate() const {
  require_domain(sigma_w >= 0.0, "sigma_w must be nonnegative");
  require_domain(sigma_eta >= 0.0, "sigma_eta must be nonnegative");
}

double NoiseModel::second_moment(double sigma) const {
  return distribution == NoiseDistribution::Uniform ? sigma * sigma / 3.0 : sigma * sigma;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ (index + 0x632be59bd9b4e019ULL));
}

NoiseSampler::NoiseSampler(NoiseDistribution dist, std::uint64_t seed) : dist_(dist), engine_(seed) {}

double NoiseSampler::unit() {
  // 53 random mantissa bits; identical on every platform, unlike uniform_real_distribution.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

Vector NoiseSampler::sample(int dim, double sigma) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double u = unit();
    if (dist_ == NoiseDistribution::Uniform) {
      v(i) = sigma * (2.0 * u - 1.0);
    } else {
      v(i) = u < 0.5 ? -sigma : sigma;
    }
  }
  return v;
}

}  // namespace safelqr
