#include "relurecon/random.hpp"

#include <cmath>

namespace relurecon {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

Eigen::VectorXd random_unit_vector(Rng& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(dim);
  double norm = 0.0;
  // A Gaussian draw of exactly zero norm is possible only in theory.
  while (norm == 0.0) {
    for (int i = 0; i < dim; ++i) u[i] = gauss(rng);
    norm = u.norm();
  }
  return u / norm;
}

Eigen::VectorXd sample_in_ball(Rng& rng, const Eigen::VectorXd& center,
                               double radius) {
  const int dim = static_cast<int>(center.size());
  Eigen::VectorXd dir = random_unit_vector(rng, dim);
  const double scale =
      radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / static_cast<double>(dim));
  return center + scale * dir;
}

}  // namespace relurecon
