#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace relurecon {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finalizer) so that
/// independent substreams can be handed to workers or sub-tasks.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

double uniform(Rng& rng, double lo, double hi);

Eigen::VectorXd random_unit_vector(Rng& rng, int dim);

/// Uniform sample from the ball of radius `radius` around `center`:
/// normalized Gaussian direction scaled by radius * U^(1/n).
Eigen::VectorXd sample_in_ball(Rng& rng, const Eigen::VectorXd& center,
                               double radius);

}  // namespace relurecon
