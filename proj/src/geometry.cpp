#include "relurecon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "relurecon/errors.hpp"
#include "relurecon/random.hpp"

namespace relurecon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Hyperplane::Hyperplane(VectorXd unit_normal, double beta)
    : normal(std::move(unit_normal)), offset(beta) {
  if (std::abs(normal.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("hyperplane normal must have unit length");
  }
}

Hyperplane Hyperplane::from_coefficients(const VectorXd& a, double beta) {
  const double norm = a.norm();
  if (norm == 0.0) throw std::invalid_argument("hyperplane normal is zero");
  return Hyperplane(a / norm, beta / norm);
}

namespace {

void check_pair(const Hyperplane& h1, const Hyperplane& h2) {
  if (h1.normal.size() != h2.normal.size()) {
    throw DimensionError("hyperplanes live in different dimensions");
  }
  if (std::abs(h1.normal.dot(h2.normal)) >= 1.0 - kColinearTolerance) {
    throw DegeneratePairError("hyperplane normals are colinear");
  }
}

}  // namespace

double angle(const Hyperplane& h1, const Hyperplane& h2) {
  return std::acos(std::clamp(h1.normal.dot(h2.normal), -1.0, 1.0));
}

VectorXd least_norm_point(const Hyperplane& h1, const Hyperplane& h2) {
  check_pair(h1, h2);
  const double cos_t = h1.normal.dot(h2.normal);
  const double sin2 = 1.0 - cos_t * cos_t;
  const double b1 = h1.offset;
  const double b2 = h2.offset;
  return ((b1 - b2 * cos_t) / sin2) * h1.normal + ((b2 - b1 * cos_t) / sin2) * h2.normal;
}

AffineSubspace intersection(const Hyperplane& h1, const Hyperplane& h2) {
  check_pair(h1, h2);
  const auto n = h1.normal.size();
  if (n < 2) throw std::invalid_argument("intersection needs n >= 2");

  MatrixXd a(2, n);
  a.row(0) = h1.normal.transpose();
  a.row(1) = h2.normal.transpose();
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  // Gauss-Jordan with greedy largest-pivot column choice; columns are swapped
  // so that A P = E^{-1} [I_2 F].
  constexpr double kRankTol = 1e-10;
  for (Eigen::Index k = 0; k < 2; ++k) {
    Eigen::Index best_row = k;
    Eigen::Index best_col = k;
    double best = 0.0;
    for (Eigen::Index r = k; r < 2; ++r) {
      for (Eigen::Index c = k; c < n; ++c) {
        if (std::abs(a(r, c)) > best) {
          best = std::abs(a(r, c));
          best_row = r;
          best_col = c;
        }
      }
    }
    if (best < kRankTol) throw DegeneratePairError("hyperplane system is rank deficient");
    a.row(k).swap(a.row(best_row));
    a.col(k).swap(a.col(best_col));
    std::swap(perm[k], perm[best_col]);
    a.row(k) /= a(k, k);
    for (Eigen::Index r = 0; r < 2; ++r) {
      if (r != k) a.row(r) -= a(r, k) * a.row(k);
    }
  }

  const MatrixXd f = a.rightCols(n - 2);
  MatrixXd permuted(n, n - 2);
  permuted.topRows(2) = -f;
  permuted.bottomRows(n - 2).setIdentity();
  MatrixXd basis(n, n - 2);
  for (Eigen::Index k = 0; k < n; ++k) basis.row(perm[k]) = permuted.row(k);

  return {least_norm_point(h1, h2), std::move(basis)};
}

double ball_volume(int n, double r) {
  if (n < 1) throw std::invalid_argument("ball dimension must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  const double half = 0.5 * n;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0)) *
         std::pow(r, n);
}

double ball_second_moment(int n, double r) {
  return ball_volume(n, 1.0) * std::pow(r, n + 2) / (n + 2);
}

double ball_product_integral(const AffineFunction& gi, const AffineFunction& gj,
                             const Ball& ball) {
  const int n = ball.dim();
  if (gi.slope.size() != n || gj.slope.size() != n) {
    throw DimensionError("affine functions and ball differ in dimension");
  }
  return gi(ball.center) * gj(ball.center) * ball_volume(n, ball.radius) +
         gi.slope.dot(gj.slope) * ball_second_moment(n, ball.radius);
}

McEstimate mc_integral(const std::function<double(const VectorXd&)>& f, const Ball& ball,
                       std::size_t nsamples, std::uint64_t seed) {
  if (nsamples < 1) throw std::invalid_argument("need at least one sample");
  Rng rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < nsamples; ++k) {
    const double value = f(sample_in_ball(rng, ball.center, ball.radius));
    const double delta = value - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (value - mean);
  }
  const double volume = ball_volume(ball.dim(), ball.radius);
  const double variance = nsamples > 1 ? m2 / static_cast<double>(nsamples - 1) : 0.0;
  return {volume * mean, volume * std::sqrt(variance / static_cast<double>(nsamples))};
}

}  // namespace relurecon
