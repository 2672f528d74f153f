#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace relurecon {

/// The set {x : normal^T x = offset} with a unit normal.
struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;

  Hyperplane(Eigen::VectorXd unit_normal, double offset);

  /// Scales (a, beta) so that the normal has unit length.
  static Hyperplane from_coefficients(const Eigen::VectorXd& a, double beta);
};

/// base + span(basis columns). For two planes in R^n the basis has n-2 columns.
struct AffineSubspace {
  Eigen::VectorXd base;
  Eigen::MatrixXd basis;

  Eigen::VectorXd point(const Eigen::VectorXd& coords) const { return base + basis * coords; }
};

struct Ball {
  Eigen::VectorXd center;
  double radius = 1.0;

  int dim() const { return static_cast<int>(center.size()); }
  bool contains(const Eigen::VectorXd& x) const { return (x - center).norm() <= radius; }
};

/// x -> slope^T x + intercept.
struct AffineFunction {
  Eigen::VectorXd slope;
  double intercept = 0.0;

  double operator()(const Eigen::VectorXd& x) const { return slope.dot(x) + intercept; }
};

/// arccos of the clamped normal dot product, in [0, pi].
double angle(const Hyperplane& h1, const Hyperplane& h2);

inline constexpr double kColinearTolerance = 1e-9;

/// Point of the intersection closest to the origin. Throws DegeneratePairError
/// for (anti)parallel normals.
Eigen::VectorXd least_norm_point(const Hyperplane& h1, const Hyperplane& h2);

/// Intersection of two hyperplanes: the least-norm point plus the null space of
/// [a1^T; a2^T] read off its reduced row echelon form, P [-F; I_{n-2}].
AffineSubspace intersection(const Hyperplane& h1, const Hyperplane& h2);

/// V_n(r) = pi^{n/2} r^n / Gamma(n/2 + 1).
double ball_volume(int n, double r);

/// Exact integral of gi(x) gj(x) over the ball. With x = c + u,
///   (gi(c) gj(c)) V_n(r) + (Li . Lj) V_n(1) r^{n+2} / (n+2).
/// The second moment of B_r(0) is V_n(1) r^{n+2}/(n+2) I_n; an alternative
/// expression "r^2/n I_n" is dimensionally inconsistent with the constant term
/// and is not used.
double ball_product_integral(const AffineFunction& gi, const AffineFunction& gj,
                             const Ball& ball);

/// Scalar integral of x x^T over B_r(0) divided by I_n.
double ball_second_moment(int n, double r);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

inline constexpr std::size_t kDefaultMcSamples = 200000;

/// V_n(r) times the sample mean of f over uniform draws from the ball.
McEstimate mc_integral(const std::function<double(const Eigen::VectorXd&)>& f,
                       const Ball& ball, std::size_t nsamples, std::uint64_t seed);

}  // namespace relurecon
