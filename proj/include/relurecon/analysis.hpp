#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relurecon/fit.hpp"
#include "relurecon/oracle.hpp"
#include "relurecon/relunet.hpp"

namespace relurecon {

struct DistanceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double p = 2.0;
  std::size_t nsamples = 0;
  std::uint64_t seed = 0;
};

/// (V_n(T) mean |f - g|^p)^{1/p} over uniform samples of B_T(0). The standard
/// error is propagated from the integral by the delta method.
DistanceEstimate dp_distance(const ScalarField& f, const ScalarField& g, int dim,
                             double domain_radius, double p, std::size_t nsamples,
                             std::uint64_t seed);

/// Distinct activation patterns among uniform samples of B_T(0); a lower bound
/// on the number of linear regions meeting the ball. Samples are drawn as one
/// stream, so a smaller count uses a prefix of a larger one.
std::size_t count_regions(const ReluNetwork& net, double domain_radius, std::size_t nsamples,
                          std::uint64_t seed);

enum class BendOutcome { z_bends, z2_bends, neither, both };

std::string to_string(BendOutcome outcome);

struct BendProbe {
  double angle_tol = 1e-3;     // radians
  double bisect_tol = 1e-10;
  double near_tol = 1e-6;      // distance of x_star from each zero set
  std::uint64_t seed = 0;
};

/// Decides which of two intersecting neuron boundaries bends at x_star. Each
/// zero set is traced by bisection on both sides of the other boundary within
/// distance eps of x_star, a plane is fitted to the traced points per side,
/// and a normal change above angle_tol marks a bend.
BendOutcome classify_intersection(const ReluNetwork& net, NeuronId z, NeuronId z2,
                                  const Eigen::VectorXd& x_star, double eps,
                                  const BendProbe& probe = {});

struct LambdaRow {
  double lambda = 0.0;
  std::size_t nonzero = 0;
  std::size_t nonzero_pairs = 0;
  double objective = 0.0;
  bool converged = false;
};

struct ConjectureReport {
  std::size_t patch_count = 0;
  std::size_t nonzero_weights = 0;
  int first_layer_width = 0;
  std::size_t nonzero_pairs = 0;
  std::size_t empirical_region_count = 0;
  double nonzero_threshold = 1e-8;
  std::vector<LambdaRow> lambda_grid;
};

using Refit = std::function<FitReport(double lambda)>;

/// Reruns the fit over the lambda grid and tabulates the sparsity of the
/// weights next to the first-layer width and the empirical region count. The
/// comparison is reported; nothing is asserted about it.
ConjectureReport conjecture_report(const FitReport& fit, const ReluNetwork& net,
                                   std::span<const double> lambda_grid, const Refit& rerun,
                                   double domain_radius, std::size_t region_samples,
                                   std::uint64_t seed);

nlohmann::json distance_to_json(const DistanceEstimate& d);
nlohmann::json conjecture_to_json(const ConjectureReport& report);
ConjectureReport conjecture_from_json(const nlohmann::json& doc);

}  // namespace relurecon
