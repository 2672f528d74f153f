#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "relurecon/geometry.hpp"
#include "relurecon/oracle.hpp"
#include "relurecon/patches.hpp"

namespace relurecon {

enum class RegKind { none, l1, l2 };

struct Regularizer {
  RegKind kind = RegKind::none;
  double lambda = 0.0;
};

struct FitConfig {
  /// Unset: 1 / lambda_max of the fixed-sample Hessian.
  std::optional<double> learning_rate;
  std::size_t max_iters = 100000;
  double grad_tol = 1e-9;
  Regularizer reg;
  std::size_t mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  double nonzero_threshold = 1e-8;

  void validate() const;
};

using PatchPair = std::pair<std::size_t, std::size_t>;

/// Uniform samples of B_T(0) together with the target values there. The same
/// (dim, T, nsamples, seed) always yields the same points, whether or not the
/// target is queried.
struct FitSamples {
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd values;
  double volume = 0.0;
};

std::vector<Eigen::VectorXd> domain_samples(int dim, double domain_radius,
                                            std::size_t nsamples, std::uint64_t seed);

/// Draws the fixed sample set and queries the oracle once per point.
FitSamples draw_fit_samples(const Oracle& oracle, std::size_t nsamples, std::uint64_t seed);

/// samples x features matrix: one column per patch g'_i, then one column per
/// pair holding g'_i g'_j.
Eigen::SparseMatrix<double> design_matrix(std::span<const LocalPatch> patches,
                                          std::span<const PatchPair> pairs,
                                          std::span<const Eigen::VectorXd> points);

struct HessianEstimate {
  Eigen::MatrixXd value;
  Eigen::MatrixXd std_error;

  double max_std_error() const { return std_error.size() ? std_error.maxCoeff() : 0.0; }
};

/// 2 V/M G^T G with per-entry standard errors; the Monte Carlo estimate of
/// H_ij = 2 int_{B_T} phi_i phi_j over the sample set behind G.
HessianEstimate gram_hessian(const Eigen::SparseMatrix<double>& design, double volume);

struct HessianEstimator {
  enum class Method { closed_form_disjoint, monte_carlo } method = Method::monte_carlo;
  std::size_t nsamples = kDefaultMcSamples;
  std::uint64_t seed = 0;

  static HessianEstimator closed_form() { return {Method::closed_form_disjoint, 0, 0}; }
  static HessianEstimator monte_carlo(std::size_t nsamples, std::uint64_t seed) {
    return {Method::monte_carlo, nsamples, seed};
  }
};

/// H_ij = 2 int_{B_T(0)} g'_i g'_j dx. The closed form needs pairwise
/// disjoint balls inside B_T(0) and throws std::invalid_argument otherwise.
HessianEstimate hessian(std::span<const LocalPatch> patches, double domain_radius,
                        const HessianEstimator& estimator);

struct GershgorinResult {
  bool ok = false;
  Eigen::VectorXd margins;  // H_ii - sum_{j != i} |H_ij|
};

GershgorinResult gershgorin_check(const Eigen::MatrixXd& h);

struct RadiiMode {
  enum class Kind { disjoint, gershgorin } kind = Kind::disjoint;
  double shrink = 0.8;
  std::size_t nsamples = kDefaultMcSamples;
  std::uint64_t seed = 0;

  static RadiiMode disjoint() { return {}; }
  static RadiiMode gershgorin(double shrink, std::size_t nsamples, std::uint64_t seed) {
    return {Kind::gershgorin, shrink, nsamples, seed};
  }
};

/// disjoint: r_i = min(0.5 min_j |v_i - v_j|, T - |v_i|).
/// gershgorin: twice the disjoint radii (kept inside B_T(0)), shrunk
/// geometrically until the Monte Carlo Hessian is diagonally dominant. Once
/// every radius is back at its disjoint value the supports no longer overlap,
/// so the loop is finite.
std::vector<double> select_radii(const ProbeSet& probes, std::span<const double> scales,
                                 double domain_radius, const RadiiMode& mode);

/// V_n(T) * mean (h - f)^2 on the fixed sample set.
double objective(const PatchModel& model, const FitSamples& samples);
double objective(const PatchModel& model, const Oracle& oracle, std::size_t nsamples,
                 std::uint64_t seed);

/// d L / d w_i = 2 int (h - f) g'_i; pair weights follow the first-order ones.
Eigen::VectorXd objective_gradient(const PatchModel& model, const FitSamples& samples);
Eigen::VectorXd objective_gradient(const PatchModel& model, const Oracle& oracle,
                                   std::size_t nsamples, std::uint64_t seed);

struct FitReport {
  double final_objective = 0.0;
  double penalty = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double learning_rate = 0.0;
  Eigen::VectorXd weights;
  std::vector<PairWeight> pair_weights;
  std::vector<PatchPair> rejected_pairs;
  std::vector<std::string> warnings;
  double nonzero_threshold = 1e-8;
  Eigen::VectorXd gershgorin_margins;
  Eigen::VectorXd margin_std_errors;
  bool gershgorin_ok = false;
  double hessian_min_eigenvalue = 0.0;
  double hessian_max_std_error = 0.0;
  std::uint64_t query_count = 0;
  /// Penalized objective after each iteration, starting with the initial point.
  std::vector<double> objective_trace;

  std::size_t nonzero_count(double threshold) const;
  std::size_t nonzero_count() const { return nonzero_count(nonzero_threshold); }
  std::size_t nonzero_pair_count(double threshold) const;
  std::size_t nonzero_pair_count() const { return nonzero_pair_count(nonzero_threshold); }
};

/// Gradient descent on the fixed-sample objective from w = 0. l2 adds
/// 2 lambda w to the gradient; l1 soft-thresholds by lambda * step after each
/// step. Throws DivergenceError if the objective grows 50 iterations in a row.
FitReport fit_weights(std::span<const LocalPatch> patches, const Oracle& oracle,
                      const FitConfig& config);

/// Joint fit of (w, w') with pair features g'_i g'_j. Pairs whose balls do not
/// overlap are dropped with a warning; an empty pair set reproduces fit_weights.
/// The joint descent starts from the first-order solution with w' = 0, and the
/// reported iteration count covers both stages.
FitReport fit_second_order(std::span<const LocalPatch> patches, const Oracle& oracle,
                           const FitConfig& config, std::span<const PatchPair> pair_set);

/// Exact minimizer of the fixed-sample objective: (G^T G + ridge I) w = G^T f.
Eigen::VectorXd solve_normal_equations(std::span<const LocalPatch> patches,
                                       const Oracle& oracle, std::size_t nsamples,
                                       std::uint64_t seed, double ridge,
                                       std::span<const PatchPair> pairs = {});

/// All (i, j), i < j, whose balls overlap in more than a point.
std::vector<PatchPair> overlapping_pairs(std::span<const LocalPatch> patches);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double max_eigenvalue(const Eigen::MatrixXd& h, std::size_t max_iters = 1000,
                      double tol = 1e-12);

PatchModel make_model(std::span<const LocalPatch> patches, const FitReport& report);

nlohmann::json config_to_json(const FitConfig& config);
FitConfig config_from_json(const nlohmann::json& doc);
nlohmann::json report_to_json(const FitReport& report);
FitReport report_from_json(const nlohmann::json& doc);

std::string to_string(RegKind kind);
RegKind parse_reg_kind(const std::string& text);

}  // namespace relurecon
