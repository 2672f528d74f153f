#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relurecon/geometry.hpp"
#include "relurecon/oracle.hpp"

namespace relurecon {

/// Scaled tangent plane of the target, supported on the closed ball
/// B_radius(center):  x -> scale * (slope^T x + intercept)  inside, 0 outside.
struct LocalPatch {
  Eigen::VectorXd center;
  Eigen::VectorXd slope;
  double intercept = 0.0;
  double scale = 1.0;
  double radius = 1.0;

  bool contains(const Eigen::VectorXd& x) const { return (x - center).norm() <= radius; }
  Ball support() const { return {center, radius}; }
  /// The scaled plane scale * g as an unrestricted affine function.
  AffineFunction scaled_plane() const { return {scale * slope, scale * intercept}; }
};

/// Tangent plane through (v, value): slope = grad, intercept = value - grad^T v.
LocalPatch make_patch(const Eigen::VectorXd& v, const Eigen::VectorXd& grad, double value,
                      double scale, double radius);

double patch_eval(const LocalPatch& patch, const Eigen::VectorXd& x);

/// Normalized inverse-distance weights d^-p / sum d^-p. A query that coincides
/// with a center gets weight 1 there and 0 elsewhere.
Eigen::VectorXd idw_weights(const Eigen::VectorXd& x,
                            std::span<const Eigen::VectorXd> centers, double power);

enum class WeightingMode { scalar, idw };

struct PairWeight {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
};

struct PatchModel {
  std::vector<LocalPatch> patches;
  Eigen::VectorXd weights;
  std::vector<PairWeight> pair_weights;
  WeightingMode mode = WeightingMode::scalar;
  double idw_power = 2.0;

  int input_dim() const;
  void validate() const;
};

/// scalar mode: sum_i w_i g'_i(x) + sum_(i,j) w'_ij g'_i(x) g'_j(x).
/// idw mode: inverse-distance weights over the patches whose ball holds x.
double model_eval(const PatchModel& model, const Eigen::VectorXd& x);

struct Clustering {
  std::vector<int> labels;
  int count = 0;
};

/// Groups probes whose local pieces coincide. Each piece y = L^T x + b is read
/// as the graph hyperplane with normal (L, -1)/|(L, -1)| and offset
/// -b/|(L, -1)|; probes within `angle_tol` (radians) and `offset_tol` of each
/// other are linked and labels are the connected components.
Clustering dedupe_hyperplanes(const ProbeSet& probes, double angle_tol, double offset_tol);

/// Builds one patch per probe with the given per-probe scales and radii.
std::vector<LocalPatch> build_patches(const ProbeSet& probes, std::span<const double> scales,
                                      std::span<const double> radii);

nlohmann::json patch_to_json(const LocalPatch& patch);
LocalPatch patch_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const PatchModel& model);
PatchModel model_from_json(const nlohmann::json& doc);

}  // namespace relurecon
