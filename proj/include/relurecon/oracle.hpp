#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "relurecon/random.hpp"
#include "relurecon/relunet.hpp"

namespace relurecon {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

/// Query-counted black box over the closed ball B_T(0). The counter is the
/// only mutable state and is safe to bump from several threads.
class Oracle {
 public:
  Oracle(ScalarField target, int input_dim, double domain_radius);
  Oracle(const ReluNetwork& net, double domain_radius);

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  double query(const Eigen::VectorXd& x) const;

  int input_dim() const { return input_dim_; }
  double domain_radius() const { return radius_; }
  std::uint64_t query_count() const { return count_.load(std::memory_order_relaxed); }

  bool in_domain(const Eigen::VectorXd& x, double margin = 0.0) const;

 private:
  ScalarField target_;
  int input_dim_;
  double radius_;
  mutable std::atomic<std::uint64_t> count_{0};
};

inline double query_value(const Oracle& oracle, const Eigen::VectorXd& x) {
  return oracle.query(x);
}

/// Central differences, 2 n0 queries. Exact (up to rounding) on affine pieces.
Eigen::VectorXd fd_gradient(const Oracle& oracle, const Eigen::VectorXd& x, double h);

/// Compares forward and backward one-sided slopes along `ndirs` random unit
/// directions; costs 2 ndirs + 1 queries.
bool is_smooth_at(const Oracle& oracle, const Eigen::VectorXd& x, double h, double tol,
                  int ndirs, Rng& rng);

struct ProbeParams {
  double fd_step = 1e-5;
  double smooth_step = 1e-5;
  double tol = 1e-3;
  int ndirs = 0;  // 0 selects max(n0, 4)

  int resolved_ndirs(int input_dim) const;
};

struct ProbeSet {
  double domain_radius = 0.0;
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> gradients;
  std::vector<double> values;
  std::size_t rejected = 0;
  std::uint64_t queries = 0;

  std::size_t size() const { return points.size(); }
  void validate() const;
};

/// Draws uniform points until `count` of them pass the smoothness probe;
/// records the gradient and value of each accepted point. Candidates are drawn
/// from the ball shrunk by the probe stencil so every query stays in B_T(0).
ProbeSet sample_points(const Oracle& oracle, std::size_t count, std::uint64_t seed,
                       const ProbeParams& params = {});

nlohmann::json probes_to_json(const ProbeSet& probes);
ProbeSet probes_from_json(const nlohmann::json& doc);

}  // namespace relurecon
