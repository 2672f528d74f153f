#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace relurecon {

/// Layer widths (n0, n1, ..., nm) with a scalar output (nm = 1).
struct Architecture {
  std::vector<int> widths;

  int input_dim() const { return widths.front(); }
  /// Number of affine layers m.
  int depth() const { return static_cast<int>(widths.size()) - 1; }
  int hidden_neurons() const;

  /// Throws std::invalid_argument unless length >= 2, every width >= 1 and
  /// the last width is 1.
  void validate() const;
};

/// Parses "n0,n1,...,1".
Architecture parse_architecture(std::string_view text);
std::string format_architecture(const Architecture& arch);

struct AffineLayer {
  Eigen::MatrixXd W;  // n_i x n_{i-1}
  Eigen::VectorXd b;  // n_i
};

/// Identifies one neuron: `layer` indexes the affine layers from 0 (the first
/// hidden layer), `index` the row within it.
struct NeuronId {
  int layer = 0;
  int index = 0;
};

class ReluNetwork {
 public:
  ReluNetwork(Architecture arch, std::vector<AffineLayer> layers,
              bool final_activation = false);

  const Architecture& architecture() const { return arch_; }
  const std::vector<AffineLayer>& layers() const { return layers_; }
  bool final_activation() const { return final_activation_; }
  int input_dim() const { return arch_.input_dim(); }

  double operator()(const Eigen::VectorXd& x) const;

 private:
  Architecture arch_;
  std::vector<AffineLayer> layers_;
  bool final_activation_;
};

/// D(n0..nm) = sum_i n_i (n_{i-1} + 1).
std::size_t param_count(const Architecture& arch);

double eval(const ReluNetwork& net, const Eigen::VectorXd& x);

/// One '0'/'1' character per hidden neuron, layer by layer; '1' iff the
/// pre-activation is strictly positive.
std::string activation_pattern(const ReluNetwork& net, const Eigen::VectorXd& x);

/// Pre-activation of a single neuron (hidden or output).
double preactivation(const ReluNetwork& net, NeuronId neuron,
                     const Eigen::VectorXd& x);

inline constexpr double kOnBoundaryTolerance = 1e-12;

/// Gradient of the local linear piece at x. Throws OnBoundaryError when any
/// pre-activation that gates the output lies within kOnBoundaryTolerance of 0.
Eigen::VectorXd analytic_gradient(const ReluNetwork& net, const Eigen::VectorXd& x);

/// Weights and biases i.i.d. uniform on [-scale, scale].
ReluNetwork random_network(const Architecture& arch, std::uint64_t seed,
                           double scale, bool final_activation = false);

nlohmann::json network_to_json(const ReluNetwork& net);
ReluNetwork network_from_json(const nlohmann::json& doc);

std::string save_network(const ReluNetwork& net);
ReluNetwork load_network(std::string_view text);

}  // namespace relurecon
