#include "relurecon/relunet.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "relurecon/errors.hpp"
#include "relurecon/random.hpp"

namespace relurecon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int Architecture::hidden_neurons() const {
  return std::accumulate(widths.begin() + 1, widths.end() - 1, 0);
}

void Architecture::validate() const {
  if (widths.size() < 2) {
    throw std::invalid_argument("architecture needs at least two widths");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("architecture widths must be >= 1");
  }
  if (widths.back() != 1) {
    throw std::invalid_argument("architecture output width must be 1");
  }
}

Architecture parse_architecture(std::string_view text) {
  Architecture arch;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view token = text.substr(pos, comma - pos);
    int value = 0;
    const auto [end, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size() || token.empty()) {
      throw std::invalid_argument("bad architecture string: '" + std::string(text) + "'");
    }
    arch.widths.push_back(value);
    pos = comma + 1;
  }
  arch.validate();
  return arch;
}

std::string format_architecture(const Architecture& arch) {
  std::ostringstream out;
  for (std::size_t i = 0; i < arch.widths.size(); ++i) {
    if (i) out << ',';
    out << arch.widths[i];
  }
  return out.str();
}

ReluNetwork::ReluNetwork(Architecture arch, std::vector<AffineLayer> layers,
                         bool final_activation)
    : arch_(std::move(arch)),
      layers_(std::move(layers)),
      final_activation_(final_activation) {
  arch_.validate();
  if (static_cast<int>(layers_.size()) != arch_.depth()) {
    throw DimensionError("layer count does not match architecture");
  }
  for (int i = 0; i < arch_.depth(); ++i) {
    const auto& layer = layers_[i];
    const int rows = arch_.widths[i + 1];
    const int cols = arch_.widths[i];
    if (layer.W.rows() != rows || layer.W.cols() != cols || layer.b.size() != rows) {
      std::ostringstream msg;
      msg << "layer " << i << ": expected W " << rows << "x" << cols << " and b "
          << rows << ", got W " << layer.W.rows() << "x" << layer.W.cols()
          << " and b " << layer.b.size();
      throw DimensionError(msg.str());
    }
  }
}

namespace {

void check_input(const ReluNetwork& net, const VectorXd& x) {
  if (x.size() != net.input_dim()) {
    throw DimensionError("input has dimension " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace

double ReluNetwork::operator()(const VectorXd& x) const { return eval(*this, x); }

std::size_t param_count(const Architecture& arch) {
  std::size_t total = 0;
  for (std::size_t i = 1; i < arch.widths.size(); ++i) {
    total += static_cast<std::size_t>(arch.widths[i]) *
             static_cast<std::size_t>(arch.widths[i - 1] + 1);
  }
  return total;
}

double eval(const ReluNetwork& net, const VectorXd& x) {
  check_input(net, x);
  const auto& layers = net.layers();
  VectorXd a = x;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    a = (layers[i].W * a + layers[i].b).cwiseMax(0.0);
  }
  const double out = (layers.back().W * a + layers.back().b)[0];
  return net.final_activation() ? std::max(out, 0.0) : out;
}

std::string activation_pattern(const ReluNetwork& net, const VectorXd& x) {
  check_input(net, x);
  const auto& layers = net.layers();
  std::string bits;
  bits.reserve(net.architecture().hidden_neurons());
  VectorXd a = x;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    VectorXd z = layers[i].W * a + layers[i].b;
    for (Eigen::Index k = 0; k < z.size(); ++k) bits.push_back(z[k] > 0.0 ? '1' : '0');
    a = z.cwiseMax(0.0);
  }
  return bits;
}

double preactivation(const ReluNetwork& net, NeuronId neuron, const VectorXd& x) {
  check_input(net, x);
  const auto& layers = net.layers();
  if (neuron.layer < 0 || neuron.layer >= static_cast<int>(layers.size()) ||
      neuron.index < 0 || neuron.index >= layers[neuron.layer].b.size()) {
    throw std::invalid_argument("neuron id out of range");
  }
  VectorXd a = x;
  for (int i = 0; i < neuron.layer; ++i) {
    a = (layers[i].W * a + layers[i].b).cwiseMax(0.0);
  }
  const auto& layer = layers[neuron.layer];
  return layer.W.row(neuron.index).dot(a) + layer.b[neuron.index];
}

VectorXd analytic_gradient(const ReluNetwork& net, const VectorXd& x) {
  check_input(net, x);
  const auto& layers = net.layers();
  // jac holds d(activation of current layer)/dx.
  MatrixXd jac = MatrixXd::Identity(x.size(), x.size());
  VectorXd a = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const VectorXd z = layers[i].W * a + layers[i].b;
    jac = layers[i].W * jac;
    const bool gated = i + 1 < layers.size() || net.final_activation();
    if (!gated) break;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      if (std::abs(z[k]) <= kOnBoundaryTolerance) {
        throw OnBoundaryError("pre-activation of neuron (" + std::to_string(i) + ", " +
                              std::to_string(k) + ") is zero at the query point");
      }
      if (z[k] < 0.0) jac.row(k).setZero();
    }
    a = z.cwiseMax(0.0);
  }
  return jac.row(0).transpose();
}

ReluNetwork random_network(const Architecture& arch, std::uint64_t seed, double scale,
                           bool final_activation) {
  arch.validate();
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<AffineLayer> layers;
  for (int i = 0; i < arch.depth(); ++i) {
    AffineLayer layer{MatrixXd(arch.widths[i + 1], arch.widths[i]),
                      VectorXd(arch.widths[i + 1])};
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b[r] = dist(rng);
    layers.push_back(std::move(layer));
  }
  return ReluNetwork(arch, std::move(layers), final_activation);
}

nlohmann::json network_to_json(const ReluNetwork& net) {
  nlohmann::json doc;
  doc["arch"] = net.architecture().widths;
  doc["final_activation"] = net.final_activation();
  auto& layers = doc["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
      rows.push_back(std::vector<double>(layer.W.row(r).begin(), layer.W.row(r).end()));
    }
    layers.push_back({{"W", rows},
                      {"b", std::vector<double>(layer.b.begin(), layer.b.end())}});
  }
  return doc;
}

ReluNetwork network_from_json(const nlohmann::json& doc) {
  try {
    Architecture arch{doc.at("arch").get<std::vector<int>>()};
    try {
      arch.validate();
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
    const bool final_activation = doc.value("final_activation", false);
    std::vector<AffineLayer> layers;
    for (const auto& entry : doc.at("layers")) {
      const auto rows = entry.at("W").get<std::vector<std::vector<double>>>();
      const auto bias = entry.at("b").get<std::vector<double>>();
      const std::size_t cols = rows.empty() ? 0 : rows.front().size();
      AffineLayer layer{MatrixXd(rows.size(), cols), VectorXd(bias.size())};
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw DimensionError("ragged W matrix");
        for (std::size_t c = 0; c < cols; ++c) layer.W(r, c) = rows[r][c];
      }
      for (std::size_t r = 0; r < bias.size(); ++r) layer.b[r] = bias[r];
      layers.push_back(std::move(layer));
    }
    return ReluNetwork(std::move(arch), std::move(layers), final_activation);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("network document: ") + e.what());
  }
}

std::string save_network(const ReluNetwork& net) {
  return network_to_json(net).dump(2) + "\n";
}

ReluNetwork load_network(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("network document: ") + e.what());
  }
  return network_from_json(doc);
}

}  // namespace relurecon
