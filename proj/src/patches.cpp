#include "relurecon/patches.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relurecon/errors.hpp"

namespace relurecon {

using Eigen::VectorXd;

LocalPatch make_patch(const VectorXd& v, const VectorXd& grad, double value, double scale,
                      double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("patch radius must be positive");
  if (v.size() != grad.size()) throw DimensionError("patch center and gradient differ in size");
  return {v, grad, value - grad.dot(v), scale, radius};
}

double patch_eval(const LocalPatch& patch, const VectorXd& x) {
  if (!patch.contains(x)) return 0.0;
  return patch.scale * (patch.slope.dot(x) + patch.intercept);
}

VectorXd idw_weights(const VectorXd& x, std::span<const VectorXd> centers, double power) {
  if (!(power > 0.0)) throw std::invalid_argument("IDW power must be positive");
  VectorXd w = VectorXd::Zero(static_cast<Eigen::Index>(centers.size()));
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = (x - centers[i]).norm();
    if (d == 0.0) {
      w.setZero();
      w[static_cast<Eigen::Index>(i)] = 1.0;
      return w;
    }
    w[static_cast<Eigen::Index>(i)] = std::pow(d, -power);
  }
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

int PatchModel::input_dim() const {
  return patches.empty() ? 0 : static_cast<int>(patches.front().center.size());
}

void PatchModel::validate() const {
  if (weights.size() != static_cast<Eigen::Index>(patches.size())) {
    throw DimensionError("model has " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(patches.size()) + " patches");
  }
  const int n = input_dim();
  for (const auto& p : patches) {
    if (p.center.size() != n || p.slope.size() != n) {
      throw DimensionError("patches differ in dimension");
    }
    if (!(p.radius > 0.0)) throw SchemaError("patch radius must be positive");
  }
  for (const auto& pw : pair_weights) {
    if (!(pw.i < pw.j) || pw.j >= patches.size()) {
      throw SchemaError("pair weight keys must satisfy i < j < patch count");
    }
  }
}

double model_eval(const PatchModel& model, const VectorXd& x) {
  const auto& patches = model.patches;
  if (model.mode == WeightingMode::idw) {
    std::vector<VectorXd> centers;
    std::vector<double> values;
    for (const auto& p : patches) {
      if (p.contains(x)) {
        centers.push_back(p.center);
        values.push_back(patch_eval(p, x));
      }
    }
    if (centers.empty()) return 0.0;
    const VectorXd w = idw_weights(x, centers, model.idw_power);
    return w.dot(Eigen::Map<const VectorXd>(values.data(), values.size()));
  }

  std::vector<double> g(patches.size());
  double total = 0.0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    g[i] = patch_eval(patches[i], x);
    total += model.weights[static_cast<Eigen::Index>(i)] * g[i];
  }
  for (const auto& pw : model.pair_weights) total += pw.value * g[pw.i] * g[pw.j];
  return total;
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

Clustering dedupe_hyperplanes(const ProbeSet& probes, double angle_tol, double offset_tol) {
  if (!(angle_tol > 0.0) || !(offset_tol > 0.0)) {
    throw std::invalid_argument("dedupe tolerances must be positive");
  }
  const std::size_t count = probes.size();
  std::vector<VectorXd> normals;
  std::vector<double> offsets;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& grad = probes.gradients[i];
    VectorXd normal(grad.size() + 1);
    normal << grad, -1.0;
    const double norm = normal.norm();
    normals.push_back(normal / norm);
    offsets.push_back(-(probes.values[i] - grad.dot(probes.points[i])) / norm);
  }

  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      const double cos_t = std::clamp(normals[i].dot(normals[j]), -1.0, 1.0);
      if (std::acos(cos_t) <= angle_tol && std::abs(offsets[i] - offsets[j]) <= offset_tol) {
        parent[find_root(parent, static_cast<int>(i))] = find_root(parent, static_cast<int>(j));
      }
    }
  }

  Clustering out;
  out.labels.assign(count, -1);
  std::vector<int> root_label(count, -1);
  for (std::size_t i = 0; i < count; ++i) {
    const int root = find_root(parent, static_cast<int>(i));
    if (root_label[root] < 0) root_label[root] = out.count++;
    out.labels[i] = root_label[root];
  }
  return out;
}

std::vector<LocalPatch> build_patches(const ProbeSet& probes, std::span<const double> scales,
                                      std::span<const double> radii) {
  if (scales.size() != probes.size() || radii.size() != probes.size()) {
    throw DimensionError("need one scale and one radius per probe");
  }
  std::vector<LocalPatch> patches;
  patches.reserve(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    patches.push_back(make_patch(probes.points[i], probes.gradients[i], probes.values[i],
                                 scales[i], radii[i]));
  }
  return patches;
}

nlohmann::json patch_to_json(const LocalPatch& patch) {
  return {{"v", std::vector<double>(patch.center.begin(), patch.center.end())},
          {"L", std::vector<double>(patch.slope.begin(), patch.slope.end())},
          {"b", patch.intercept},
          {"c", patch.scale},
          {"r", patch.radius}};
}

LocalPatch patch_from_json(const nlohmann::json& doc) {
  const auto v = doc.at("v").get<std::vector<double>>();
  const auto l = doc.at("L").get<std::vector<double>>();
  if (v.size() != l.size()) throw DimensionError("patch v and L differ in length");
  return {Eigen::Map<const VectorXd>(v.data(), v.size()),
          Eigen::Map<const VectorXd>(l.data(), l.size()), doc.at("b").get<double>(),
          doc.at("c").get<double>(), doc.at("r").get<double>()};
}

nlohmann::json model_to_json(const PatchModel& model) {
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& p : model.patches) patches.push_back(patch_to_json(p));
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pw : model.pair_weights) pairs.push_back({pw.i, pw.j, pw.value});
  nlohmann::json doc = {{"patches", std::move(patches)},
                        {"w", std::vector<double>(model.weights.begin(), model.weights.end())},
                        {"w_pairs", std::move(pairs)}};
  if (model.mode == WeightingMode::idw) {
    doc["weighting"] = {{"mode", "idw"}, {"p", model.idw_power}};
  }
  return doc;
}

PatchModel model_from_json(const nlohmann::json& doc) {
  PatchModel model;
  try {
    for (const auto& p : doc.at("patches")) model.patches.push_back(patch_from_json(p));
    const auto w = doc.at("w").get<std::vector<double>>();
    model.weights = Eigen::Map<const VectorXd>(w.data(), w.size());
    for (const auto& entry : doc.value("w_pairs", nlohmann::json::array())) {
      if (!entry.is_array() || entry.size() != 3) throw SchemaError("w_pairs entries are [i,j,value]");
      model.pair_weights.push_back(
          {entry[0].get<std::size_t>(), entry[1].get<std::size_t>(), entry[2].get<double>()});
    }
    if (doc.contains("weighting")) {
      const auto& weighting = doc["weighting"];
      const auto mode = weighting.at("mode").get<std::string>();
      if (mode == "idw") {
        model.mode = WeightingMode::idw;
        model.idw_power = weighting.value("p", 2.0);
      } else if (mode != "scalar") {
        throw SchemaError("unknown weighting mode '" + mode + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model document: ") + e.what());
  }
  model.validate();
  return model;
}

}  // namespace relurecon
