#include "relurecon/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "relurecon/errors.hpp"
#include "relurecon/random.hpp"

namespace relurecon {

using Eigen::MatrixXd;
using Eigen::SparseMatrix;
using Eigen::VectorXd;

void FitConfig::validate() const {
  if (learning_rate && !(*learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(grad_tol > 0.0)) throw std::invalid_argument("gradient tolerance must be positive");
  if (!(reg.lambda >= 0.0)) throw std::invalid_argument("regularization strength must be >= 0");
  if (mc_samples < 1) throw std::invalid_argument("need at least one Monte Carlo sample");
  if (!(nonzero_threshold >= 0.0)) throw std::invalid_argument("nonzero threshold must be >= 0");
}

std::vector<VectorXd> domain_samples(int dim, double domain_radius, std::size_t nsamples,
                                     std::uint64_t seed) {
  Rng rng(seed);
  const VectorXd origin = VectorXd::Zero(dim);
  std::vector<VectorXd> points;
  points.reserve(nsamples);
  for (std::size_t k = 0; k < nsamples; ++k) {
    points.push_back(sample_in_ball(rng, origin, domain_radius));
  }
  return points;
}

FitSamples draw_fit_samples(const Oracle& oracle, std::size_t nsamples, std::uint64_t seed) {
  if (nsamples < 1) throw std::invalid_argument("need at least one sample");
  FitSamples samples;
  samples.points =
      domain_samples(oracle.input_dim(), oracle.domain_radius(), nsamples, seed);
  samples.values.resize(static_cast<Eigen::Index>(nsamples));
  for (std::size_t k = 0; k < nsamples; ++k) {
    samples.values[static_cast<Eigen::Index>(k)] = oracle.query(samples.points[k]);
  }
  samples.volume = ball_volume(oracle.input_dim(), oracle.domain_radius());
  return samples;
}

SparseMatrix<double> design_matrix(std::span<const LocalPatch> patches,
                                   std::span<const PatchPair> pairs,
                                   std::span<const VectorXd> points) {
  const std::size_t npatch = patches.size();
  std::vector<std::vector<std::size_t>> pairs_from(npatch);
  for (std::size_t p = 0; p < pairs.size(); ++p) pairs_from[pairs[p].first].push_back(p);

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> value(npatch, 0.0);
  std::vector<char> active(npatch, 0);
  std::vector<std::size_t> hits;
  for (std::size_t row = 0; row < points.size(); ++row) {
    const auto& x = points[row];
    hits.clear();
    for (std::size_t i = 0; i < npatch; ++i) {
      if (!patches[i].contains(x)) continue;
      value[i] = patches[i].scale * (patches[i].slope.dot(x) + patches[i].intercept);
      active[i] = 1;
      hits.push_back(i);
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(i), value[i]);
    }
    for (std::size_t i : hits) {
      for (std::size_t p : pairs_from[i]) {
        const std::size_t j = pairs[p].second;
        if (active[j]) {
          triplets.emplace_back(static_cast<int>(row), static_cast<int>(npatch + p),
                                value[i] * value[j]);
        }
      }
    }
    for (std::size_t i : hits) active[i] = 0;
  }
  SparseMatrix<double> g(static_cast<Eigen::Index>(points.size()),
                         static_cast<Eigen::Index>(npatch + pairs.size()));
  g.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

HessianEstimate gram_hessian(const SparseMatrix<double>& design, double volume) {
  const double m = static_cast<double>(design.rows());
  const SparseMatrix<double> gram = design.transpose() * design;
  const SparseMatrix<double> squared = design.cwiseProduct(design);
  const SparseMatrix<double> fourth = squared.transpose() * squared;
  const MatrixXd first = MatrixXd(gram) / m;
  const MatrixXd second = MatrixXd(fourth) / m;
  MatrixXd variance = (second - first.cwiseProduct(first)).cwiseMax(0.0);
  if (m > 1) variance *= m / (m - 1.0);
  return {2.0 * volume * first, 2.0 * volume * (variance / m).cwiseSqrt()};
}

HessianEstimate hessian(std::span<const LocalPatch> patches, double domain_radius,
                        const HessianEstimator& estimator) {
  if (patches.empty()) throw std::invalid_argument("hessian needs at least one patch");
  const auto count = static_cast<Eigen::Index>(patches.size());
  const int dim = static_cast<int>(patches.front().center.size());

  if (estimator.method == HessianEstimator::Method::closed_form_disjoint) {
    constexpr double kSlack = 1e-12;
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto& p = patches[i];
      if (p.center.norm() + p.radius > domain_radius * (1.0 + kSlack)) {
        throw std::invalid_argument("closed-form Hessian: patch ball leaves B_T(0)");
      }
      for (Eigen::Index j = i + 1; j < count; ++j) {
        const auto& q = patches[j];
        if ((p.center - q.center).norm() < (p.radius + q.radius) * (1.0 - kSlack)) {
          throw std::invalid_argument("closed-form Hessian: patch balls overlap");
        }
      }
    }
    HessianEstimate out{MatrixXd::Zero(count, count), MatrixXd::Zero(count, count)};
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto plane = patches[i].scaled_plane();
      out.value(i, i) = 2.0 * ball_product_integral(plane, plane, patches[i].support());
    }
    return out;
  }

  const auto points = domain_samples(dim, domain_radius, estimator.nsamples, estimator.seed);
  return gram_hessian(design_matrix(patches, {}, points), ball_volume(dim, domain_radius));
}

GershgorinResult gershgorin_check(const MatrixXd& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("Gershgorin check needs a square matrix");
  GershgorinResult out{true, VectorXd(h.rows())};
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double off = h.row(i).cwiseAbs().sum() - std::abs(h(i, i));
    out.margins[i] = h(i, i) - off;
    if (out.margins[i] < 0.0 || h(i, i) < 0.0) out.ok = false;
  }
  return out;
}

std::vector<double> select_radii(const ProbeSet& probes, std::span<const double> scales,
                                 double domain_radius, const RadiiMode& mode) {
  const std::size_t count = probes.size();
  if (count < 1) throw std::invalid_argument("select_radii needs at least one probe");
  if (scales.size() != count) throw DimensionError("need one scale per probe");

  std::vector<double> room(count);
  std::vector<double> disjoint(count);
  for (std::size_t i = 0; i < count; ++i) {
    room[i] = domain_radius - probes.points[i].norm();
    if (!(room[i] > 0.0)) throw DomainError("probe point lies on or outside the domain boundary");
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
      if (j == i) continue;
      const double d = (probes.points[i] - probes.points[j]).norm();
      if (d == 0.0) throw std::invalid_argument("duplicate probe points");
      nearest = std::min(nearest, d);
    }
    disjoint[i] = std::min(0.5 * nearest, room[i]);
  }
  if (mode.kind == RadiiMode::Kind::disjoint) return disjoint;

  if (!(mode.shrink > 0.0 && mode.shrink < 1.0)) {
    throw std::invalid_argument("shrink factor must lie in (0, 1)");
  }
  std::vector<double> radii(count);
  for (std::size_t i = 0; i < count; ++i) radii[i] = std::min(2.0 * disjoint[i], room[i]);

  const int dim = static_cast<int>(probes.points.front().size());
  const auto points = domain_samples(dim, domain_radius, mode.nsamples, mode.seed);
  const double volume = ball_volume(dim, domain_radius);
  for (;;) {
    const auto patches = build_patches(probes, scales, radii);
    const auto h = gram_hessian(design_matrix(patches, {}, points), volume);
    if (gershgorin_check(h.value).ok) return radii;
    for (double& r : radii) r *= mode.shrink;
  }
}

namespace {

// L(w) = (V/M) |G w - f|^2 on a fixed sample set, kept with its normal-form
// pieces H = 2V/M G^T G and q = 2V/M G^T f so that grad L = H w - q.
struct SampledProblem {
  SparseMatrix<double> design;
  VectorXd values;
  double volume = 0.0;
  HessianEstimate hessian;
  VectorXd linear;

  double constant = 0.0;  // (V/M) |f|^2

  double scale() const { return volume / static_cast<double>(design.rows()); }
  double data_objective(const VectorXd& w) const {
    return scale() * (design * w - values).squaredNorm();
  }
  // Same value through the normal form; cheap enough for every iteration.
  double quadratic_objective(const VectorXd& w) const {
    return 0.5 * w.dot(hessian.value * w) - linear.dot(w) + constant;
  }
};

SampledProblem build_problem(std::span<const LocalPatch> patches,
                             std::span<const PatchPair> pairs, const FitSamples& samples) {
  SampledProblem problem;
  problem.design = design_matrix(patches, pairs, samples.points);
  problem.values = samples.values;
  problem.volume = samples.volume;
  problem.hessian = gram_hessian(problem.design, samples.volume);
  problem.linear = 2.0 * problem.scale() * (problem.design.transpose() * samples.values);
  problem.constant = problem.scale() * samples.values.squaredNorm();
  return problem;
}

double penalty(const Regularizer& reg, const VectorXd& w) {
  switch (reg.kind) {
    case RegKind::l1:
      return reg.lambda * w.lpNorm<1>();
    case RegKind::l2:
      return reg.lambda * w.squaredNorm();
    case RegKind::none:
      break;
  }
  return 0.0;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

std::vector<PatchPair> checked_pairs(std::span<const LocalPatch> patches,
                                     std::span<const PatchPair> requested,
                                     std::vector<PatchPair>& rejected,
                                     std::vector<std::string>& warnings) {
  std::vector<PatchPair> kept;
  for (auto [i, j] : requested) {
    if (i > j) std::swap(i, j);
    if (i == j || j >= patches.size()) {
      throw std::invalid_argument("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") is not a pair of distinct patches");
    }
    if (std::find(kept.begin(), kept.end(), PatchPair{i, j}) != kept.end()) continue;
    const auto& p = patches[i];
    const auto& q = patches[j];
    if ((p.center - q.center).norm() >= p.radius + q.radius) {
      rejected.emplace_back(i, j);
      warnings.push_back("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") has disjoint supports; feature is identically zero");
      continue;
    }
    kept.emplace_back(i, j);
  }
  return kept;
}

FitReport run_descent(std::span<const LocalPatch> patches, const Oracle& oracle,
                      const FitConfig& config, std::vector<PatchPair> pairs,
                      std::vector<PatchPair> rejected, std::vector<std::string> warnings,
                      const VectorXd* start = nullptr) {
  config.validate();
  if (patches.empty()) throw std::invalid_argument("fit needs at least one patch");
  const FitSamples samples = draw_fit_samples(oracle, config.mc_samples, config.seed);
  const SampledProblem problem = build_problem(patches, pairs, samples);
  const MatrixXd& h = problem.hessian.value;
  const auto unknowns = h.rows();

  FitReport report;
  report.nonzero_threshold = config.nonzero_threshold;
  report.rejected_pairs = std::move(rejected);
  report.warnings = std::move(warnings);

  const Regularizer& reg = config.reg;
  // Curvature of the smooth part: H, plus 2 lambda I under l2.
  const double lambda_max =
      max_eigenvalue(h) + (reg.kind == RegKind::l2 ? 2.0 * reg.lambda : 0.0);
  const double lr = config.learning_rate.value_or(
      lambda_max > 0.0 ? 1.0 / (lambda_max * (1.0 + 1e-9)) : 1.0);
  report.learning_rate = lr;

  VectorXd w = VectorXd::Zero(unknowns);
  if (start) w.head(start->size()) = *start;
  double previous = problem.quadratic_objective(w) + penalty(reg, w);
  report.objective_trace.push_back(previous);
  int growth_streak = 0;
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    VectorXd grad = h * w - problem.linear;
    if (reg.kind == RegKind::l2) grad += 2.0 * reg.lambda * w;
    VectorXd next = w - lr * grad;
    if (reg.kind == RegKind::l1) {
      const double t = reg.lambda * lr;
      for (Eigen::Index k = 0; k < unknowns; ++k) next[k] = soft_threshold(next[k], t);
    }
    // Gradient mapping; equals the (smooth) gradient when there is no prox step.
    const double mapping = (w - next).norm() / lr;
    w = std::move(next);
    report.iterations = it;

    const double current = problem.quadratic_objective(w) + penalty(reg, w);
    report.objective_trace.push_back(current);
    if (!std::isfinite(current) ||
        current > previous + 1e-12 * (std::abs(previous) + 1.0)) {
      if (++growth_streak >= 50 || !std::isfinite(current)) {
        std::ostringstream msg;
        msg << "gradient descent diverged at iteration " << it << ": objective " << current
            << ", learning rate " << lr << ", lambda_max " << lambda_max;
        throw DivergenceError(msg.str());
      }
    } else {
      growth_streak = 0;
    }
    previous = current;
    if (mapping <= config.grad_tol) {
      report.converged = true;
      break;
    }
  }

  const auto npatch = static_cast<Eigen::Index>(patches.size());
  report.weights = w.head(npatch);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    report.pair_weights.push_back(
        {pairs[p].first, pairs[p].second, w[npatch + static_cast<Eigen::Index>(p)]});
  }
  report.final_objective = problem.data_objective(w);
  report.penalty = penalty(reg, w);

  // Margins cover the first-order block; the stacked problem is summarized by
  // its smallest eigenvalue.
  const auto check = gershgorin_check(h.topLeftCorner(npatch, npatch));
  report.gershgorin_ok = check.ok;
  report.gershgorin_margins = check.margins;
  report.margin_std_errors =
      problem.hessian.std_error.topLeftCorner(npatch, npatch).rowwise().norm();
  report.hessian_max_std_error = problem.hessian.max_std_error();
  report.hessian_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues()[0];
  report.query_count = oracle.query_count();
  return report;
}

}  // namespace

double objective(const PatchModel& model, const FitSamples& samples) {
  double total = 0.0;
  for (std::size_t k = 0; k < samples.points.size(); ++k) {
    const double r = model_eval(model, samples.points[k]) -
                     samples.values[static_cast<Eigen::Index>(k)];
    total += r * r;
  }
  return samples.volume * total / static_cast<double>(samples.points.size());
}

double objective(const PatchModel& model, const Oracle& oracle, std::size_t nsamples,
                 std::uint64_t seed) {
  return objective(model, draw_fit_samples(oracle, nsamples, seed));
}

VectorXd objective_gradient(const PatchModel& model, const FitSamples& samples) {
  if (model.mode != WeightingMode::scalar) {
    throw std::invalid_argument("objective gradient is defined for scalar weights only");
  }
  std::vector<PatchPair> pairs;
  for (const auto& pw : model.pair_weights) pairs.emplace_back(pw.i, pw.j);
  const auto design = design_matrix(model.patches, pairs, samples.points);
  VectorXd residual(static_cast<Eigen::Index>(samples.points.size()));
  for (std::size_t k = 0; k < samples.points.size(); ++k) {
    residual[static_cast<Eigen::Index>(k)] =
        model_eval(model, samples.points[k]) - samples.values[static_cast<Eigen::Index>(k)];
  }
  return (2.0 * samples.volume / static_cast<double>(samples.points.size())) *
         (design.transpose() * residual);
}

VectorXd objective_gradient(const PatchModel& model, const Oracle& oracle,
                            std::size_t nsamples, std::uint64_t seed) {
  return objective_gradient(model, draw_fit_samples(oracle, nsamples, seed));
}

FitReport fit_weights(std::span<const LocalPatch> patches, const Oracle& oracle,
                      const FitConfig& config) {
  return run_descent(patches, oracle, config, {}, {}, {});
}

FitReport fit_second_order(std::span<const LocalPatch> patches, const Oracle& oracle,
                           const FitConfig& config, std::span<const PatchPair> pair_set) {
  std::vector<PatchPair> rejected;
  std::vector<std::string> warnings;
  auto pairs = checked_pairs(patches, pair_set, rejected, warnings);
  FitReport first = fit_weights(patches, oracle, config);
  if (pairs.empty()) {
    first.rejected_pairs = std::move(rejected);
    first.warnings = std::move(warnings);
    return first;
  }
  // Pair features are badly conditioned next to the patch features, so the
  // joint descent starts from the first-order optimum with w' = 0. That point
  // is feasible for the nested problem and descent never leaves it worse off.
  FitReport joint = run_descent(patches, oracle, config, std::move(pairs), std::move(rejected),
                                std::move(warnings), &first.weights);
  joint.iterations += first.iterations;
  return joint;
}

VectorXd solve_normal_equations(std::span<const LocalPatch> patches, const Oracle& oracle,
                                std::size_t nsamples, std::uint64_t seed, double ridge,
                                std::span<const PatchPair> pairs) {
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
  const FitSamples samples = draw_fit_samples(oracle, nsamples, seed);
  const auto design = design_matrix(patches, pairs, samples.points);
  MatrixXd normal = MatrixXd(design.transpose() * design);
  normal.diagonal().array() += ridge;
  const VectorXd rhs = design.transpose() * samples.values;

  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(eig.eigenvalues()[0] > 1e-12 * top)) {
    std::ostringstream msg;
    msg << "normal equations are singular (eigenvalues " << eig.eigenvalues()[0] << " .. "
        << eig.eigenvalues()[eig.eigenvalues().size() - 1] << ")";
    throw SingularSystemError(msg.str());
  }
  return normal.ldlt().solve(rhs);
}

std::vector<PatchPair> overlapping_pairs(std::span<const LocalPatch> patches) {
  std::vector<PatchPair> pairs;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (std::size_t j = i + 1; j < patches.size(); ++j) {
      if ((patches[i].center - patches[j].center).norm() <
          patches[i].radius + patches[j].radius) {
        pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

double max_eigenvalue(const MatrixXd& h, std::size_t max_iters, double tol) {
  if (h.rows() == 0) return 0.0;
  Rng rng(0x5eed);
  VectorXd v = random_unit_vector(rng, static_cast<int>(h.rows()));
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const VectorXd hv = h * v;
    const double norm = hv.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(hv);
    v = hv / norm;
    if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

std::size_t FitReport::nonzero_count(double threshold) const {
  return static_cast<std::size_t>((weights.array().abs() > threshold).count());
}

std::size_t FitReport::nonzero_pair_count(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(pair_weights.begin(), pair_weights.end(),
                    [threshold](const PairWeight& pw) { return std::abs(pw.value) > threshold; }));
}

PatchModel make_model(std::span<const LocalPatch> patches, const FitReport& report) {
  PatchModel model;
  model.patches.assign(patches.begin(), patches.end());
  model.weights = report.weights;
  model.pair_weights = report.pair_weights;
  model.validate();
  return model;
}

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::l1:
      return "l1";
    case RegKind::l2:
      return "l2";
    case RegKind::none:
      break;
  }
  return "none";
}

RegKind parse_reg_kind(const std::string& text) {
  if (text == "none") return RegKind::none;
  if (text == "l1") return RegKind::l1;
  if (text == "l2") return RegKind::l2;
  throw std::invalid_argument("unknown regularizer '" + text + "'");
}

nlohmann::json config_to_json(const FitConfig& config) {
  nlohmann::json doc = {{"max_iters", config.max_iters},
                        {"grad_tol", config.grad_tol},
                        {"reg", to_string(config.reg.kind)},
                        {"lambda", config.reg.lambda},
                        {"mc_samples", config.mc_samples},
                        {"seed", config.seed},
                        {"nonzero_threshold", config.nonzero_threshold}};
  doc["learning_rate"] =
      config.learning_rate ? nlohmann::json(*config.learning_rate) : nlohmann::json(nullptr);
  return doc;
}

FitConfig config_from_json(const nlohmann::json& doc) {
  FitConfig config;
  try {
    if (doc.contains("learning_rate") && !doc["learning_rate"].is_null()) {
      config.learning_rate = doc["learning_rate"].get<double>();
    }
    config.max_iters = doc.value("max_iters", config.max_iters);
    config.grad_tol = doc.value("grad_tol", config.grad_tol);
    config.reg.kind = parse_reg_kind(doc.value("reg", std::string("none")));
    config.reg.lambda = doc.value("lambda", 0.0);
    config.mc_samples = doc.value("mc_samples", config.mc_samples);
    config.seed = doc.value("seed", config.seed);
    config.nonzero_threshold = doc.value("nonzero_threshold", config.nonzero_threshold);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fit config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("fit config: ") + e.what());
  }
  config.validate();
  return config;
}

namespace {

std::vector<double> to_vector(const VectorXd& v) { return {v.begin(), v.end()}; }

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json report_to_json(const FitReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pw : report.pair_weights) pairs.push_back({pw.i, pw.j, pw.value});
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& [i, j] : report.rejected_pairs) rejected.push_back({i, j});
  return {{"final_objective", report.final_objective},
          {"penalty", report.penalty},
          {"iterations", report.iterations},
          {"converged", report.converged},
          {"learning_rate", report.learning_rate},
          {"weights", to_vector(report.weights)},
          {"pair_weights", std::move(pairs)},
          {"rejected_pairs", std::move(rejected)},
          {"warnings", report.warnings},
          {"nonzero_threshold", report.nonzero_threshold},
          {"nonzero_count", report.nonzero_count()},
          {"nonzero_pair_count", report.nonzero_pair_count()},
          {"gershgorin_margins", to_vector(report.gershgorin_margins)},
          {"margin_std_errors", to_vector(report.margin_std_errors)},
          {"gershgorin_ok", report.gershgorin_ok},
          {"hessian_min_eigenvalue", report.hessian_min_eigenvalue},
          {"hessian_max_std_error", report.hessian_max_std_error},
          {"query_count", report.query_count}};
}

FitReport report_from_json(const nlohmann::json& doc) {
  FitReport report;
  try {
    report.final_objective = doc.at("final_objective").get<double>();
    report.penalty = doc.value("penalty", 0.0);
    report.iterations = doc.at("iterations").get<std::size_t>();
    report.converged = doc.at("converged").get<bool>();
    report.learning_rate = doc.value("learning_rate", 0.0);
    report.weights = to_eigen(doc.at("weights").get<std::vector<double>>());
    for (const auto& entry : doc.value("pair_weights", nlohmann::json::array())) {
      report.pair_weights.push_back(
          {entry.at(0).get<std::size_t>(), entry.at(1).get<std::size_t>(), entry.at(2).get<double>()});
    }
    for (const auto& entry : doc.value("rejected_pairs", nlohmann::json::array())) {
      report.rejected_pairs.emplace_back(entry.at(0).get<std::size_t>(),
                                         entry.at(1).get<std::size_t>());
    }
    report.warnings = doc.value("warnings", std::vector<std::string>{});
    report.nonzero_threshold = doc.value("nonzero_threshold", 1e-8);
    report.gershgorin_margins = to_eigen(doc.at("gershgorin_margins").get<std::vector<double>>());
    report.margin_std_errors =
        to_eigen(doc.value("margin_std_errors", std::vector<double>{}));
    report.gershgorin_ok = doc.value("gershgorin_ok", false);
    report.hessian_min_eigenvalue = doc.value("hessian_min_eigenvalue", 0.0);
    report.hessian_max_std_error = doc.value("hessian_max_std_error", 0.0);
    report.query_count = doc.value("query_count", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fit report: ") + e.what());
  }
  if (report.gershgorin_margins.size() != report.weights.size()) {
    throw SchemaError("fit report: margins do not match the number of unknowns");
  }
  return report;
}

}  // namespace relurecon
