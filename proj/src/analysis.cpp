#include "relurecon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "relurecon/errors.hpp"
#include "relurecon/geometry.hpp"
#include "relurecon/random.hpp"

namespace relurecon {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DistanceEstimate dp_distance(const ScalarField& f, const ScalarField& g, int dim,
                             double domain_radius, double p, std::size_t nsamples,
                             std::uint64_t seed) {
  if (!(p >= 1.0)) throw std::invalid_argument("d_p needs p >= 1");
  if (nsamples < 1) throw std::invalid_argument("need at least one sample");
  Rng rng(seed);
  const VectorXd origin = VectorXd::Zero(dim);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < nsamples; ++k) {
    const VectorXd x = sample_in_ball(rng, origin, domain_radius);
    const double term = std::pow(std::abs(f(x) - g(x)), p);
    sum += term;
    sum_sq += term * term;
  }
  const double m = static_cast<double>(nsamples);
  const double volume = ball_volume(dim, domain_radius);
  const double mean = sum / m;
  const double variance = m > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0)) : 0.0;
  const double integral = volume * mean;
  const double integral_se = volume * std::sqrt(variance / m);

  DistanceEstimate out{std::pow(integral, 1.0 / p), 0.0, p, nsamples, seed};
  if (integral > 0.0) out.std_error = out.value / (p * integral) * integral_se;
  return out;
}

std::size_t count_regions(const ReluNetwork& net, double domain_radius, std::size_t nsamples,
                          std::uint64_t seed) {
  Rng rng(seed);
  const VectorXd origin = VectorXd::Zero(net.input_dim());
  std::set<std::string> patterns;
  for (std::size_t k = 0; k < nsamples; ++k) {
    patterns.insert(activation_pattern(net, sample_in_ball(rng, origin, domain_radius)));
  }
  return patterns.size();
}

std::string to_string(BendOutcome outcome) {
  switch (outcome) {
    case BendOutcome::z_bends:
      return "z_bends";
    case BendOutcome::z2_bends:
      return "z2_bends";
    case BendOutcome::both:
      return "both";
    case BendOutcome::neither:
      break;
  }
  return "neither";
}

namespace {

using Field = std::function<double(const VectorXd&)>;

VectorXd central_gradient(const Field& field, const VectorXd& x, double step) {
  VectorXd grad(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = field(probe);
    probe[i] = x[i] - step;
    const double down = field(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// Unit direction along which `field` changes sign across its zero set at x.
VectorXd crossing_direction(const Field& field, const VectorXd& x, double eps, Rng& rng) {
  const int dim = static_cast<int>(x.size());
  for (int attempt = 0; attempt < 64; ++attempt) {
    const VectorXd base = x + 0.1 * eps * random_unit_vector(rng, dim);
    const VectorXd grad = central_gradient(field, base, 1e-3 * eps);
    const double norm = grad.norm();
    if (norm == 0.0) continue;
    const VectorXd dir = grad / norm;
    if (field(x + 0.5 * eps * dir) > 0.0 && field(x - 0.5 * eps * dir) < 0.0) return dir;
  }
  throw Error("could not find a direction crossing the neuron boundary");
}

// Traces the zero set of `field` on the side `side` of the zero set of `other`
// and returns the unit normal of a plane fitted through the traced points,
// oriented along the gradient of `field`.
VectorXd traced_normal(const Field& field, const Field& other, const VectorXd& x_star,
                       const VectorXd& across, double side, double eps,
                       const BendProbe& probe, Rng& rng) {
  const int dim = static_cast<int>(x_star.size());
  const VectorXd center = x_star + side * 0.5 * eps * across;
  const VectorXd grad = central_gradient(field, center, 1e-3 * eps);
  if (grad.norm() == 0.0) throw Error("neuron pre-activation is flat near the intersection");
  const VectorXd dir = grad.normalized();

  std::vector<VectorXd> traced;
  const int wanted = dim + 2;
  for (int attempt = 0; attempt < 50 * wanted && static_cast<int>(traced.size()) < wanted;
       ++attempt) {
    const VectorXd start = center + 0.25 * eps * random_unit_vector(rng, dim);
    VectorXd lo = start - eps * dir;
    VectorXd hi = start + eps * dir;
    double f_lo = field(lo);
    if ((f_lo > 0.0) == (field(hi) > 0.0)) continue;
    while ((hi - lo).norm() > probe.bisect_tol) {
      const VectorXd mid = 0.5 * (lo + hi);
      const double f_mid = field(mid);
      if ((f_mid > 0.0) == (f_lo > 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    const VectorXd zero = 0.5 * (lo + hi);
    if (side * other(zero) <= 0.0 || (zero - x_star).norm() > 2.0 * eps) continue;
    traced.push_back(zero);
  }
  if (static_cast<int>(traced.size()) < dim) {
    throw Error("zero-set tracing found too few points near the intersection");
  }

  VectorXd mean = VectorXd::Zero(dim);
  for (const auto& q : traced) mean += q;
  mean /= static_cast<double>(traced.size());
  MatrixXd centered(static_cast<Eigen::Index>(traced.size()), dim);
  for (std::size_t k = 0; k < traced.size(); ++k) {
    centered.row(static_cast<Eigen::Index>(k)) = (traced[k] - mean).transpose();
  }
  const Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeFullV);
  VectorXd normal = svd.matrixV().col(dim - 1);
  if (normal.dot(dir) < 0.0) normal = -normal;
  return normal;
}

double normal_change(const VectorXd& a, const VectorXd& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

}  // namespace

BendOutcome classify_intersection(const ReluNetwork& net, NeuronId z, NeuronId z2,
                                  const VectorXd& x_star, double eps, const BendProbe& probe) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const Field fz = [&](const VectorXd& x) { return preactivation(net, z, x); };
  const Field fz2 = [&](const VectorXd& x) { return preactivation(net, z2, x); };

  for (const Field* field : {&fz, &fz2}) {
    const VectorXd grad = central_gradient(*field, x_star, 1e-3 * eps);
    const double norm = grad.norm();
    if (norm == 0.0 || std::abs((*field)(x_star)) / norm > probe.near_tol) {
      throw std::invalid_argument("x_star is not on both neuron boundaries");
    }
  }
  if (x_star.size() < 2) return BendOutcome::neither;

  Rng rng(probe.seed);
  const VectorXd across_z = crossing_direction(fz, x_star, eps, rng);
  const VectorXd across_z2 = crossing_direction(fz2, x_star, eps, rng);

  const bool z_bends =
      normal_change(traced_normal(fz, fz2, x_star, across_z2, +1.0, eps, probe, rng),
                    traced_normal(fz, fz2, x_star, across_z2, -1.0, eps, probe, rng)) >
      probe.angle_tol;
  const bool z2_bends =
      normal_change(traced_normal(fz2, fz, x_star, across_z, +1.0, eps, probe, rng),
                    traced_normal(fz2, fz, x_star, across_z, -1.0, eps, probe, rng)) >
      probe.angle_tol;

  if (z_bends && z2_bends) return BendOutcome::both;
  if (z_bends) return BendOutcome::z_bends;
  if (z2_bends) return BendOutcome::z2_bends;
  return BendOutcome::neither;
}

ConjectureReport conjecture_report(const FitReport& fit, const ReluNetwork& net,
                                   std::span<const double> lambda_grid, const Refit& rerun,
                                   double domain_radius, std::size_t region_samples,
                                   std::uint64_t seed) {
  ConjectureReport report;
  report.patch_count = static_cast<std::size_t>(fit.weights.size());
  report.nonzero_threshold = fit.nonzero_threshold;
  report.nonzero_weights = fit.nonzero_count();
  report.nonzero_pairs = fit.nonzero_pair_count();
  report.first_layer_width = net.architecture().widths.at(1);
  report.empirical_region_count = count_regions(net, domain_radius, region_samples, seed);
  for (double lambda : lambda_grid) {
    const FitReport refit = rerun(lambda);
    report.lambda_grid.push_back({lambda, refit.nonzero_count(fit.nonzero_threshold),
                                  refit.nonzero_pair_count(fit.nonzero_threshold),
                                  refit.final_objective + refit.penalty, refit.converged});
  }
  return report;
}

nlohmann::json distance_to_json(const DistanceEstimate& d) {
  return {{"value", d.value},
          {"std_error", d.std_error},
          {"p", d.p},
          {"nsamples", d.nsamples},
          {"seed", d.seed}};
}

nlohmann::json conjecture_to_json(const ConjectureReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.lambda_grid) {
    rows.push_back({{"lambda", row.lambda},
                    {"nonzero", row.nonzero},
                    {"nonzero_pairs", row.nonzero_pairs},
                    {"objective", row.objective},
                    {"converged", row.converged}});
  }
  return {{"patch_count", report.patch_count},
          {"nonzero_weights", report.nonzero_weights},
          {"first_layer_width", report.first_layer_width},
          {"nonzero_pairs", report.nonzero_pairs},
          {"empirical_region_count", report.empirical_region_count},
          {"nonzero_threshold", report.nonzero_threshold},
          {"lambda_grid", std::move(rows)}};
}

ConjectureReport conjecture_from_json(const nlohmann::json& doc) {
  ConjectureReport report;
  try {
    report.patch_count = doc.at("patch_count").get<std::size_t>();
    report.nonzero_weights = doc.at("nonzero_weights").get<std::size_t>();
    report.first_layer_width = doc.at("first_layer_width").get<int>();
    report.nonzero_pairs = doc.at("nonzero_pairs").get<std::size_t>();
    report.empirical_region_count = doc.at("empirical_region_count").get<std::size_t>();
    report.nonzero_threshold = doc.value("nonzero_threshold", 1e-8);
    for (const auto& row : doc.at("lambda_grid")) {
      report.lambda_grid.push_back({row.at("lambda").get<double>(),
                                    row.at("nonzero").get<std::size_t>(),
                                    row.value("nonzero_pairs", std::size_t{0}),
                                    row.value("objective", 0.0), row.value("converged", false)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("conjecture report: ") + e.what());
  }
  return report;
}

}  // namespace relurecon
