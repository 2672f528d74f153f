#include "relurecon/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "relurecon/errors.hpp"

namespace relurecon {

using Eigen::VectorXd;

namespace {
constexpr double kDomainSlack = 1e-12;
}

Oracle::Oracle(ScalarField target, int input_dim, double domain_radius)
    : target_(std::move(target)), input_dim_(input_dim), radius_(domain_radius) {
  if (!(domain_radius > 0.0)) throw std::invalid_argument("domain radius must be positive");
  if (input_dim < 1) throw std::invalid_argument("input dimension must be >= 1");
}

Oracle::Oracle(const ReluNetwork& net, double domain_radius)
    : Oracle([net](const VectorXd& x) { return eval(net, x); }, net.input_dim(),
             domain_radius) {}

bool Oracle::in_domain(const VectorXd& x, double margin) const {
  return x.norm() + margin <= radius_ * (1.0 + kDomainSlack);
}

double Oracle::query(const VectorXd& x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("oracle query has dimension " + std::to_string(x.size()) +
                         ", expected " + std::to_string(input_dim_));
  }
  if (!in_domain(x)) {
    std::ostringstream msg;
    msg << "query point with norm " << x.norm() << " lies outside B_T(0), T = " << radius_;
    throw DomainError(msg.str());
  }
  count_.fetch_add(1, std::memory_order_relaxed);
  return target_(x);
}

VectorXd fd_gradient(const Oracle& oracle, const VectorXd& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const auto n = x.size();
  if (!oracle.in_domain(x, h * std::sqrt(static_cast<double>(n)))) {
    throw DomainError("finite-difference stencil leaves the domain");
  }
  VectorXd grad(n);
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe[i] = x[i] + h;
    const double up = oracle.query(probe);
    probe[i] = x[i] - h;
    const double down = oracle.query(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

bool is_smooth_at(const Oracle& oracle, const VectorXd& x, double h, double tol, int ndirs,
                  Rng& rng) {
  if (!(h > 0.0) || !(tol > 0.0)) throw std::invalid_argument("h and tol must be positive");
  if (ndirs < x.size()) throw std::invalid_argument("ndirs must be at least n0");
  if (!oracle.in_domain(x, h)) throw DomainError("smoothness probe leaves the domain");

  const double center = oracle.query(x);
  bool smooth = true;
  // Every direction is queried even after a failure so the query cost is
  // always 2 ndirs + 1.
  for (int k = 0; k < ndirs; ++k) {
    const VectorXd u = random_unit_vector(rng, static_cast<int>(x.size()));
    const double forward = (oracle.query(x + h * u) - center) / h;
    const double backward = (center - oracle.query(x - h * u)) / h;
    if (std::abs(forward - backward) > tol) smooth = false;
  }
  return smooth;
}

int ProbeParams::resolved_ndirs(int input_dim) const {
  return ndirs > 0 ? ndirs : std::max(input_dim, 4);
}

void ProbeSet::validate() const {
  if (gradients.size() != points.size() || values.size() != points.size()) {
    throw SchemaError("probe set: points, gradients and values differ in length");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != gradients[i].size() || points[i].size() != points[0].size()) {
      throw DimensionError("probe set: inconsistent vector dimensions");
    }
    if (points[i].norm() > domain_radius * (1.0 + kDomainSlack)) {
      throw DomainError("probe set: point outside B_T(0)");
    }
  }
}

ProbeSet sample_points(const Oracle& oracle, std::size_t count, std::uint64_t seed,
                       const ProbeParams& params) {
  if (count < 1) throw std::invalid_argument("need at least one probe point");
  const int n = oracle.input_dim();
  const int ndirs = params.resolved_ndirs(n);
  const double margin =
      std::max(params.fd_step * std::sqrt(static_cast<double>(n)), params.smooth_step);
  const double radius = oracle.domain_radius() - margin;
  if (!(radius > 0.0)) throw std::invalid_argument("probe steps exceed the domain radius");

  const std::uint64_t start = oracle.query_count();
  Rng rng(seed);
  ProbeSet probes;
  probes.domain_radius = oracle.domain_radius();
  const VectorXd origin = VectorXd::Zero(n);
  while (probes.points.size() < count) {
    VectorXd v = sample_in_ball(rng, origin, radius);
    if (!is_smooth_at(oracle, v, params.smooth_step, params.tol, ndirs, rng)) {
      if (++probes.rejected > 100 * count) {
        throw RejectionBudgetError("rejection budget exceeded after " +
                                   std::to_string(probes.rejected) + " bent points");
      }
      continue;
    }
    probes.gradients.push_back(fd_gradient(oracle, v, params.fd_step));
    probes.values.push_back(oracle.query(v));
    probes.points.push_back(std::move(v));
  }
  probes.queries = oracle.query_count() - start;
  return probes;
}

namespace {

nlohmann::json vectors_to_json(const std::vector<VectorXd>& vs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : vs) out.push_back(std::vector<double>(v.begin(), v.end()));
  return out;
}

std::vector<VectorXd> vectors_from_json(const nlohmann::json& doc) {
  std::vector<VectorXd> out;
  for (const auto& row : doc) {
    const auto values = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<const VectorXd>(values.data(), values.size()));
  }
  return out;
}

}  // namespace

nlohmann::json probes_to_json(const ProbeSet& probes) {
  return {{"T", probes.domain_radius},
          {"points", vectors_to_json(probes.points)},
          {"gradients", vectors_to_json(probes.gradients)},
          {"values", probes.values},
          {"rejected", probes.rejected},
          {"queries", probes.queries}};
}

ProbeSet probes_from_json(const nlohmann::json& doc) {
  ProbeSet probes;
  try {
    probes.domain_radius = doc.at("T").get<double>();
    probes.points = vectors_from_json(doc.at("points"));
    probes.gradients = vectors_from_json(doc.at("gradients"));
    probes.values = doc.at("values").get<std::vector<double>>();
    probes.rejected = doc.value("rejected", std::size_t{0});
    probes.queries = doc.value("queries", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("probe document: ") + e.what());
  }
  probes.validate();
  return probes;
}

}  // namespace relurecon
