#include <doctest.h>

#include <cmath>

#include "relurecon/errors.hpp"
#include "relurecon/fit.hpp"

using namespace relurecon;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

struct Instance {
  ReluNetwork net;
  std::unique_ptr<Oracle> oracle;
  ProbeSet probes;
  std::vector<LocalPatch> patches;
};

Instance make_instance(std::uint64_t seed, std::size_t count, const RadiiMode& mode) {
  Instance inst{random_network({{2, 3, 1}}, seed, 1.0), nullptr, {}, {}};
  inst.oracle = std::make_unique<Oracle>(inst.net, 1.0);
  // Probing inside B_0.8 leaves every clipped ball room to collect samples.
  const Oracle interior(inst.net, 0.8);
  inst.probes = sample_points(interior, count, seed + 100);
  inst.probes.domain_radius = 1.0;
  const std::vector<double> scales(count, 1.0);
  const auto radii = select_radii(inst.probes, scales, 1.0, mode);
  inst.patches = build_patches(inst.probes, scales, radii);
  return inst;
}

double min_eigenvalue(const MatrixXd& h) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(h).eigenvalues()[0];
}

constexpr std::size_t kSamples = 20000;

}  // namespace

TEST_CASE("gershgorin_check") {
  const auto identity = gershgorin_check(MatrixXd::Identity(3, 3));
  CHECK(identity.ok);
  CHECK(identity.margins == VectorXd::Ones(3));

  MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  const auto result = gershgorin_check(bad);
  CHECK_FALSE(result.ok);
  CHECK(result.margins == vec({-1, -1}));

  Rng rng(6);
  int passing = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 6;
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = uniform(rng, -1, 1);
      m(i, i) = uniform(rng, 0, 1.5 * n);
    }
    if (!gershgorin_check(m).ok) continue;
    ++passing;
    CHECK(min_eigenvalue(m) >= -1e-12);
  }
  CHECK(passing > 20);
}

TEST_CASE("hessian") {
  const auto p = make_patch(vec({-0.5, 0}), vec({1, 2}), 0.5, 1.0, 0.4);
  const auto q = make_patch(vec({0.5, 0}), vec({-1, 0.5}), -0.3, 2.0, 0.4);
  const std::vector<LocalPatch> disjoint{p, q};

  SUBCASE("disjoint supports: zero off-diagonal, closed form matches Monte Carlo") {
    const auto exact = hessian(disjoint, 1.0, HessianEstimator::closed_form());
    const auto mc = hessian(disjoint, 1.0, HessianEstimator::monte_carlo(200000, 3));
    CHECK(exact.value(0, 1) == 0.0);
    CHECK(mc.value(0, 1) == 0.0);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(exact.value(i, i) - mc.value(i, i)) <= 4 * mc.std_error(i, i));
    }
  }
  SUBCASE("closed form rejects overlapping or escaping balls") {
    auto wide = disjoint;
    wide[0].radius = 0.8;
    CHECK_THROWS_AS(hessian(wide, 1.0, HessianEstimator::closed_form()), std::invalid_argument);
    CHECK_THROWS_AS(hessian(disjoint, 0.5, HessianEstimator::closed_form()), std::invalid_argument);
  }
  SUBCASE("a duplicated patch gives a singular block") {
    const std::vector<LocalPatch> twice{p, p};
    const auto h = hessian(twice, 1.0, HessianEstimator::monte_carlo(50000, 1)).value;
    CHECK(std::abs(h.determinant()) <= 1e-9 * h.squaredNorm());
  }
  SUBCASE("Gram property on overlapping patches") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto inst = make_instance(seed, 12, RadiiMode::disjoint());
      auto patches = inst.patches;
      for (auto& patch : patches) patch.radius *= 3.0;
      const auto h = hessian(patches, 1.0, HessianEstimator::monte_carlo(kSamples, seed));
      CHECK(min_eigenvalue(h.value) >= -3 * h.max_std_error());
    }
  }
}

TEST_CASE("select_radii") {
  ProbeSet two;
  two.domain_radius = 10;
  two.points = {vec({-1, 0}), vec({1, 0})};
  two.gradients = {vec({1, 0}), vec({0, 1})};
  two.values = {1.0, 2.0};
  const std::vector<double> scales{1.0, 1.0};
  CHECK(select_radii(two, scales, 10, RadiiMode::disjoint()) == std::vector<double>{1.0, 1.0});

  ProbeSet one;
  one.domain_radius = 2;
  one.points = {vec({0.5, 0})};
  one.gradients = {vec({1, 0})};
  one.values = {0.0};
  CHECK(select_radii(one, std::vector<double>{1.0}, 2.0, RadiiMode::disjoint())[0] ==
        doctest::Approx(1.5));

  ProbeSet dup = two;
  dup.points[1] = dup.points[0];
  CHECK_THROWS_AS(select_radii(dup, scales, 10, RadiiMode::disjoint()), std::invalid_argument);

  SUBCASE("gershgorin mode output passes the check it was built on") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto mode = RadiiMode::gershgorin(0.8, kSamples, seed);
      const auto inst = make_instance(seed, 15, mode);
      const auto disjoint = select_radii(inst.probes, std::vector<double>(15, 1.0), 1.0,
                                         RadiiMode::disjoint());
      const auto h = hessian(inst.patches, 1.0, HessianEstimator::monte_carlo(kSamples, seed));
      CHECK(gershgorin_check(h.value).ok);
      double total = 0, total_disjoint = 0;
      for (std::size_t i = 0; i < 15; ++i) {
        total += inst.patches[i].radius;
        total_disjoint += disjoint[i];
      }
      CHECK(total >= 0.8 * total_disjoint);
    }
  }
}

TEST_CASE("objective") {
  SUBCASE("exact reproduction of an affine target") {
    const VectorXd w = vec({0.5, -2});
    const Oracle oracle([w](const VectorXd& x) { return w.dot(x) + 0.25; }, 2, 1.0);
    PatchModel model;
    model.patches = {make_patch(VectorXd::Zero(2), w, 0.25, 1.0, 1.0)};
    model.weights = vec({1});
    CHECK(objective(model, oracle, kSamples, 1) <= 1e-10);
    CHECK(oracle.query_count() == kSamples);
  }
  SUBCASE("zero model against a constant") {
    const double k = 1.5;
    const Oracle oracle([k](const VectorXd&) { return k; }, 3, 2.0);
    PatchModel model;
    model.patches = {make_patch(VectorXd::Zero(3), VectorXd::Zero(3), 0.0, 1.0, 0.1)};
    model.weights = vec({0});
    CHECK(objective(model, oracle, 1000, 2) == doctest::Approx(k * k * ball_volume(3, 2.0)));
  }
  SUBCASE("convex in the weights on a fixed sample set") {
    const auto inst = make_instance(4, 10, RadiiMode::disjoint());
    const auto samples = draw_fit_samples(*inst.oracle, 5000, 3);
    PatchModel model;
    model.patches = inst.patches;
    Rng rng(1);
    for (int trial = 0; trial < 30; ++trial) {
      VectorXd w1(10), w2(10);
      for (int i = 0; i < 10; ++i) {
        w1[i] = uniform(rng, -3, 3);
        w2[i] = uniform(rng, -3, 3);
      }
      const double t = uniform(rng, 0, 1);
      auto at = [&](const VectorXd& w) {
        model.weights = w;
        return objective(model, samples);
      };
      CHECK(at(t * w1 + (1 - t) * w2) <= t * at(w1) + (1 - t) * at(w2) + 1e-12);
    }
  }
}

TEST_CASE("objective_gradient") {
  SUBCASE("matches central differences of the objective") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto inst = make_instance(seed, 8, RadiiMode::gershgorin(0.8, 5000, seed));
      const auto samples = draw_fit_samples(*inst.oracle, 5000, seed);
      PatchModel model;
      model.patches = inst.patches;
      Rng rng(seed);
      model.weights = VectorXd(8);
      for (int i = 0; i < 8; ++i) model.weights[i] = uniform(rng, -1, 2);
      const VectorXd grad = objective_gradient(model, samples);
      const double h = 1e-4;
      VectorXd fd(8);
      for (int i = 0; i < 8; ++i) {
        PatchModel up = model, down = model;
        up.weights[i] += h;
        down.weights[i] -= h;
        fd[i] = (objective(up, samples) - objective(down, samples)) / (2 * h);
      }
      CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, grad.norm()));
    }
  }
  SUBCASE("vanishes at the normal-equations minimizer") {
    const auto inst = make_instance(2, 10, RadiiMode::disjoint());
    PatchModel model;
    model.patches = inst.patches;
    model.weights = solve_normal_equations(inst.patches, *inst.oracle, kSamples, 5, 0.0);
    CHECK(objective_gradient(model, *inst.oracle, kSamples, 5).norm() <= 1e-8);
  }
  SUBCASE("patch away from every sample has zero component") {
    const Oracle oracle([](const VectorXd& x) { return x[0]; }, 2, 1.0);
    PatchModel model;
    model.patches = {make_patch(vec({0, 0}), vec({1, 0}), 0, 1, 0.5),
                     make_patch(vec({5, 5}), vec({1, 1}), 1, 1, 0.5)};
    model.weights = vec({0.3, 0.7});
    CHECK(objective_gradient(model, oracle, 2000, 1)[1] == 0.0);
  }
}

TEST_CASE("solve_normal_equations") {
  const VectorXd w = vec({1.5, 0.5});
  const Oracle affine([w](const VectorXd& x) { return w.dot(x) - 1.0; }, 2, 1.0);
  const std::vector<LocalPatch> cover{make_patch(VectorXd::Zero(2), w, -1.0, 1.0, 1.0)};
  CHECK(solve_normal_equations(cover, affine, 2000, 1, 0.0)[0] == doctest::Approx(1.0));

  const std::vector<LocalPatch> twice{cover[0], cover[0]};
  CHECK_THROWS_AS(solve_normal_equations(twice, affine, 2000, 1, 0.0), SingularSystemError);
  CHECK_NOTHROW(solve_normal_equations(twice, affine, 2000, 1, 1e-3));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = make_instance(seed, 10, RadiiMode::disjoint());
    const VectorXd sol = solve_normal_equations(inst.patches, *inst.oracle, 5000, seed, 0.0);
    const auto samples = draw_fit_samples(*inst.oracle, 5000, seed);
    const auto g = design_matrix(inst.patches, {}, samples.points);
    CHECK((g.transpose() * (g * sol - samples.values)).norm() <= 1e-9);
  }
}

TEST_CASE("fit_weights") {
  SUBCASE("gradient descent reaches the normal-equations solution") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto inst = make_instance(seed, 12, RadiiMode::gershgorin(0.8, kSamples, seed));
      FitConfig config;
      config.mc_samples = kSamples;
      config.seed = seed;
      config.grad_tol = 1e-11;
      config.max_iters = 1000000;
      const auto report = fit_weights(inst.patches, *inst.oracle, config);
      CHECK(report.converged);
      CHECK(report.gershgorin_ok);
      const VectorXd exact = solve_normal_equations(inst.patches, *inst.oracle, kSamples, seed, 0.0);
      CHECK((report.weights - exact).cwiseAbs().maxCoeff() <= 1e-6);
      CHECK(report.gershgorin_margins.size() == 12);
      CHECK(report.hessian_min_eigenvalue >= -3 * report.hessian_max_std_error);
    }
  }
  const auto inst = make_instance(5, 10, RadiiMode::disjoint());
  FitConfig config;
  config.mc_samples = kSamples;
  config.seed = 9;
  config.max_iters = 200000;

  SUBCASE("objective never increases with step 1 / lambda_max") {
    const auto samples = draw_fit_samples(*inst.oracle, kSamples, 9);
    const auto h = gram_hessian(design_matrix(inst.patches, {}, samples.points), samples.volume);
    const double lambda_max = max_eigenvalue(h.value);
    CHECK(lambda_max == doctest::Approx(Eigen::SelfAdjointEigenSolver<MatrixXd>(h.value)
                                            .eigenvalues()
                                            .maxCoeff())
                            .epsilon(1e-9));
    config.learning_rate = 1.0 / lambda_max;
    config.max_iters = 2000;
    const auto report = fit_weights(inst.patches, *inst.oracle, config);
    for (std::size_t k = 1; k < report.objective_trace.size(); ++k) {
      CHECK(report.objective_trace[k] <= report.objective_trace[k - 1] + 1e-12);
    }
  }
  SUBCASE("huge l1 penalty zeroes every weight") {
    config.reg = {RegKind::l1, 1e6};
    const auto report = fit_weights(inst.patches, *inst.oracle, config);
    CHECK(report.nonzero_count() == 0);
    CHECK(report.converged);
  }
  SUBCASE("l1 sparsity is monotone in lambda") {
    std::size_t previous = 11;
    for (double lambda : {0.0, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 1.0}) {
      config.reg = {RegKind::l1, lambda};
      const auto count = fit_weights(inst.patches, *inst.oracle, config).nonzero_count(1e-8);
      CHECK(count <= previous);
      previous = count;
    }
  }
  SUBCASE("l2 matches ridge normal equations") {
    const double lambda = 0.05;
    config.reg = {RegKind::l2, lambda};
    config.grad_tol = 1e-12;
    const auto report = fit_weights(inst.patches, *inst.oracle, config);
    // (V/M) |Gw - f|^2 + lambda |w|^2  <=>  ridge = lambda M / V.
    const double ridge = lambda * kSamples / ball_volume(2, 1.0);
    const VectorXd exact = solve_normal_equations(inst.patches, *inst.oracle, kSamples, 9, ridge);
    CHECK((report.weights - exact).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("too large a step diverges") {
    config.learning_rate = 1e3;
    CHECK_THROWS_AS(fit_weights(inst.patches, *inst.oracle, config), DivergenceError);
  }
  SUBCASE("invalid config") {
    config.learning_rate = -1.0;
    CHECK_THROWS_AS(fit_weights(inst.patches, *inst.oracle, config), std::invalid_argument);
  }
}

TEST_CASE("fit_second_order") {
  const auto inst = make_instance(7, 12, RadiiMode::gershgorin(0.8, kSamples, 3));
  FitConfig config;
  config.mc_samples = kSamples;
  config.seed = 3;
  config.grad_tol = 1e-10;
  config.max_iters = 1000000;

  SUBCASE("empty pair set is the first-order fit") {
    const auto first = fit_weights(inst.patches, *inst.oracle, config);
    const auto second = fit_second_order(inst.patches, *inst.oracle, config, {});
    CHECK(first.weights == second.weights);
    CHECK(first.final_objective == second.final_objective);
    CHECK(second.pair_weights.empty());
  }
  SUBCASE("disjoint pairs are rejected with a warning") {
    auto patches = inst.patches;
    patches[0].center = vec({0.9, 0});
    patches[0].radius = 0.05;
    patches[1].center = vec({-0.9, 0});
    patches[1].radius = 0.05;
    const std::vector<PatchPair> pairs{{1, 0}};
    const auto report = fit_second_order(patches, *inst.oracle, config, pairs);
    CHECK(report.pair_weights.empty());
    REQUIRE(report.rejected_pairs.size() == 1);
    CHECK(report.rejected_pairs[0] == PatchPair{0, 1});
    CHECK(report.warnings.size() == 1);
    CHECK_THROWS_AS(fit_second_order(patches, *inst.oracle, config, std::vector<PatchPair>{{2, 2}}),
                    std::invalid_argument);
  }
  SUBCASE("joint fit is no worse than the first-order fit") {
    const auto pairs = overlapping_pairs(inst.patches);
    REQUIRE_FALSE(pairs.empty());
    const auto first = fit_weights(inst.patches, *inst.oracle, config);
    const auto joint = fit_second_order(inst.patches, *inst.oracle, config, pairs);
    CHECK(joint.pair_weights.size() == pairs.size());
    CHECK(joint.final_objective <= first.final_objective);
  }
}

TEST_CASE("report and config documents") {
  const auto inst = make_instance(3, 6, RadiiMode::gershgorin(0.8, 5000, 1));
  FitConfig config;
  config.mc_samples = 5000;
  config.reg = {RegKind::l1, 1e-3};
  config.learning_rate = 0.01;
  const auto report =
      fit_second_order(inst.patches, *inst.oracle, config, overlapping_pairs(inst.patches));
  const auto back = report_from_json(report_to_json(report));
  CHECK(back.weights == report.weights);
  CHECK(back.final_objective == report.final_objective);
  CHECK(back.pair_weights.size() == report.pair_weights.size());
  CHECK(back.gershgorin_margins == report.gershgorin_margins);
  CHECK(back.nonzero_count() == report.nonzero_count());

  const auto config_back = config_from_json(config_to_json(config));
  CHECK(config_back.reg.kind == RegKind::l1);
  CHECK(*config_back.learning_rate == 0.01);
  CHECK_THROWS_AS(config_from_json({{"reg", "lasso"}}), SchemaError);
}
