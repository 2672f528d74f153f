#include <doctest.h>

#include <cmath>
#include <set>

#include <Eigen/LU>

#include "relurecon/analysis.hpp"

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

// 1-D, one hidden layer: neuron i switches at breakpoint t_i.
ReluNetwork breakpoint_net(const std::vector<double>& breakpoints) {
  const auto k = static_cast<Eigen::Index>(breakpoints.size());
  MatrixXd w1(k, 1);
  VectorXd b1(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    w1(i, 0) = i % 2 ? -1.0 : 1.0;
    b1[i] = -w1(i, 0) * breakpoints[static_cast<std::size_t>(i)];
  }
  return ReluNetwork({{1, static_cast<int>(k), 1}},
                     {{w1, b1}, {MatrixXd::Ones(1, k), VectorXd::Zero(1)}});
}

// Exhaustive sweep: pattern changes along a dense grid of [-T, T].
std::size_t sweep_regions(const ReluNetwork& net, double radius) {
  std::set<std::string> seen;
  const int steps = 200000;
  for (int s = 0; s <= steps; ++s) {
    seen.insert(activation_pattern(net, vec({-radius + 2 * radius * s / steps})));
  }
  return seen.size();
}

// Layer-1 boundaries x1 = 0 and x2 = -1; the layer-2 neuron
// z2 = 2 relu(x1) + relu(x2 + 1) - 1 has zero set x2 = 0 for x1 < 0 and
// x2 = -2 x1 for x1 > 0, so it bends where it meets x1 = 0.
ReluNetwork bending_net() {
  MatrixXd w1(2, 2);
  w1 << 1, 0, 0, 1;
  MatrixXd w2(1, 2);
  w2 << 2, 1;
  return ReluNetwork({{2, 2, 1, 1}},
                     {{w1, vec({0, 1})}, {w2, vec({-1})}, {MatrixXd::Ones(1, 1), vec({0})}});
}

}  // namespace

TEST_CASE("dp_distance") {
  const ScalarField f = [](const VectorXd& x) { return std::sin(3 * x[0]) + x[1]; };
  const ScalarField g = [](const VectorXd& x) { return x[0] * x[1]; };
  const ScalarField h = [](const VectorXd& x) { return std::abs(x[0]) - 0.5; };

  CHECK(dp_distance(f, f, 2, 1.0, 2.0, 1000, 1).value <= 1e-12);

  const double k = -0.75;
  const ScalarField shifted = [&](const VectorXd& x) { return f(x) + k; };
  const auto d = dp_distance(f, shifted, 2, 1.5, 2.0, 5000, 2);
  CHECK(std::abs(d.value - std::abs(k) * std::sqrt(ball_volume(2, 1.5))) <=
        4 * d.std_error + 1e-12);

  for (double p : {1.0, 2.0, 3.5}) {
    const double fg = dp_distance(f, g, 2, 1.0, p, 4000, 7).value;
    const double gh = dp_distance(g, h, 2, 1.0, p, 4000, 7).value;
    const double fh = dp_distance(f, h, 2, 1.0, p, 4000, 7).value;
    CHECK(fh <= fg + gh + 1e-12);
    CHECK(fg == dp_distance(g, f, 2, 1.0, p, 4000, 7).value);
  }
  CHECK_THROWS_AS(dp_distance(f, g, 2, 1.0, 0.5, 10, 1), std::invalid_argument);
}

TEST_CASE("count_regions") {
  SUBCASE("affine on the ball") {
    const ReluNetwork net({{2, 2, 1}}, {{MatrixXd::Identity(2, 2), vec({5, 5})},
                                        {MatrixXd::Ones(1, 2), vec({0})}});
    CHECK(count_regions(net, 1.0, 10000, 1) == 1);
  }
  SUBCASE("1-D breakpoints match the exhaustive sweep") {
    for (int k = 1; k <= 6; ++k) {
      std::vector<double> breakpoints;
      for (int i = 0; i < k; ++i) breakpoints.push_back(-0.9 + 1.8 * (i + 0.5) / k);
      const auto net = breakpoint_net(breakpoints);
      CHECK(sweep_regions(net, 1.0) == static_cast<std::size_t>(k + 1));
      CHECK(count_regions(net, 1.0, 100000, 3) == static_cast<std::size_t>(k + 1));
    }
  }
  SUBCASE("more samples never find fewer regions; bounded by 2^hidden") {
    const auto net = random_network({{2, 4, 3, 1}}, 5, 1.0);
    std::size_t previous = 0;
    for (std::size_t n : {100, 1000, 10000, 100000}) {
      const auto count = count_regions(net, 1.0, n, 9);
      CHECK(count >= previous);
      CHECK(count <= (std::size_t{1} << 7));
      previous = count;
    }
  }
}

TEST_CASE("classify_intersection") {
  SUBCASE("first-layer boundaries never bend") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto net = random_network({{2, 4, 3, 1}}, seed, 1.0);
      const auto& layer = net.layers()[0];
      for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
          Eigen::Matrix2d m;
          m << layer.W.row(a), layer.W.row(b);
          if (std::abs(m.determinant()) < 1e-3) continue;
          const Eigen::Vector2d x = m.partialPivLu().solve(Eigen::Vector2d(-layer.b[a], -layer.b[b]));
          ++checked;
          CHECK(classify_intersection(net, {0, a}, {0, b}, x, 1e-3) == BendOutcome::neither);
        }
      }
    }
    CHECK(checked >= 50);
  }
  SUBCASE("a deeper boundary bends where it crosses a first-layer one") {
    const auto net = bending_net();
    const VectorXd origin = VectorXd::Zero(2);
    CHECK(classify_intersection(net, {0, 0}, {1, 0}, origin, 1e-3) == BendOutcome::z2_bends);
    CHECK(classify_intersection(net, {1, 0}, {0, 0}, origin, 1e-3) == BendOutcome::z_bends);
    // Dense tracing of the layer-2 zero set: x2 = 0 left of the bend, x2 = -2 x1 right.
    for (double x1 : {-0.3, -0.1, 0.1, 0.3}) {
      const double x2 = x1 < 0 ? 0.0 : -2 * x1;
      CHECK(std::abs(preactivation(net, {1, 0}, vec({x1, x2}))) <= 1e-12);
    }
  }
  SUBCASE("x_star must sit on both boundaries") {
    CHECK_THROWS_AS(classify_intersection(bending_net(), {0, 0}, {1, 0}, vec({0.5, 0.5}), 1e-3),
                    std::invalid_argument);
  }
}

TEST_CASE("conjecture_report") {
  const auto net = random_network({{2, 3, 1}}, 7, 1.0);
  const Oracle oracle(net, 1.0);
  const Oracle interior(net, 0.8);
  auto probes = sample_points(interior, 12, 1);
  const std::vector<double> scales(12, 1.0);
  const auto patches =
      build_patches(probes, scales, select_radii(probes, scales, 1.0, RadiiMode::disjoint()));
  FitConfig config;
  config.mc_samples = 20000;
  config.max_iters = 50000;
  const auto base = fit_weights(patches, oracle, config);
  CHECK(base.nonzero_count() == 12);

  const Refit rerun = [&](double lambda) {
    FitConfig c = config;
    c.reg = {RegKind::l1, lambda};
    return fit_weights(patches, oracle, c);
  };
  const std::vector<double> grid{0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1e6};
  const auto report = conjecture_report(base, net, grid, rerun, 1.0, 20000, 3);
  CHECK(report.first_layer_width == 3);
  CHECK(report.patch_count == 12);
  REQUIRE(report.lambda_grid.size() == grid.size());
  CHECK(report.lambda_grid.front().nonzero == 12);
  CHECK(report.lambda_grid.back().nonzero == 0);
  CHECK(report.empirical_region_count >= 1);

  const auto back = conjecture_from_json(conjecture_to_json(report));
  CHECK(back.lambda_grid.size() == grid.size());
  CHECK(back.first_layer_width == 3);
  CHECK(back.lambda_grid[2].nonzero == report.lambda_grid[2].nonzero);
}
