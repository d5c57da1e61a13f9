#include <doctest.h>

#include <cmath>
#include <numbers>

#include "probshape/shape_derivative.hpp"
#include "support.hpp"

using namespace probshape;

namespace {

BoundaryLocation on_edge(const PolygonalBoundary& b, int e, double t) {
  return {b.vertex(e) + t * b.edge_vector(e), BoundaryLocation::Kind::edge, e, t};
}

auto constant_gradient(const Point& g) {
  return [g](const PointCloud& x) -> PointCloud { return g.replicate(1, x.cols()); };
}

}  // namespace

TEST_CASE("hat-normal basis values") {
  const auto b = PolygonalBoundary::circle({0.5, 0.5}, 0.25, 12);
  const BoundaryLocation mid = on_edge(b, 3, 0.5);
  CHECK((evaluate_basis(b, {3}, mid) - 0.5 * b.normal(3)).norm() < 1e-15);
  CHECK((evaluate_basis(b, {4}, mid) - 0.5 * b.normal(3)).norm() < 1e-15);
  CHECK(evaluate_basis(b, {5}, mid).norm() == 0.0);
  const BoundaryLocation near_end = on_edge(b, 11, 0.8);
  CHECK((evaluate_basis(b, {0}, near_end) - 0.8 * b.normal(11)).norm() < 1e-15);
  CHECK((evaluate_basis(b, {11}, near_end) - 0.2 * b.normal(11)).norm() < 1e-15);

  const BoundaryLocation corner{b.vertex(2), BoundaryLocation::Kind::vertex, 2, 0.0};
  CHECK(evaluate_basis(b, {2}, corner).norm() == doctest::Approx(1.0));
  CHECK(evaluate_basis(b, {2}, corner).dot(b.vertex(2) - Point(0.5, 0.5)) > 0.0);
  CHECK(evaluate_basis(b, {3}, corner).norm() == 0.0);

  CHECK_THROWS_AS(evaluate_basis(b, {0}, BoundaryLocation{Point(0, 0), BoundaryLocation::Kind::edge, 12, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_basis(b, {0}, BoundaryLocation{Point(0, 0), BoundaryLocation::Kind::edge, -1, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("Monte Carlo term") {
  const auto b = PolygonalBoundary::circle({0, 0}, 1.0, 16);
  const Point g(0.3, -0.7);

  SUBCASE("m = 0 gives zeros without samples") {
    const auto t = mc_expectation_term(b, ExitSampleSet{}, constant_gradient(g), 0.0);
    CHECK(t.values.isZero());
    CHECK_THROWS_AS(mc_expectation_term(b, ExitSampleSet{}, constant_gradient(g), 1.0), SamplingError);
  }
  SUBCASE("a single midpoint exit") {
    ExitSampleSet set;
    set.samples.push_back({Point::Zero(), on_edge(b, 5, 0.5), 1});
    const double m = 2.5;
    const auto t = mc_expectation_term(b, set, constant_gradient(g), m);
    const double expected = m * 0.5 * b.normal(5).dot(g);
    CHECK(t.values(5) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(t.values(6) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(t.values.sum() == doctest::Approx(2 * expected).epsilon(1e-14));
    CHECK(t.std_error.isZero());
  }
  SUBCASE("exits uniform in arc length") {
    Rng rng(21);
    ExitSampleSet set;
    const int n = 20000;
    for (int s = 0; s < n; ++s) {
      const int e = static_cast<int>(rng.uniform() * 16);
      set.samples.push_back({Point::Zero(), on_edge(b, e, rng.uniform()), 1});
    }
    const auto t = mc_expectation_term(b, set, constant_gradient(g), 1.0);
    const double perimeter = b.perimeter();
    for (int j = 0; j < 16; ++j) {
      const double exact = 0.5 * (b.edge_length(j - 1) * b.normal(j - 1) + b.edge_length(j) * b.normal(j)).dot(g) /
                           perimeter;
      CHECK(std::abs(t.values(j) - exact) < 4.0 * t.std_error(j));
      CHECK(t.std_error(j) > 0.0);
    }
  }
}

TEST_CASE("boundary term") {
  const auto b = PolygonalBoundary::circle({0.5, 0.5}, 0.25, 20);
  SUBCASE("constant field gives L/4 per adjacent edge") {
    auto one = [](const Point&) { return 1.0; };
    const Eigen::VectorXd t = boundary_term(b, one);
    for (int j = 0; j < 20; ++j)
      CHECK(t(j) == doctest::Approx((b.edge_length(j - 1) + b.edge_length(j)) / 4.0).epsilon(1e-13));
  }
  SUBCASE("zero outside the ellipse support") {
    const auto far = PolygonalBoundary::circle({0.5, 0.5}, 0.45, 20);
    const TrackingData z;
    const Eigen::VectorXd t = boundary_term(far, z);
    for (int j = 0; j < 20; ++j) {
      if (z(far.vertex(j)) == 0.0 && z(far.vertex(j - 1)) == 0.0 && z(far.vertex(j + 1)) == 0.0)
        CHECK(t(j) == 0.0);
    }
  }
  SUBCASE("matches a fine trapezoid rule on the ball") {
    const TrackingData z;
    const Eigen::VectorXd t = boundary_term(b, z);
    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(20);
    const int n = 10000;
    for (int e = 0; e < 20; ++e)
      for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const double w = (i == 0 || i == n ? 0.5 : 1.0) * b.edge_length(e) / n;
        const double value = z(Point(b.vertex(e) + s * b.edge_vector(e)));
        oracle(e) += w * 0.5 * value * value * (1 - s);
        oracle((e + 1) % 20) += w * 0.5 * value * value * s;
      }
    CHECK((t - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("edge crossings of the ellipse are resolved") {
    const auto crossing = PolygonalBoundary::circle({0.5, 0.5}, 0.35, 7);
    const TrackingData z;
    const Eigen::VectorXd t = boundary_term(crossing, z);
    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(7);
    const int n = 200000;
    for (int e = 0; e < 7; ++e)
      for (int i = 0; i < n; ++i) {
        const double s = (i + 0.5) / n;
        const double value = z(Point(crossing.vertex(e) + s * crossing.edge_vector(e)));
        const double f = crossing.edge_length(e) / n * 0.5 * value * value;
        oracle(e) += f * (1 - s);
        oracle((e + 1) % 7) += f * s;
      }
    CHECK((t - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("assembly identity and linearity") {
  Rng rng(22);
  const int k = 9;
  MonteCarloTerm plus{Eigen::VectorXd::Random(k), Eigen::VectorXd::Random(k).cwiseAbs()};
  MonteCarloTerm minus{Eigen::VectorXd::Random(k), Eigen::VectorXd::Random(k).cwiseAbs()};
  const Eigen::VectorXd boundary = Eigen::VectorXd::Random(k);
  const DerivativeVector d = assemble(plus, minus, boundary);
  CHECK(d.identity_holds());
  CHECK(d.values == plus.values - minus.values - boundary);
  CHECK(d.std_error.isApprox(
      (plus.std_error.cwiseAbs2() + minus.std_error.cwiseAbs2()).cwiseSqrt()));

  const auto b = PolygonalBoundary::circle({0, 0}, 1.0, k);
  ExitSampleSet set;
  for (int s = 0; s < 50; ++s) set.samples.push_back({Point::Zero(), on_edge(b, s % k, rng.uniform()), 1});
  const auto one = mc_expectation_term(b, set, constant_gradient({1, 2}), 1.0);
  const auto three = mc_expectation_term(b, set, constant_gradient({1, 2}), 3.0);
  const auto other = mc_expectation_term(b, set, constant_gradient({-2, 0.5}), 1.0);
  const auto sum = mc_expectation_term(b, set, constant_gradient({-1, 2.5}), 1.0);
  CHECK(three.values.isApprox(3.0 * one.values, 1e-14));
  CHECK(sum.values.isApprox(one.values + other.values, 1e-13));
}

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly") {
  for (int order = 1; order <= 8; ++order) {
    const QuadratureRule rule = gauss_legendre_unit(order);
    for (int p = 0; p < 2 * order; ++p) {
      double sum = 0.0;
      for (int q = 0; q < order; ++q) sum += rule.weights[q] * std::pow(rule.nodes[q], p);
      CHECK(sum == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
  CHECK_THROWS(gauss_legendre_unit(0));
}
