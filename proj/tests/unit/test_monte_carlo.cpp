#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "probshape/monte_carlo.hpp"
#include "support.hpp"

using namespace probshape;

namespace {

const Point kCenter{0.5, 0.5};
constexpr double kRadius = 0.25;

/// kappa on the disk, -1 outside.
auto plateau(double kappa) {
  return [kappa](const PointCloud& x) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = (x.col(i) - kCenter).norm() < kRadius ? kappa : -1.0;
    return out;
  };
}

/// 1 - r / R, positive on the disk only.
Eigen::RowVectorXd cone(const PointCloud& x) {
  Eigen::RowVectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = 1.0 - (x.col(i) - kCenter).norm() / kRadius;
  return out;
}

Eigen::RowVectorXd zero(const PointCloud& x) { return Eigen::RowVectorXd::Zero(x.cols()); }

}  // namespace

TEST_CASE("target equal to the reference accepts every proposal") {
  auto density = [](const PointCloud& x) -> Eigen::RowVectorXd { return Eigen::RowVectorXd::Ones(x.cols()); };
  const auto r = acceptance_rejection(density, 1.0, Rectangle{}, 5000, Rng(1));
  CHECK(r.trials == 5000);
  CHECK(r.samples.cols() == 5000);
  CHECK(r.violations == 0);
  CHECK(r.complete);
}

TEST_CASE("left-half indicator") {
  auto density = [](const PointCloud& x) -> Eigen::RowVectorXd {
    return (x.row(0).array() < 0.5).cast<double>().matrix() * 2.0;
  };
  const auto r = acceptance_rejection(density, 2.0, Rectangle{}, 20000, Rng(2));
  CHECK((r.samples.row(0).array() < 0.5).all());
  const double ratio = r.acceptance_ratio();
  CHECK(std::abs(ratio - 0.5) < 3.5 * std::sqrt(0.25 / static_cast<double>(r.trials)));
  CHECK(r.violations == 0);
}

TEST_CASE("samples do not depend on the batch size") {
  auto density = [](const PointCloud& x) -> Eigen::RowVectorXd { return 2.0 * x.row(0); };
  AcceptRejectOptions small;
  small.batch = 7;
  const auto a = acceptance_rejection(density, 2.0, Rectangle{}, 500, Rng(3));
  const auto b = acceptance_rejection(density, 2.0, Rectangle{}, 500, Rng(3), small);
  CHECK(a.trials == b.trials);
  CHECK(a.samples == b.samples);
}

TEST_CASE("linear density has mean 2/3") {
  auto density = [](const PointCloud& x) -> Eigen::RowVectorXd { return 2.0 * x.row(0); };
  const Eigen::Index n = 20000;
  const double sigma = std::sqrt(1.0 / 18.0 / static_cast<double>(n));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = acceptance_rejection(density, 2.0, Rectangle{}, n, Rng(seed));
    CHECK(std::abs(r.samples.row(0).mean() - 2.0 / 3.0) < 4.0 * sigma);
  }
}

TEST_CASE("rectangle measure from the acceptance count") {
  auto inside = [](const PointCloud& x) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      out(i) = x(0, i) >= 0.2 && x(0, i) <= 0.5 && x(1, i) >= 0.1 && x(1, i) <= 0.6 ? 1.0 : 0.0;
    return out;
  };
  const double p = 0.15;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = acceptance_rejection(inside, 1.0, Rectangle{}, 5000, Rng(100 + seed));
    const double trials = static_cast<double>(r.trials);
    CHECK(std::abs(5000.0 / trials - p) < 4.0 * std::sqrt(p * (1 - p) / trials));
  }
}

TEST_CASE("sampling budget and empty support") {
  auto half = [](const PointCloud& x) -> Eigen::RowVectorXd {
    return (x.row(0).array() < 0.5).cast<double>().matrix();
  };
  AcceptRejectOptions budget;
  budget.max_proposals = 100;
  const auto partial = acceptance_rejection(half, 1.0, Rectangle{}, 1000, Rng(4), budget);
  CHECK_FALSE(partial.complete);
  CHECK(partial.trials == 100);
  CHECK(partial.samples.cols() > 20);

  AcceptRejectOptions tight;
  tight.max_proposals = 200000;
  tight.ratio_check_after = 50000;
  CHECK_THROWS_AS(acceptance_rejection(zero, 1.0, Rectangle{}, 10, Rng(5), tight), SamplingError);
  CHECK_THROWS_AS(acceptance_rejection(half, 0.0, Rectangle{}, 10, Rng(5)), std::invalid_argument);
}

TEST_CASE("partition of a plateau disk") {
  const double kappa = 0.3;
  PartitionOptions options;
  options.m_uniform = 20000;
  options.m_constant = 20000;
  const auto est = estimate_partition(plateau(kappa), zero, Rectangle{}, options, Rng(6));
  const double area = std::numbers::pi / 16.0;
  const double trials = static_cast<double>(est.plus.trials);
  CHECK(std::abs(est.plus.measure - area) < 4.0 * std::sqrt(area * (1 - area) / trials));
  CHECK(est.plus.m == doctest::Approx(kappa * est.plus.measure).epsilon(1e-12));
  CHECK(est.plus.C == doctest::Approx(1.1 / est.plus.measure).epsilon(1e-12));
  CHECK(est.minus.empty);
  CHECK(est.minus.measure == 0.0);
  CHECK(est.minus.m == 0.0);

  SUBCASE("constant density starts are uniform on the disk") {
    const Eigen::Index n = 20000;
    const auto starts = sample_random_starts(plateau(kappa), zero, Rectangle{}, est, Side::plus, n, Rng(7));
    const Point mean = starts.samples.rowwise().mean();
    const double sigma = kRadius / 2.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean.x() - 0.5) < 4 * sigma);
    CHECK(std::abs(mean.y() - 0.5) < 4 * sigma);
    for (Eigen::Index i = 0; i < n; ++i) CHECK_LE((starts.samples.col(i) - kCenter).norm(), kRadius);
  }
  SUBCASE("a degenerate side cannot seed starts") {
    CHECK_THROWS_AS(sample_random_starts(plateau(kappa), zero, Rectangle{}, est, Side::minus, 10, Rng(8)),
                    SamplingError);
  }
}

TEST_CASE("starts from a cone density follow the radial law") {
  PartitionOptions options;
  options.m_uniform = 20000;
  options.m_constant = 20000;
  const auto est = estimate_partition(cone, zero, Rectangle{}, options, Rng(9));
  CHECK(est.plus.m == doctest::Approx(std::numbers::pi * kRadius * kRadius / 3.0).epsilon(0.05));
  const Eigen::Index n = 10000;
  const auto starts = sample_random_starts(cone, zero, Rectangle{}, est, Side::plus, n, Rng(10));
  // Radial CDF of a density proportional to r (1 - r/R): 3u^2 - 2u^3.
  const int bins = 10;
  std::vector<double> counts(bins, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (starts.samples.col(i) - kCenter).norm() / kRadius;
    counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(u * bins)))] += 1.0;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    auto cdf = [](double u) { return 3 * u * u - 2 * u * u * u; };
    const double expected = static_cast<double>(n) * (cdf((b + 1.0) / bins) - cdf(static_cast<double>(b) / bins));
    chi2 += (counts[static_cast<std::size_t>(b)] - expected) * (counts[static_cast<std::size_t>(b)] - expected) /
            expected;
  }
  CHECK(chi2 < 27.88);
}

TEST_CASE("exit walks") {
  const auto disk = PolygonalBoundary::circle({0, 0}, 0.5, 256);
  auto level = [](const Point& x) { return 0.25 - x.squaredNorm(); };

  SUBCASE("a start outside exits immediately") {
    Rng rng(11);
    const auto s = euler_maruyama_exit(level, disk, Point(0.7, 0.1), 1e-4, rng);
    CHECK(s.steps == 0);
    CHECK((s.exit.point - project_to_boundary(disk, Point(0.7, 0.1)).point).norm() == 0.0);
  }
  SUBCASE("exits lie on the chain and are reproducible") {
    PointCloud starts(2, 50);
    Rng pick(12);
    for (Eigen::Index i = 0; i < 50; ++i) starts.col(i) = Point(pick.uniform(-0.3, 0.3), pick.uniform(-0.3, 0.3));
    const auto a = sample_exits(level, disk, starts, 1e-4, Rng(13));
    const auto b = sample_exits(level, disk, starts, 1e-4, Rng(13));
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(distance_to_chain(disk, a.samples[i].exit.point) < 1e-12);
      CHECK(a.samples[i].exit.point == b.samples[i].exit.point);
      CHECK(a.samples[i].steps == b.samples[i].steps);
      CHECK(a.samples[i].steps > 0);
    }
  }
  SUBCASE("step cap") {
    Rng rng(14);
    CHECK_THROWS_AS(euler_maruyama_exit(level, disk, Point(0, 0), 1e-4, rng, 10), SamplingError);
    CHECK_THROWS_AS(euler_maruyama_exit(level, disk, Point(0, 0), 0.0, rng), std::invalid_argument);
  }
  SUBCASE("exit angles from the center are uniform") {
    const Eigen::Index n = 2000;
    const PointCloud starts = PointCloud::Zero(2, n);
    const auto exits = sample_exits(level, disk, starts, 1e-4, Rng(15));
    std::vector<double> u;
    for (const auto& s : exits.samples)
      u.push_back((std::atan2(s.exit.point.y(), s.exit.point.x()) + std::numbers::pi) / (2 * std::numbers::pi));
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double nn = static_cast<double>(u.size());
      ks = std::max({ks, std::abs(u[i] - static_cast<double>(i) / nn), std::abs(static_cast<double>(i + 1) / nn - u[i])});
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
  }
}
