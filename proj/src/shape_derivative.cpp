#include "probshape/shape_derivative.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace probshape {

Point evaluate_basis(const PolygonalBoundary& boundary, BasisDeformation basis, const BoundaryLocation& y) {
  const int k = boundary.size();
  if (y.index < 0 || y.index >= k) throw std::invalid_argument("boundary location has an invalid tag");
  const int j = boundary.wrap(basis.vertex);
  if (y.kind == BoundaryLocation::Kind::vertex) {
    if (y.index != j) return Point::Zero();
    const Point mean = boundary.normal(j - 1) + boundary.normal(j);
    return mean.normalized();
  }
  if (!(y.t >= 0.0 && y.t <= 1.0)) throw std::invalid_argument("edge parameter outside [0, 1]");
  if (y.index == j) return (1.0 - y.t) * boundary.normal(y.index);
  if (boundary.wrap(y.index + 1) == j) return y.t * boundary.normal(y.index);
  return Point::Zero();
}

QuadratureRule gauss_legendre_unit(int order) {
  if (order < 1 || order > 64) throw std::invalid_argument("unsupported quadrature order");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  // Newton on P_n from the Chebyshev-like initial guess, then map [-1, 1] -> [0, 1].
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int n = 2; n <= order; ++n) {
        const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

Eigen::VectorXd boundary_term(const PolygonalBoundary& boundary, const TrackingData& z, int order) {
  const QuadratureRule rule = gauss_legendre_unit(order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(boundary.size());
  const double a2 = z.a * z.a;
  const double b2 = z.b * z.b;
  for (int e = 0; e < boundary.size(); ++e) {
    // Parameters where the edge meets the ellipse: alpha t^2 + beta t + gamma = 0.
    const Point u = boundary.vertex(e) - z.center;
    const Point d = boundary.edge_vector(e);
    const double alpha = d.x() * d.x() / a2 + d.y() * d.y() / b2;
    const double beta = 2.0 * (u.x() * d.x() / a2 + u.y() * d.y() / b2);
    const double gamma = u.x() * u.x() / a2 + u.y() * u.y() / b2 - 1.0;
    std::vector<double> cuts{0.0};
    const double disc = beta * beta - 4.0 * alpha * gamma;
    if (disc > 0.0) {
      const double root = std::sqrt(disc);
      // Numerically stable pair of roots.
      const double q = -0.5 * (beta + std::copysign(root, beta));
      for (double t : {q / alpha, gamma / q})
        if (std::isfinite(t) && t > 0.0 && t < 1.0) cuts.push_back(t);
    }
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
      if (cuts[c + 1] > cuts[c]) detail::integrate_edge_piece(boundary, e, cuts[c], cuts[c + 1], z, rule, out);
  }
  return out;
}

DerivativeVector assemble(const MonteCarloTerm& plus, const MonteCarloTerm& minus,
                          const Eigen::VectorXd& boundary_terms) {
  if (plus.values.size() != boundary_terms.size() || minus.values.size() != boundary_terms.size())
    throw std::invalid_argument("assemble: term sizes differ");
  DerivativeVector d;
  d.term_plus = plus.values;
  d.term_minus = minus.values;
  d.term_boundary = boundary_terms;
  d.values = d.term_plus - d.term_minus - d.term_boundary;
  d.std_error = (plus.std_error.cwiseProduct(plus.std_error) + minus.std_error.cwiseProduct(minus.std_error))
                    .cwiseSqrt();
  return d;
}

void write_derivative_csv(const DerivativeVector& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "vertex,d,term_plus,term_minus,term_boundary\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    out << i << ',' << d.values(i) << ',' << d.term_plus(i) << ',' << d.term_minus(i) << ','
        << d.term_boundary(i) << '\n';
}

}  // namespace probshape
