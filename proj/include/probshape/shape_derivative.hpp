#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "probshape/errors.hpp"
#include "probshape/geometry.hpp"
#include "probshape/monte_carlo.hpp"

namespace probshape {

/// Hat-normal deformation V_j: the P1 hat of vertex j times the outer normal
/// of whichever supporting edge the point lies on.
struct BasisDeformation {
  int vertex = 0;
};

/// Value of V_j at a projected chain point.
///
/// Edge points: barycentric weight towards vertex j times the edge normal, or
/// zero off the two supporting edges. Vertex points (normal-cone exits, a null
/// event in exact arithmetic) evaluate to the renormalized mean of the two
/// adjacent edge normals at vertex j and zero elsewhere.
Point evaluate_basis(const PolygonalBoundary& boundary, BasisDeformation basis, const BoundaryLocation& y);

/// Per-vertex Monte Carlo estimate with its standard error.
struct MonteCarloTerm {
  Eigen::VectorXd values;
  Eigen::VectorXd std_error;
};

/// m * mean over exits y of <V_i(y), grad v(y)> for every vertex i.
///
/// `gradient` is a batch callable returning 2 x N spatial gradients. Throws
/// SamplingError when m > 0 but no exits are given; m == 0 yields zeros.
template <class Gradient>
MonteCarloTerm mc_expectation_term(const PolygonalBoundary& boundary, const ExitSampleSet& exits,
                                   Gradient&& gradient, double m);

/// Per-vertex integral of 1/2 z^2 v_i over the chain: Gauss-Legendre with
/// `order` nodes per sub-segment, each edge split where it crosses the
/// ellipse so the kink of z at the ellipse falls on a node boundary.
Eigen::VectorXd boundary_term(const PolygonalBoundary& boundary, const TrackingData& z, int order = 4);

/// Same quadrature for an arbitrary scalar field without edge splitting.
template <class Field>
Eigen::VectorXd boundary_term(const PolygonalBoundary& boundary, Field&& z, int order = 4);

/// D J[V_i] = term_plus - term_minus - term_boundary with its decomposition.
struct DerivativeVector {
  Eigen::VectorXd values;
  Eigen::VectorXd term_plus;
  Eigen::VectorXd term_minus;
  Eigen::VectorXd term_boundary;
  /// sqrt(se_plus^2 + se_minus^2) per vertex; the boundary term is deterministic.
  Eigen::VectorXd std_error;

  /// Exact re-evaluation of the assembly identity.
  [[nodiscard]] bool identity_holds() const {
    return (values.array() == (term_plus - term_minus - term_boundary).array()).all();
  }
};

DerivativeVector assemble(const MonteCarloTerm& plus, const MonteCarloTerm& minus,
                          const Eigen::VectorXd& boundary_terms);

/// Full assembly from partition, exit sets and state gradient. An empty exit
/// set is allowed for a side whose m is zero.
template <class Gradient>
DerivativeVector assemble(const PartitionEstimate& partition, const ExitSampleSet& exits_plus,
                          const ExitSampleSet& exits_minus, const PolygonalBoundary& boundary,
                          const TrackingData& z, Gradient&& gradient) {
  return assemble(mc_expectation_term(boundary, exits_plus, gradient, partition.plus.m),
                  mc_expectation_term(boundary, exits_minus, gradient, partition.minus.m),
                  boundary_term(boundary, z));
}

/// CSV `vertex,d,term_plus,term_minus,term_boundary`.
void write_derivative_csv(const DerivativeVector& d, const std::string& path);

/// Gauss-Legendre nodes and weights on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre_unit(int order);

namespace detail {

/// Adds int_{t0}^{t1} 1/2 z(a + t d)^2 * hat over edge e to `out`.
template <class Field>
void integrate_edge_piece(const PolygonalBoundary& boundary, int e, double t0, double t1, Field& z,
                          const QuadratureRule& rule, Eigen::VectorXd& out) {
  const Point a = boundary.vertex(e);
  const Point d = boundary.edge_vector(e);
  const double scale = (t1 - t0) * boundary.edge_length(e);
  const int j0 = e;
  const int j1 = boundary.wrap(e + 1);
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = t0 + (t1 - t0) * rule.nodes[q];
    const double value = z(Point(a + t * d));
    const double f = 0.5 * value * value * rule.weights[q] * scale;
    out(j0) += f * (1.0 - t);
    out(j1) += f * t;
  }
}

}  // namespace detail

template <class Field>
Eigen::VectorXd boundary_term(const PolygonalBoundary& boundary, Field&& z, int order) {
  const QuadratureRule rule = gauss_legendre_unit(order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(boundary.size());
  for (int e = 0; e < boundary.size(); ++e) detail::integrate_edge_piece(boundary, e, 0.0, 1.0, z, rule, out);
  return out;
}

template <class Gradient>
MonteCarloTerm mc_expectation_term(const PolygonalBoundary& boundary, const ExitSampleSet& exits,
                                   Gradient&& gradient, double m) {
  const int k = boundary.size();
  MonteCarloTerm term{Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k)};
  if (m == 0.0) return term;
  const auto n = static_cast<Eigen::Index>(exits.samples.size());
  if (n == 0) throw SamplingError("positive constant m but no exit samples");

  PointCloud points(2, n);
  for (Eigen::Index s = 0; s < n; ++s) points.col(s) = exits.samples[static_cast<std::size_t>(s)].exit.point;
  const PointCloud grads = gradient(points);

  // Each sample touches at most two vertices; accumulate first and second moments.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(k);
  for (Eigen::Index s = 0; s < n; ++s) {
    const BoundaryLocation& y = exits.samples[static_cast<std::size_t>(s)].exit;
    const Point g = grads.col(s);
    if (y.kind == BoundaryLocation::Kind::edge) {
      const int j0 = boundary.wrap(y.index);
      const int j1 = boundary.wrap(y.index + 1);
      const double c0 = evaluate_basis(boundary, {j0}, y).dot(g);
      const double c1 = evaluate_basis(boundary, {j1}, y).dot(g);
      sum(j0) += c0;
      sum_sq(j0) += c0 * c0;
      sum(j1) += c1;
      sum_sq(j1) += c1 * c1;
    } else {
      const int j = boundary.wrap(y.index);
      const double c = evaluate_basis(boundary, {j}, y).dot(g);
      sum(j) += c;
      sum_sq(j) += c * c;
    }
  }
  const double count = static_cast<double>(n);
  term.values = m * sum / count;
  if (n > 1) {
    const Eigen::VectorXd mean = sum / count;
    const Eigen::VectorXd var =
        ((sum_sq - count * mean.cwiseProduct(mean)) / (count - 1.0)).cwiseMax(0.0);
    term.std_error = m * (var / count).cwiseSqrt();
  }
  return term;
}

}  // namespace probshape
