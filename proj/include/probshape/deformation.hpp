#pragma once

#include <Eigen/Dense>

#include "probshape/geometry.hpp"
#include "probshape/shape_derivative.hpp"

namespace probshape {

/// Symmetric matrix with nonzeros on the diagonal and between cyclic
/// neighbours: entry (j, j+1 mod n) = entry (j+1 mod n, j) = off(j).
class CyclicTridiagonal {
 public:
  CyclicTridiagonal() = default;
  CyclicTridiagonal(Eigen::VectorXd diag, Eigen::VectorXd off);

  [[nodiscard]] Eigen::Index size() const { return diag_.size(); }
  [[nodiscard]] const Eigen::VectorXd& diag() const { return diag_; }
  [[nodiscard]] const Eigen::VectorXd& off() const { return off_; }

  [[nodiscard]] Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::MatrixXd dense() const;

  /// Thomas algorithm with a Sherman-Morrison correction for the two corner
  /// entries. Throws GeometryError for a (numerically) singular system.
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  friend CyclicTridiagonal operator+(const CyclicTridiagonal& a, const CyclicTridiagonal& b);
  friend CyclicTridiagonal operator*(double s, const CyclicTridiagonal& a);

 private:
  Eigen::VectorXd diag_;
  Eigen::VectorXd off_;
};

/// P1 finite elements on a closed chain.
struct SurfaceFem {
  CyclicTridiagonal mass;       ///< per edge (L/6) [[2, 1], [1, 2]]
  CyclicTridiagonal stiffness;  ///< per edge (1/L) [[1, -1], [-1, 1]]
  CyclicTridiagonal system;     ///< stiffness_factor * K + M
  double stiffness_factor = 0.5;
  Eigen::VectorXd lengths;
  Eigen::Matrix2Xd normals;
};

/// Assembles mass, stiffness and the H^1 system. The element integrals are
/// exact for P1. Throws GeometryError on a zero-length edge.
SurfaceFem assemble_system(const PolygonalBoundary& boundary, double stiffness_factor = 0.5);

/// Riesz representative w of d: (stiffness_factor K + M) w = d.
Eigen::VectorXd solve_deformation(const SurfaceFem& fem, const Eigen::VectorXd& d);

/// L^2 projection of the piecewise-defined field w n onto (P1)^2:
/// M W_c = b_c with b_c,i = sum_e n_e,c int_e w v_i.
Eigen::Matrix2Xd galerkin_project(const SurfaceFem& fem, const Eigen::VectorXd& w);

/// Per-vertex bound 3 sum_i |L_ji| sigma_i on |W_j|, where L is the linear map
/// d -> W (H^1 solve followed by the Galerkin projection).
Eigen::VectorXd deformation_noise_bound(const SurfaceFem& fem, const Eigen::VectorXd& sigma);

struct ShapeGradientField {
  Eigen::VectorXd w;
  Eigen::Matrix2Xd W;
  double tau = 0.0;
};

/// Vertices moved to x_j + tau W_j.
///
/// The probabilistic derivative is the classical one with flipped sign, so w
/// already points downhill and the update uses a plus sign. Throws
/// GeometryError if the moved chain self-intersects or flips orientation.
PolygonalBoundary update_vertices(const PolygonalBoundary& boundary, const Eigen::Matrix2Xd& W, double tau);

}  // namespace probshape
