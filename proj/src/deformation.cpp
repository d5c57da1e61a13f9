#include "probshape/deformation.hpp"

#include <cmath>
#include <limits>

#include "probshape/errors.hpp"

namespace probshape {
namespace {

/// Thomas algorithm for the symmetric tridiagonal part (no corners).
Eigen::VectorXd thomas(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  Eigen::VectorXd c(n);
  Eigen::VectorXd x(n);
  double pivot = diag(0);
  const double tiny = std::numeric_limits<double>::epsilon() * diag.cwiseAbs().maxCoeff();
  if (std::abs(pivot) <= tiny) throw GeometryError("singular deformation system");
  x(0) = rhs(0) / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    c(i - 1) = off(i - 1) / pivot;
    pivot = diag(i) - off(i - 1) * c(i - 1);
    if (std::abs(pivot) <= tiny) throw GeometryError("singular deformation system");
    x(i) = (rhs(i) - off(i - 1) * x(i - 1)) / pivot;
  }
  for (Eigen::Index i = n - 1; i-- > 0;) x(i) -= c(i) * x(i + 1);
  return x;
}

}  // namespace

CyclicTridiagonal::CyclicTridiagonal(Eigen::VectorXd diag, Eigen::VectorXd off)
    : diag_(std::move(diag)), off_(std::move(off)) {
  if (diag_.size() != off_.size() || diag_.size() < 3)
    throw std::invalid_argument("cyclic tridiagonal matrix needs matching sizes >= 3");
}

Eigen::VectorXd CyclicTridiagonal::operator*(const Eigen::VectorXd& x) const {
  const Eigen::Index n = size();
  Eigen::VectorXd y = diag_.cwiseProduct(x);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index next = (j + 1) % n;
    y(j) += off_(j) * x(next);
    y(next) += off_(j) * x(j);
  }
  return y;
}

Eigen::MatrixXd CyclicTridiagonal::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index next = (j + 1) % n;
    a(j, j) += diag_(j);
    a(j, next) += off_(j);
    a(next, j) += off_(j);
  }
  return a;
}

Eigen::VectorXd CyclicTridiagonal::solve(const Eigen::VectorXd& rhs) const {
  const Eigen::Index n = size();
  if (rhs.size() != n) throw std::invalid_argument("solve: right-hand side size mismatch");
  const double corner = off_(n - 1);
  const double gamma = -diag_(0);
  if (gamma == 0.0) throw GeometryError("singular deformation system");

  // A = T + u v^T with u = (gamma, 0, ..., corner), v = (1, 0, ..., corner / gamma).
  Eigen::VectorXd modified = diag_;
  modified(0) -= gamma;
  modified(n - 1) -= corner * corner / gamma;
  const Eigen::VectorXd band = off_.head(n - 1);
  const Eigen::VectorXd y = thomas(modified, band, rhs);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u(0) = gamma;
  u(n - 1) = corner;
  const Eigen::VectorXd q = thomas(modified, band, u);
  const double vy = y(0) + corner / gamma * y(n - 1);
  const double vq = q(0) + corner / gamma * q(n - 1);
  if (std::abs(1.0 + vq) < std::numeric_limits<double>::epsilon())
    throw GeometryError("singular deformation system");
  return y - (vy / (1.0 + vq)) * q;
}

CyclicTridiagonal operator+(const CyclicTridiagonal& a, const CyclicTridiagonal& b) {
  return {a.diag_ + b.diag_, a.off_ + b.off_};
}

CyclicTridiagonal operator*(double s, const CyclicTridiagonal& a) { return {s * a.diag_, s * a.off_}; }

SurfaceFem assemble_system(const PolygonalBoundary& boundary, double stiffness_factor) {
  const int k = boundary.size();
  SurfaceFem fem;
  fem.stiffness_factor = stiffness_factor;
  fem.lengths.resize(k);
  fem.normals.resize(2, k);
  Eigen::VectorXd m_diag = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd m_off(k);
  Eigen::VectorXd k_diag = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd k_off(k);
  for (int e = 0; e < k; ++e) {
    const double length = boundary.edge_length(e);
    if (!(length > 0.0)) throw GeometryError("zero-length edge " + std::to_string(e));
    fem.lengths(e) = length;
    fem.normals.col(e) = boundary.normal(e);
    const int next = boundary.wrap(e + 1);
    m_diag(e) += length / 3.0;
    m_diag(next) += length / 3.0;
    m_off(e) = length / 6.0;
    k_diag(e) += 1.0 / length;
    k_diag(next) += 1.0 / length;
    k_off(e) = -1.0 / length;
  }
  fem.mass = CyclicTridiagonal(m_diag, m_off);
  fem.stiffness = CyclicTridiagonal(k_diag, k_off);
  fem.system = stiffness_factor * fem.stiffness + fem.mass;
  return fem;
}

Eigen::VectorXd solve_deformation(const SurfaceFem& fem, const Eigen::VectorXd& d) {
  if (d.size() != fem.system.size()) throw std::invalid_argument("derivative size does not match the chain");
  return fem.system.solve(d);
}

Eigen::Matrix2Xd galerkin_project(const SurfaceFem& fem, const Eigen::VectorXd& w) {
  const Eigen::Index k = fem.lengths.size();
  if (w.size() != k) throw std::invalid_argument("w size does not match the chain");
  // The normal is constant on each edge, so b_c gathers the element mass
  // products (L/6)(2 w_i + w_other) scaled by that edge's normal component.
  Eigen::Matrix2Xd b = Eigen::Matrix2Xd::Zero(2, k);
  for (Eigen::Index e = 0; e < k; ++e) {
    const Eigen::Index next = (e + 1) % k;
    const double length = fem.lengths(e);
    const double at_start = length / 6.0 * (2.0 * w(e) + w(next));
    const double at_end = length / 6.0 * (w(e) + 2.0 * w(next));
    b.col(e) += at_start * fem.normals.col(e);
    b.col(next) += at_end * fem.normals.col(e);
  }
  Eigen::Matrix2Xd W(2, k);
  W.row(0) = fem.mass.solve(b.row(0).transpose()).transpose();
  W.row(1) = fem.mass.solve(b.row(1).transpose()).transpose();
  return W;
}

Eigen::VectorXd deformation_noise_bound(const SurfaceFem& fem, const Eigen::VectorXd& sigma) {
  const Eigen::Index k = fem.lengths.size();
  if (sigma.size() != k) throw std::invalid_argument("sigma size does not match the chain");
  Eigen::Matrix2Xd bound = Eigen::Matrix2Xd::Zero(2, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (sigma(i) == 0.0) continue;
    const Eigen::Matrix2Xd column = galerkin_project(fem, solve_deformation(fem, Eigen::VectorXd::Unit(k, i)));
    bound += sigma(i) * column.cwiseAbs();
  }
  return 3.0 * bound.colwise().norm().transpose();
}

PolygonalBoundary update_vertices(const PolygonalBoundary& boundary, const Eigen::Matrix2Xd& W, double tau) {
  if (W.cols() != boundary.size()) throw std::invalid_argument("W size does not match the chain");
  if (!(tau >= 0.0) || !W.allFinite()) throw std::invalid_argument("update needs finite W and tau >= 0");
  std::vector<Point> moved;
  moved.reserve(static_cast<std::size_t>(boundary.size()));
  for (int j = 0; j < boundary.size(); ++j) moved.emplace_back(boundary.vertex(j) + tau * W.col(j));
  if (!(signed_area(moved) > 0.0)) throw GeometryError("vertex update flipped the chain orientation");
  if (!is_simple(moved)) throw GeometryError("vertex update produced a self-intersecting chain; step too long");
  return PolygonalBoundary(std::move(moved));
}

}  // namespace probshape
