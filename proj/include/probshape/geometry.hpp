#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "probshape/rng.hpp"

namespace probshape {

using Point = Eigen::Vector2d;
using PointCloud = Eigen::Matrix2Xd;

/// Points within this distance of an edge count as inside.
inline constexpr double kEdgeBand = 1e-12;

/// Axis-aligned rectangle used as hold-all and as reference sampling region.
struct Rectangle {
  Point lower{0.0, 0.0};
  Point upper{1.0, 1.0};

  [[nodiscard]] double area() const { return (upper - lower).prod(); }
  [[nodiscard]] bool contains(const Point& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
  [[nodiscard]] bool degenerate() const { return !((upper - lower).array() > 0.0).all(); }
  Point sample(Rng& rng) const {
    return {rng.uniform(lower.x(), upper.x()), rng.uniform(lower.y(), upper.y())};
  }
};

/// Closed polygonal chain with counter-clockwise vertex order.
///
/// Edge j runs from vertex j to vertex j+1 (mod k); its outer normal is the
/// edge tangent rotated clockwise. The chain is immutable; updates create a
/// new value.
class PolygonalBoundary {
 public:
  /// Validates the chain (k >= 3, no repeated consecutive vertices, simple) and
  /// reverses clockwise input. Throws GeometryError.
  explicit PolygonalBoundary(std::vector<Point> vertices);

  static PolygonalBoundary circle(const Point& center, double radius, int k);
  /// Vertices at equal parameter spacing on the ellipse, starting on the major axis.
  static PolygonalBoundary ellipse(const Point& center, double a, double b, int k);

  [[nodiscard]] int size() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] const std::vector<Point>& vertices() const { return vertices_; }
  [[nodiscard]] const Point& vertex(int j) const { return vertices_[static_cast<std::size_t>(wrap(j))]; }
  [[nodiscard]] const Point& normal(int edge) const { return normals_[static_cast<std::size_t>(wrap(edge))]; }
  [[nodiscard]] double edge_length(int edge) const { return lengths_[static_cast<std::size_t>(wrap(edge))]; }
  [[nodiscard]] Point edge_vector(int edge) const { return vertex(edge + 1) - vertex(edge); }
  [[nodiscard]] double perimeter() const;
  [[nodiscard]] int wrap(int j) const {
    const int k = size();
    return ((j % k) + k) % k;
  }

 private:
  std::vector<Point> vertices_;
  std::vector<Point> normals_;
  std::vector<double> lengths_;
};

/// Shoelace area, positive for counter-clockwise order.
double signed_area(const std::vector<Point>& vertices);
inline double signed_area(const PolygonalBoundary& boundary) { return signed_area(boundary.vertices()); }

/// True when no two non-adjacent edges intersect and adjacent edges only share their vertex.
bool is_simple(const std::vector<Point>& vertices);

/// Crossing-number point-in-polygon test; points within kEdgeBand of the chain are inside.
bool contains_exact(const PolygonalBoundary& boundary, const Point& x);

double distance_to_chain(const PolygonalBoundary& boundary, const Point& x);

/// Where a projected point sits on the chain.
struct BoundaryLocation {
  enum class Kind { edge, vertex };
  Point point;
  Kind kind = Kind::edge;
  int index = 0;     ///< edge index or vertex index
  double t = 0.0;    ///< edge parameter from vertex `index` towards `index+1`; 0 for vertices
};

/// Closest point on the chain.
///
/// For an edge e with normal n and start v the foot point is
/// (I - n n^T) x + n n^T v; when no foot point of the nearest edges falls
/// inside its segment, x lies in the normal cone of a vertex and the vertex
/// is returned.
BoundaryLocation project_to_boundary(const PolygonalBoundary& boundary, const Point& x);

/// Exact solution of -Lap u = 1 on an ellipse, extended by zero.
struct TrackingData {
  Point center{0.5, 0.5};
  double a = 0.4;  ///< semi-axis along x
  double b = 0.3;  ///< semi-axis along y

  /// Peak value a^2 b^2 / (2 (a^2 + b^2)) at the center.
  [[nodiscard]] double peak() const { return a * a * b * b / (2.0 * (a * a + b * b)); }
  /// 1 - (x1-c1)^2/a^2 - (x2-c2)^2/b^2, positive inside the ellipse.
  [[nodiscard]] double bracket(const Point& x) const {
    const Point d = x - center;
    return 1.0 - d.x() * d.x() / (a * a) - d.y() * d.y() / (b * b);
  }
  double operator()(const Point& x) const {
    const double s = bracket(x);
    return s > 0.0 ? peak() * s : 0.0;
  }
  /// Distance from x to the ellipse curve (point-to-ellipse, Newton on the foot parameter).
  [[nodiscard]] double distance_to_curve(const Point& x) const;
};

inline double tracking_data(const TrackingData& z, const Point& x) { return z(x); }

/// Row of tracking values for each column of `x`.
Eigen::RowVectorXd tracking_values(const TrackingData& z, const PointCloud& x);

/// CSV snapshot: one `x,y` line per vertex, closure implicit.
void write_boundary_csv(const PolygonalBoundary& boundary, const std::string& path);
PolygonalBoundary read_boundary_csv(const std::string& path);

}  // namespace probshape
