#include "probshape/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "probshape/errors.hpp"

namespace probshape {
namespace {

double cross(const Point& u, const Point& v) { return u.x() * v.y() - u.y() * v.x(); }

int orientation(const Point& a, const Point& b, const Point& c) {
  const double o = cross(b - a, c - a);
  return (o > 0.0) - (o < 0.0);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

double segment_distance(const Point& a, const Point& b, const Point& x) {
  const Point d = b - a;
  const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - x).norm();
}

}  // namespace

PolygonalBoundary::PolygonalBoundary(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  const std::size_t k = vertices_.size();
  if (k < 3) throw GeometryError("polygonal chain needs at least 3 vertices");
  for (std::size_t j = 0; j < k; ++j) {
    if (!vertices_[j].allFinite()) throw GeometryError("non-finite vertex");
    if ((vertices_[(j + 1) % k] - vertices_[j]).norm() == 0.0)
      throw GeometryError("zero-length edge at vertex " + std::to_string(j));
  }
  const double area = signed_area(vertices_);
  if (area == 0.0) throw GeometryError("polygonal chain encloses no area");
  if (area < 0.0) std::reverse(vertices_.begin(), vertices_.end());
  if (!is_simple(vertices_)) throw GeometryError("polygonal chain self-intersects");

  normals_.reserve(k);
  lengths_.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Point d = vertices_[(j + 1) % k] - vertices_[j];
    const double length = d.norm();
    lengths_.push_back(length);
    normals_.emplace_back(d.y() / length, -d.x() / length);
  }
}

PolygonalBoundary PolygonalBoundary::circle(const Point& center, double radius, int k) {
  return ellipse(center, radius, radius, k);
}

PolygonalBoundary PolygonalBoundary::ellipse(const Point& center, double a, double b, int k) {
  if (k < 3 || !(a > 0.0) || !(b > 0.0)) throw GeometryError("invalid ellipse discretization");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / k;
    v.emplace_back(center.x() + a * std::cos(theta), center.y() + b * std::sin(theta));
  }
  return PolygonalBoundary(std::move(v));
}

double PolygonalBoundary::perimeter() const {
  double p = 0.0;
  for (double l : lengths_) p += l;
  return p;
}

double signed_area(const std::vector<Point>& vertices) {
  const std::size_t k = vertices.size();
  double twice = 0.0;
  for (std::size_t j = 0; j < k; ++j) twice += cross(vertices[j], vertices[(j + 1) % k]);
  return 0.5 * twice;
}

bool is_simple(const std::vector<Point>& vertices) {
  const std::size_t k = vertices.size();
  if (k < 3) return false;
  for (std::size_t i = 0; i < k; ++i) {
    const Point& a = vertices[i];
    const Point& b = vertices[(i + 1) % k];
    const Point& c = vertices[(i + 2) % k];
    // Adjacent edges may only share their common vertex.
    if (cross(b - a, c - b) == 0.0 && (b - a).dot(c - b) < 0.0) return false;
    for (std::size_t j = i + 2; j < k; ++j) {
      if (i == 0 && j == k - 1) continue;  // adjacent through the closure
      if (segments_intersect(a, b, vertices[j], vertices[(j + 1) % k])) return false;
    }
  }
  return true;
}

double distance_to_chain(const PolygonalBoundary& boundary, const Point& x) {
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < boundary.size(); ++e)
    best = std::min(best, segment_distance(boundary.vertex(e), boundary.vertex(e + 1), x));
  return best;
}

bool contains_exact(const PolygonalBoundary& boundary, const Point& x) {
  if (distance_to_chain(boundary, x) <= kEdgeBand) return true;
  bool inside = false;
  for (int e = 0; e < boundary.size(); ++e) {
    const Point& a = boundary.vertex(e);
    const Point& b = boundary.vertex(e + 1);
    if ((a.y() > x.y()) != (b.y() > x.y())) {
      const double xs = a.x() + (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y());
      if (x.x() < xs) inside = !inside;
    }
  }
  return inside;
}

BoundaryLocation project_to_boundary(const PolygonalBoundary& boundary, const Point& x) {
  BoundaryLocation best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int e = 0; e < boundary.size(); ++e) {
    const Point& v = boundary.vertex(e);
    const Point d = boundary.edge_vector(e);
    const double t = (x - v).dot(d) / d.squaredNorm();
    BoundaryLocation candidate;
    if (t <= 0.0 || t >= 1.0) {
      candidate.kind = BoundaryLocation::Kind::vertex;
      candidate.index = t <= 0.0 ? e : boundary.wrap(e + 1);
      candidate.point = boundary.vertex(candidate.index);
    } else {
      const Point& n = boundary.normal(e);
      candidate.kind = BoundaryLocation::Kind::edge;
      candidate.index = e;
      candidate.t = t;
      candidate.point = x - n * n.dot(x - v);
    }
    const double dist = (candidate.point - x).norm();
    if (dist < best_distance) {
      best_distance = dist;
      best = candidate;
    }
  }
  return best;
}

double TrackingData::distance_to_curve(const Point& x) const {
  const Point d = x - center;
  auto foot = [&](double th) { return Point(a * std::cos(th), b * std::sin(th)); };
  double theta = 0.0;
  double best = std::numeric_limits<double>::infinity();
  constexpr int kCoarse = 256;
  for (int i = 0; i < kCoarse; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kCoarse;
    const double dist = (foot(th) - d).squaredNorm();
    if (dist < best) {
      best = dist;
      theta = th;
    }
  }
  for (int it = 0; it < 50; ++it) {
    const Point p = foot(theta);
    const Point dp(-a * std::sin(theta), b * std::cos(theta));
    const Point ddp(-a * std::cos(theta), -b * std::sin(theta));
    const double g = (p - d).dot(dp);
    const double h = dp.squaredNorm() + (p - d).dot(ddp);
    if (h <= 0.0) break;
    const double step = g / h;
    theta -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return std::min(std::sqrt(best), (foot(theta) - d).norm());
}

Eigen::RowVectorXd tracking_values(const TrackingData& z, const PointCloud& x) {
  Eigen::RowVectorXd out(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = z(x.col(i));
  return out;
}

void write_boundary_csv(const PolygonalBoundary& boundary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  for (const auto& v : boundary.vertices()) out << v.x() << ',' << v.y() << '\n';
}

PolygonalBoundary read_boundary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<Point> vertices;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x = 0.0;
    double y = 0.0;
    if (!(fields >> x >> y)) throw std::runtime_error("malformed vertex line in " + path);
    vertices.emplace_back(x, y);
  }
  return PolygonalBoundary(std::move(vertices));
}

}  // namespace probshape
