#pragma once

#include <cmath>
#include <vector>

#include "probshape/geometry.hpp"
#include "probshape/network.hpp"
#include "probshape/rng.hpp"

namespace testing {

using probshape::NeuralLevelSetd;
using probshape::Point;

/// Glorot weights plus uniform biases in [-0.5, 0.5].
inline NeuralLevelSetd random_net(const std::vector<int>& widths, probshape::Rng& rng) {
  NeuralLevelSetd net = NeuralLevelSetd::glorot(widths, rng);
  for (auto& b : net.mutable_params().biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
  return net;
}

/// Layer-by-layer evaluation with explicit loops and std::tanh.
inline double loop_forward(const NeuralLevelSetd& net, double x1, double x2) {
  std::vector<double> a{x1, x2};
  const auto& p = net.params();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    std::vector<double> z(static_cast<std::size_t>(p.weights[l].rows()));
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
      double s = p.biases[l](r);
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) s += p.weights[l](r, c) * a[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = l + 1 == p.weights.size() ? s : std::tanh(s);
    }
    a = z;
  }
  return a[0];
}

inline Point fd_gradient(const NeuralLevelSetd& net, const Point& x, double h) {
  return {(loop_forward(net, x.x() + h, x.y()) - loop_forward(net, x.x() - h, x.y())) / (2 * h),
          (loop_forward(net, x.x(), x.y() + h) - loop_forward(net, x.x(), x.y() - h)) / (2 * h)};
}

inline double fd_laplacian(const NeuralLevelSetd& net, const Point& x, double h) {
  const double c = loop_forward(net, x.x(), x.y());
  return (loop_forward(net, x.x() + h, x.y()) + loop_forward(net, x.x() - h, x.y()) +
          loop_forward(net, x.x(), x.y() + h) + loop_forward(net, x.x(), x.y() - h) - 4 * c) /
         (h * h);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace testing
