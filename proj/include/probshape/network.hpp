#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "probshape/rng.hpp"

namespace probshape {

/// Weight matrices and bias vectors of a fully connected network. The same
/// layout is used for parameters, gradients and Adam moments.
template <typename Scalar>
struct MlpParameters {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpParameters zeros_like(const MlpParameters& other) {
    MlpParameters out;
    for (const auto& w : other.weights) out.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : other.biases) out.biases.push_back(Vector::Zero(b.size()));
    return out;
  }

  [[nodiscard]] Eigen::Index size() const {
    Eigen::Index n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  [[nodiscard]] bool same_shape(const MlpParameters& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols())
        return false;
      if (biases[l].size() != other.biases[l].size()) return false;
    }
    return true;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  /// Flat view in layer order, weights (row-major) before biases of each layer.
  [[nodiscard]] Vector flatten() const {
    Vector flat(size());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) flat(pos++) = weights[l](r, c);
      for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat(pos++) = biases[l](i);
    }
    return flat;
  }

  void unflatten(const Vector& flat) {
    if (flat.size() != size()) throw std::invalid_argument("unflatten: size mismatch");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = flat(pos++);
      for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l](i) = flat(pos++);
    }
  }
};

/// Fully connected network R^2 -> R, tanh on hidden layers, identity output.
///
/// The trained network plays two roles: approximation of the state and an
/// implicit description of the current domain as {v > 0}.
template <typename Scalar>
class NeuralLevelSet {
 public:
  using Parameters = MlpParameters<Scalar>;
  using Matrix = typename Parameters::Matrix;
  using Vector = typename Parameters::Vector;

  NeuralLevelSet() : NeuralLevelSet(default_widths()) {}

  /// Zero-initialized network with the given layer widths (input 2, output 1).
  explicit NeuralLevelSet(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2 || widths_.front() != 2 || widths_.back() != 1)
      throw std::invalid_argument("layer widths must start with 2 and end with 1");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l + 1] <= 0) throw std::invalid_argument("layer widths must be positive");
      params_.weights.push_back(Matrix::Zero(widths_[l + 1], widths_[l]));
      params_.biases.push_back(Vector::Zero(widths_[l + 1]));
    }
  }

  /// Glorot-uniform weights, zero biases.
  static NeuralLevelSet glorot(std::vector<int> widths, Rng& rng) {
    NeuralLevelSet net(std::move(widths));
    for (auto& w : net.params_.weights) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = Scalar(rng.uniform(-limit, limit));
    }
    return net;
  }

  static std::vector<int> default_widths() { return {2, 20, 20, 1}; }

  [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
  [[nodiscard]] std::size_t layer_count() const { return params_.weights.size(); }
  [[nodiscard]] const Parameters& params() const { return params_; }

  /// Replaces all parameters; shapes must match.
  void set_params(Parameters params) {
    if (!params.same_shape(params_)) throw std::invalid_argument("set_params: shape mismatch");
    params_ = std::move(params);
  }
  Parameters& mutable_params() { return params_; }

 private:
  std::vector<int> widths_;
  Parameters params_;
};

using NeuralLevelSetd = NeuralLevelSet<double>;

namespace detail {

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// tanh via 1 - 2 / (exp(2z) + 1), which vectorizes; absolute error ~1e-16.
template <typename Derived>
auto fast_tanh(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) - Scalar(2) / ((Scalar(2) * z.array()).exp() + Scalar(1))).matrix().eval();
}

/// Cached quantities of a batched second-order forward pass.
///
/// Values and derivatives travel side by side as column blocks
/// [a | da/dx1 | da/dx2 | d2a/dx1^2 | d2a/dx2^2], each N columns wide, so
/// every layer needs a single matrix product.
template <typename Scalar>
struct TaylorTape {
  using Matrix = DynMatrix<Scalar>;
  Eigen::Index points = 0;
  std::vector<Matrix> input;      // stacked layer inputs
  std::vector<Matrix> pre;        // stacked pre-activations [z | dz1 | dz2 | ddz1 | ddz2]
  std::vector<Matrix> s1, s2, s3; // first to third tanh derivative at z, hidden layers only
  Matrix value;                   // 1 x N
  Matrix laplacian;               // 1 x N
};

/// Forward pass carrying value, first and pure second derivatives per input
/// direction. Exact up to rounding, using tanh' = 1 - t^2,
/// tanh'' = -2 t (1 - t^2) and tanh''' = (1 - t^2)(6 t^2 - 2).
template <typename Scalar>
TaylorTape<Scalar> taylor_forward(const NeuralLevelSet<Scalar>& net,
                                  const Eigen::Matrix<Scalar, 2, Eigen::Dynamic>& x, bool keep) {
  using Matrix = DynMatrix<Scalar>;
  const auto& p = net.params();
  const std::size_t layers = net.layer_count();
  const Eigen::Index n = x.cols();
  TaylorTape<Scalar> tape;
  tape.points = n;

  Matrix stacked = Matrix::Zero(2, 5 * n);
  stacked.leftCols(n) = x;
  stacked.block(0, n, 1, n).setOnes();
  stacked.block(1, 2 * n, 1, n).setOnes();

  for (std::size_t l = 0; l < layers; ++l) {
    Matrix pre = p.weights[l] * stacked;
    pre.leftCols(n).colwise() += p.biases[l];
    if (keep) tape.input.push_back(std::move(stacked));
    if (l + 1 == layers) {
      tape.value = pre.leftCols(n);
      tape.laplacian = pre.middleCols(3 * n, n) + pre.middleCols(4 * n, n);
      if (keep) tape.pre.push_back(std::move(pre));
      break;
    }
    Matrix t = fast_tanh(pre.leftCols(n));
    Matrix s1 = (Scalar(1) - t.array().square()).matrix();
    Matrix s2 = (Scalar(-2) * t.array() * s1.array()).matrix();
    stacked.resize(pre.rows(), 5 * n);
    for (int k = 0; k < 2; ++k) {
      const auto dz = pre.middleCols((1 + k) * n, n).array();
      const auto ddz = pre.middleCols((3 + k) * n, n).array();
      stacked.middleCols((1 + k) * n, n) = (s1.array() * dz).matrix();
      stacked.middleCols((3 + k) * n, n) = (s2.array() * dz.square() + s1.array() * ddz).matrix();
    }
    if (keep) {
      tape.s3.push_back((s1.array() * (Scalar(6) * t.array().square() - Scalar(2))).matrix());
      tape.s1.push_back(std::move(s1));
      tape.s2.push_back(std::move(s2));
      tape.pre.push_back(std::move(pre));
    }
    stacked.leftCols(n) = t;
  }
  return tape;
}

}  // namespace detail

template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using RowValues = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Network values at each column of `x`.
template <typename Scalar>
RowValues<Scalar> values(const NeuralLevelSet<Scalar>& net, const Points2<Scalar>& x) {
  const auto& p = net.params();
  detail::DynMatrix<Scalar> a = x;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    detail::DynMatrix<Scalar> z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    if (l + 1 == net.layer_count()) return z;
    a = detail::fast_tanh(z);
  }
  return {};
}

/// Spatial gradients (2 x N) by reverse propagation of tanh derivatives.
template <typename Scalar>
Points2<Scalar> gradients(const NeuralLevelSet<Scalar>& net, const Points2<Scalar>& x) {
  using Matrix = detail::DynMatrix<Scalar>;
  const auto& p = net.params();
  const std::size_t layers = net.layer_count();
  std::vector<Matrix> slopes;
  Matrix a = x;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Matrix z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    a = detail::fast_tanh(z);
    slopes.push_back((Scalar(1) - a.array().square()).matrix());
  }
  Matrix adj = p.weights[layers - 1].transpose().replicate(1, x.cols());
  for (std::size_t l = layers - 1; l-- > 0;) {
    adj = (adj.array() * slopes[l].array()).matrix();
    adj = p.weights[l].transpose() * adj;
  }
  return adj;
}

/// Laplacians of the network at each column of `x`.
template <typename Scalar>
RowValues<Scalar> laplacians(const NeuralLevelSet<Scalar>& net, const Points2<Scalar>& x) {
  return detail::taylor_forward(net, x, false).laplacian;
}

template <typename Scalar>
Scalar forward(const NeuralLevelSet<Scalar>& net, const Point2<Scalar>& x) {
  return values(net, Points2<Scalar>(x))(0);
}

template <typename Scalar>
Point2<Scalar> gradient(const NeuralLevelSet<Scalar>& net, const Point2<Scalar>& x) {
  return gradients(net, Points2<Scalar>(x)).col(0);
}

template <typename Scalar>
Scalar laplacian(const NeuralLevelSet<Scalar>& net, const Point2<Scalar>& x) {
  return laplacians(net, Points2<Scalar>(x))(0);
}

/// Adds sum_i weight_i * d v(x_i) / d theta to `grad`.
template <typename Scalar>
void accumulate_value_gradient(const NeuralLevelSet<Scalar>& net, const Points2<Scalar>& x,
                               const RowValues<Scalar>& weight, MlpParameters<Scalar>& grad) {
  using Matrix = detail::DynMatrix<Scalar>;
  const auto& p = net.params();
  const std::size_t layers = net.layer_count();
  std::vector<Matrix> inputs;
  std::vector<Matrix> slopes;
  Matrix a = x;
  for (std::size_t l = 0; l < layers; ++l) {
    inputs.push_back(a);
    if (l + 1 == layers) break;
    Matrix z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    a = detail::fast_tanh(z);
    slopes.push_back((Scalar(1) - a.array().square()).matrix());
  }
  Matrix zbar = weight;
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() += zbar * inputs[l].transpose();
    grad.biases[l] += zbar.rowwise().sum();
    if (l == 0) break;
    zbar = ((p.weights[l].transpose() * zbar).array() * slopes[l - 1].array()).matrix();
  }
}

/// Reverse pass through a kept Taylor tape with Laplacian adjoint `weight`.
template <typename Scalar>
void accumulate_laplacian_gradient_from_tape(const NeuralLevelSet<Scalar>& net,
                                             const detail::TaylorTape<Scalar>& tape,
                                             const RowValues<Scalar>& weight,
                                             MlpParameters<Scalar>& grad) {
  using Matrix = detail::DynMatrix<Scalar>;
  const auto& p = net.params();
  const std::size_t layers = net.layer_count();
  const Eigen::Index n = tape.points;

  // Adjoint of the stacked layer output; at the network output only the
  // second-derivative blocks feed the Laplacian.
  Matrix out_bar = Matrix::Zero(1, 5 * n);
  out_bar.middleCols(3 * n, n) = weight;
  out_bar.middleCols(4 * n, n) = weight;

  Matrix pre_bar;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 == layers) {
      pre_bar = out_bar;
    } else {
      const auto s1 = tape.s1[l].array();
      const auto s2 = tape.s2[l].array();
      const auto s3 = tape.s3[l].array();
      const Matrix& pre = tape.pre[l];
      pre_bar.resize(pre.rows(), 5 * n);
      pre_bar.leftCols(n) = (out_bar.leftCols(n).array() * s1).matrix();
      for (int k = 0; k < 2; ++k) {
        const auto dz = pre.middleCols((1 + k) * n, n).array();
        const auto ddz = pre.middleCols((3 + k) * n, n).array();
        const auto dbar = out_bar.middleCols((1 + k) * n, n).array();
        const auto ddbar = out_bar.middleCols((3 + k) * n, n).array();
        pre_bar.leftCols(n).array() += dbar * s2 * dz + ddbar * (s3 * dz.square() + s2 * ddz);
        pre_bar.middleCols((1 + k) * n, n) = (dbar * s1 + Scalar(2) * ddbar * s2 * dz).matrix();
        pre_bar.middleCols((3 + k) * n, n) = (ddbar * s1).matrix();
      }
    }
    grad.weights[l].noalias() += pre_bar * tape.input[l].transpose();
    grad.biases[l] += pre_bar.leftCols(n).rowwise().sum();
    if (l == 0) break;
    out_bar.noalias() = p.weights[l].transpose() * pre_bar;
  }
}

/// Adds sum_i weight_i * d (Laplacian v)(x_i) / d theta to `grad`; returns the Laplacians.
template <typename Scalar>
RowValues<Scalar> accumulate_laplacian_gradient(const NeuralLevelSet<Scalar>& net,
                                                const Points2<Scalar>& x,
                                                const RowValues<Scalar>& weight,
                                                MlpParameters<Scalar>& grad) {
  auto tape = detail::taylor_forward(net, x, true);
  accumulate_laplacian_gradient_from_tape(net, tape, weight, grad);
  return tape.laplacian;
}

}  // namespace probshape
