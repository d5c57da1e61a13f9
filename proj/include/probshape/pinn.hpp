#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probshape/adam.hpp"
#include "probshape/geometry.hpp"
#include "probshape/network.hpp"
#include "probshape/rng.hpp"

namespace probshape {

/// Interior points cover the whole hold-all; boundary points lie on the chain,
/// which acts as an interior Dirichlet interface.
struct CollocationSet {
  PointCloud interior;
  PointCloud boundary;
};

/// Interior: i.i.d. uniform on `holdall`. Boundary: ceil(n_boundary / k)
/// points uniform on every edge regardless of its length.
CollocationSet sample_collocation(const PolygonalBoundary& boundary, const Rectangle& holdall,
                                  Eigen::Index n_interior, Eigen::Index n_boundary, Rng& rng);

/// Prefactors of the two residual sums.
struct LossWeights {
  double boundary = 0.0;
  double interior = 0.0;

  /// 2|X_bdry| and |X_int|, the prefactors of the PINN loss as printed.
  static LossWeights printed(const CollocationSet& c) {
    return {2.0 * static_cast<double>(c.boundary.cols()), static_cast<double>(c.interior.cols())};
  }
  /// 2 and 1: the printed loss with each sum replaced by a mean times its count.
  static LossWeights mean() { return {2.0, 1.0}; }
};

enum class LossWeighting { printed, mean };

inline LossWeights make_weights(LossWeighting mode, const CollocationSet& c) {
  return mode == LossWeighting::printed ? LossWeights::printed(c) : LossWeights::mean();
}

/// (w_b sum_bdry v^2 + w_i sum_int (Lap v + 1)^2) / (|X_bdry| + |X_int|).
double pinn_loss(const NeuralLevelSetd& net, const CollocationSet& colloc, const LossWeights& weights);

/// Same loss; fills `grad` (resized as needed) with d loss / d theta.
double pinn_loss_and_gradient(const NeuralLevelSetd& net, const CollocationSet& colloc,
                              const LossWeights& weights, MlpParameters<double>& grad);

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double best_loss = 0.0;
};

struct TrainOptions {
  std::int64_t steps = 5000;
  Eigen::Index n_interior = 5000;
  Eigen::Index n_boundary = 2000;
  LossWeighting weighting = LossWeighting::printed;
  PiecewiseConstantSchedule schedule = PiecewiseConstantSchedule::two_phase(5000, 1e-3, 1e-4, 0.6);
};

struct TrainResult {
  NeuralLevelSetd net;             ///< parameters with the lowest loss seen
  std::vector<LossRecord> history;
  double best_loss = 0.0;
  /// Mean-weighted loss of `net` on the training collocation set.
  double mean_loss = 0.0;
};

/// Adam on a fixed collocation set drawn once for the given boundary. Throws
/// TrainingError on a non-finite loss.
TrainResult train(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                  const Rectangle& holdall, const TrainOptions& options, Rng& rng);

/// Warm-started training on fresh collocation points, capped at `max_steps`.
TrainResult transfer_train(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                           const Rectangle& holdall, const TrainOptions& options,
                           std::int64_t max_steps, Rng& rng);

/// `restarts` independent Glorot initializations, keeping the lowest final loss.
TrainResult train_with_restarts(const std::vector<int>& widths, const PolygonalBoundary& boundary,
                                const Rectangle& holdall, const TrainOptions& options, int restarts,
                                Rng& rng);

/// CSV `step,loss,best_loss`.
void write_loss_history(const std::vector<LossRecord>& history, const std::string& path);

}  // namespace probshape
