#include "probshape/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "probshape/errors.hpp"

namespace probshape {

namespace {
constexpr Eigen::Index kBlock = 256;
}  // namespace

CollocationSet sample_collocation(const PolygonalBoundary& boundary, const Rectangle& holdall,
                                  Eigen::Index n_interior, Eigen::Index n_boundary, Rng& rng) {
  if (holdall.degenerate()) throw GeometryError("degenerate hold-all rectangle");
  if (n_interior < 0 || n_boundary < 0) throw std::invalid_argument("negative collocation count");
  CollocationSet c;
  c.interior.resize(2, n_interior);
  for (Eigen::Index i = 0; i < n_interior; ++i) c.interior.col(i) = holdall.sample(rng);

  const int k = boundary.size();
  const Eigen::Index per_edge = (n_boundary + k - 1) / k;
  c.boundary.resize(2, per_edge * k);
  Eigen::Index col = 0;
  for (int e = 0; e < k; ++e) {
    const Point& a = boundary.vertex(e);
    const Point d = boundary.edge_vector(e);
    for (Eigen::Index i = 0; i < per_edge; ++i) c.boundary.col(col++) = a + rng.uniform() * d;
  }
  return c;
}

double pinn_loss(const NeuralLevelSetd& net, const CollocationSet& colloc, const LossWeights& weights) {
  const double count = static_cast<double>(colloc.boundary.cols() + colloc.interior.cols());
  double boundary_sum = 0.0;
  double interior_sum = 0.0;
  if (colloc.boundary.cols() > 0) boundary_sum = values(net, colloc.boundary).squaredNorm();
  if (colloc.interior.cols() > 0)
    interior_sum = (laplacians(net, colloc.interior).array() + 1.0).square().sum();
  return (weights.boundary * boundary_sum + weights.interior * interior_sum) / count;
}

double pinn_loss_and_gradient(const NeuralLevelSetd& net, const CollocationSet& colloc,
                              const LossWeights& weights, MlpParameters<double>& grad) {
  if (!grad.same_shape(net.params())) grad = MlpParameters<double>::zeros_like(net.params());
  grad.set_zero();
  const double count = static_cast<double>(colloc.boundary.cols() + colloc.interior.cols());
  double boundary_sum = 0.0;
  double interior_sum = 0.0;
  // Column blocks keep the per-layer temporaries cache resident; the block
  // order is fixed, so the reduction is deterministic.
  for (Eigen::Index start = 0; start < colloc.boundary.cols(); start += kBlock) {
    const Eigen::Index n = std::min(kBlock, colloc.boundary.cols() - start);
    const PointCloud x = colloc.boundary.middleCols(start, n);
    const Eigen::RowVectorXd v = values(net, x);
    boundary_sum += v.squaredNorm();
    accumulate_value_gradient<double>(net, x, (2.0 * weights.boundary / count) * v, grad);
  }
  for (Eigen::Index start = 0; start < colloc.interior.cols(); start += kBlock) {
    const Eigen::Index n = std::min(kBlock, colloc.interior.cols() - start);
    const PointCloud x = colloc.interior.middleCols(start, n);
    auto tape = detail::taylor_forward<double>(net, x, true);
    const Eigen::RowVectorXd residual = tape.laplacian.array() + 1.0;
    interior_sum += residual.squaredNorm();
    accumulate_laplacian_gradient_from_tape<double>(net, tape, (2.0 * weights.interior / count) * residual,
                                                    grad);
  }
  return (weights.boundary * boundary_sum + weights.interior * interior_sum) / count;
}

namespace {

TrainResult run_adam(const NeuralLevelSetd& start, const CollocationSet& colloc,
                     const TrainOptions& options, std::int64_t steps) {
  TrainResult result{start, {}, std::numeric_limits<double>::infinity(), 0.0};
  const LossWeights weights = make_weights(options.weighting, colloc);
  NeuralLevelSetd net = start;
  AdamState<double> adam(net, options.schedule);
  MlpParameters<double> grad = MlpParameters<double>::zeros_like(net.params());
  result.history.reserve(static_cast<std::size_t>(std::max<std::int64_t>(steps, 0)));

  for (std::int64_t step = 0; step < steps; ++step) {
    const double loss = pinn_loss_and_gradient(net, colloc, weights, grad);
    if (!std::isfinite(loss))
      throw TrainingError("PINN loss became non-finite at step " + std::to_string(step));
    if (loss < result.best_loss) {
      result.best_loss = loss;
      result.net = net;
    }
    result.history.push_back({step, loss, result.best_loss});
    adam_update(net, grad, adam);
  }
  if (steps <= 0) result.best_loss = pinn_loss(net, colloc, weights);
  result.mean_loss = pinn_loss(result.net, colloc, LossWeights::mean());
  return result;
}

}  // namespace

TrainResult train(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                  const Rectangle& holdall, const TrainOptions& options, Rng& rng) {
  if (options.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  const CollocationSet colloc =
      sample_collocation(boundary, holdall, options.n_interior, options.n_boundary, rng);
  return run_adam(net, colloc, options, options.steps);
}

TrainResult transfer_train(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                           const Rectangle& holdall, const TrainOptions& options,
                           std::int64_t max_steps, Rng& rng) {
  const CollocationSet colloc =
      sample_collocation(boundary, holdall, options.n_interior, options.n_boundary, rng);
  return run_adam(net, colloc, options, max_steps);
}

TrainResult train_with_restarts(const std::vector<int>& widths, const PolygonalBoundary& boundary,
                                const Rectangle& holdall, const TrainOptions& options, int restarts,
                                Rng& rng) {
  if (restarts < 1) throw std::invalid_argument("need at least one training run");
  TrainResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    Rng run_rng = rng.split(static_cast<std::uint64_t>(r));
    Rng init = substream(run_rng, Stream::initialization);
    Rng colloc = substream(run_rng, Stream::collocation);
    TrainResult candidate = train(NeuralLevelSetd::glorot(widths, init), boundary, holdall, options, colloc);
    if (!have || candidate.best_loss < best.best_loss) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

void write_loss_history(const std::vector<LossRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step,loss,best_loss\n" << std::setprecision(17);
  for (const auto& r : history) out << r.step << ',' << r.loss << ',' << r.best_loss << '\n';
}

}  // namespace probshape
