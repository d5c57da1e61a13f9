#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "probshape/deformation.hpp"
#include "probshape/geometry.hpp"
#include "probshape/monte_carlo.hpp"
#include "probshape/network.hpp"
#include "probshape/pinn.hpp"
#include "probshape/shape_derivative.hpp"

namespace probshape {

enum class ObjectiveFormula { mean_based, as_printed };
enum class InitialShape { ball, ellipse };

/// Every field is a config key of the same name.
struct RunConfig {
  double holdall_x_min = 0.0;
  double holdall_y_min = 0.0;
  double holdall_x_max = 1.0;
  double holdall_y_max = 1.0;

  double ellipse_center_x = 0.5;
  double ellipse_center_y = 0.5;
  double ellipse_a = 0.4;
  double ellipse_b = 0.3;

  double ball_center_x = 0.5;
  double ball_center_y = 0.5;
  double ball_radius = 0.25;
  InitialShape initial_shape = InitialShape::ball;
  int vertex_count = 160;

  std::vector<int> hidden_layers{20, 20};
  std::int64_t n_interior = 5000;
  std::int64_t n_boundary = 2000;
  std::int64_t initial_steps = 5000;
  int initial_restarts = 3;
  double learning_rate = 1e-3;
  double learning_rate_late = 1e-4;
  double learning_rate_switch = 0.6;  ///< fraction of initial_steps run at learning_rate
  std::int64_t transfer_steps = 200;
  double transfer_learning_rate = 1e-4;
  LossWeighting loss_weights = LossWeighting::printed;

  std::int64_t m_uniform = 10'000'000;
  std::int64_t m_constant = 1'000'000;
  std::int64_t m_exit = 100;
  double safety = 1.1;
  double delta = 1e-4;
  std::int64_t max_proposals = 100'000'000;
  std::int64_t max_exit_steps = 10'000'000;

  double step_length = 150.0;
  int max_iterations = 30;
  double gradient_tolerance = 0.0;
  double stiffness_factor = 0.5;
  ObjectiveFormula objective_formula = ObjectiveFormula::mean_based;

  std::uint64_t seed = 0;
  std::string output_dir = "run";
  bool write_svg = true;
  bool dump_exits = false;
  bool dump_derivative = false;

  int check_directions = 2;  ///< derivative-check: dilation, then cos(n theta) modes
  double check_epsilon = 1e-2;
  int check_grid = 400;

  [[nodiscard]] Rectangle holdall() const;
  [[nodiscard]] TrackingData tracking() const;
  [[nodiscard]] PolygonalBoundary initial_boundary() const;
  [[nodiscard]] std::vector<int> widths() const;
  [[nodiscard]] TrainOptions initial_train_options() const;
  [[nodiscard]] TrainOptions transfer_train_options() const;
  [[nodiscard]] PartitionOptions partition_options() const;

  /// Throws ConfigError on a violated invariant.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and duplicate keys throw ConfigError. The result is validated.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
/// Applies a single `key`, `value` pair.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
/// Round-trippable text form of every key.
std::string format_config(const RunConfig& config);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double m_plus = 0.0;
  double m_minus = 0.0;
  double d_inf = 0.0;
  double d_sigma_inf = 0.0;  ///< max per-vertex standard error of d
  double W_inf = 0.0;
  double pinn_loss = 0.0;    ///< mean-weighted loss of the state used in this iteration
  double wall_seconds = 0.0; ///< kept out of history.csv, which must be reproducible
};

/// Monte Carlo objective from the retained partition samples.
///
/// mean_based: sum over both sides of measure times the sample mean of
/// 1/2 (v - z)^2, the uniform-on-Omega_v expectation stratified by side.
/// as_printed: total measure times the raw sum over the union of both sample
/// sets. Throws SamplingError when no samples are retained.
template <class State, class Target>
double mc_objective(State&& state, Target&& target, const PartitionEstimate& partition,
                    ObjectiveFormula formula = ObjectiveFormula::mean_based) {
  if (partition.plus.samples.cols() + partition.minus.samples.cols() == 0)
    throw SamplingError("objective: no retained partition samples");
  double total = 0.0;
  for (const PartitionSide* side : {&partition.plus, &partition.minus}) {
    if (side->samples.cols() == 0) continue;
    const double sum = 0.5 * (state(side->samples) - target(side->samples)).squaredNorm();
    if (formula == ObjectiveFormula::as_printed)
      total += (partition.plus.measure + partition.minus.measure) * sum;
    else
      total += side->measure * sum / static_cast<double>(side->samples.cols());
  }
  return total;
}

/// Everything evaluated at one shape with one trained state.
struct ShapeEvaluation {
  PartitionEstimate partition;
  ExitSampleSet exits_plus;
  ExitSampleSet exits_minus;
  DerivativeVector derivative;
  SurfaceFem fem;
  ShapeGradientField gradient;
  double objective = 0.0;
};

/// Partition, objective, exits on both sides, derivative, H^1 solve and
/// projection. `rng` is the per-iteration stream.
ShapeEvaluation evaluate_shape(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                               const RunConfig& config, const Rng& rng);

struct RunResult {
  PolygonalBoundary boundary;
  NeuralLevelSetd net;
  std::vector<IterationRecord> history;
  std::vector<PolygonalBoundary> shapes;  ///< shape of each record
  std::vector<ShapeEvaluation> evaluations;
  std::string stop_reason;
};

struct RunHooks {
  /// Replaces the initial restarted training, e.g. to reuse a checkpoint.
  std::optional<NeuralLevelSetd> initial_net;
  /// Called after each record; return false to stop.
  std::function<bool(const IterationRecord&, const ShapeEvaluation&)> on_iteration;
  bool keep_evaluations = false;
};

/// Shape gradient descent with fixed step length.
///
/// Iteration n evaluates shape n with its trained state, appends record n and,
/// unless a stopping rule fires, moves the vertices by tau W and transfer
/// trains the state for shape n + 1. Records therefore run 0..n_last with no
/// gaps. Writes the run directory when `config.output_dir` is non-empty. A
/// module error is rethrown after the last valid boundary has been written.
RunResult run(const RunConfig& config, const RunHooks& hooks = {});

/// Histories as CSV. history.csv omits wall time; timing.csv has it.
void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path);
void write_timing_csv(const std::vector<IterationRecord>& history, const std::string& path);
/// Log-scale objective against iteration.
void write_objective_svg(const std::vector<IterationRecord>& history, const std::string& path);

/// Trains the state on the initial shape (restarts included).
TrainResult train_initial_state(const RunConfig& config);

/// Mean of 1/2 (v - z)^2 over the chain interior on a midpoint grid of
/// `grid` x `grid` cells covering the hold-all, times the cell area.
double grid_objective(const NeuralLevelSetd& net, const TrackingData& z, const PolygonalBoundary& boundary,
                      const Rectangle& holdall, int grid);

struct DirectionCheck {
  std::string name;
  double mc = 0.0;        ///< -sum_i c_i d_i, the sign convention of dJ/deps
  double mc_sigma = 0.0;  ///< its standard error
  double fd = 0.0;        ///< central difference of the grid objective
  bool sign_agrees = false;
};

/// Finite-difference validation of the assembled derivative along a few
/// smooth directions sum_i c_i V_i. Perturbed states are transfer trained
/// from the same network with common random numbers.
std::vector<DirectionCheck> derivative_check(const RunConfig& config, const NeuralLevelSetd& net);

}  // namespace probshape
