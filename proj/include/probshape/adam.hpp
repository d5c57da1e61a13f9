#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "probshape/network.hpp"

namespace probshape {

/// Learning rate that is constant between breakpoints.
class PiecewiseConstantSchedule {
 public:
  PiecewiseConstantSchedule() : PiecewiseConstantSchedule(1e-3) {}
  explicit PiecewiseConstantSchedule(double rate) : pieces_{{0, rate}} {}

  /// `pieces` holds (first step, rate) pairs; the first must start at step 0.
  explicit PiecewiseConstantSchedule(std::vector<std::pair<std::int64_t, double>> pieces)
      : pieces_(std::move(pieces)) {
    if (pieces_.empty() || pieces_.front().first != 0)
      throw std::invalid_argument("schedule must start at step 0");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (pieces_[i].second < 0.0) throw std::invalid_argument("negative learning rate");
      if (i > 0 && pieces_[i].first <= pieces_[i - 1].first)
        throw std::invalid_argument("schedule breakpoints must increase");
    }
  }

  /// `early` for the first `fraction` of `steps`, `late` afterwards.
  static PiecewiseConstantSchedule two_phase(std::int64_t steps, double early, double late,
                                            double fraction) {
    const auto switch_step = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(steps)));
    if (switch_step <= 0) return PiecewiseConstantSchedule(late);
    if (switch_step >= steps) return PiecewiseConstantSchedule(early);
    return PiecewiseConstantSchedule({{0, early}, {switch_step, late}});
  }

  [[nodiscard]] double rate(std::int64_t step) const {
    double r = pieces_.front().second;
    for (const auto& [start, value] : pieces_) {
      if (step < start) break;
      r = value;
    }
    return r;
  }

 private:
  std::vector<std::pair<std::int64_t, double>> pieces_;
};

template <typename Scalar>
struct AdamState {
  MlpParameters<Scalar> first_moment;
  MlpParameters<Scalar> second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  PiecewiseConstantSchedule schedule;

  AdamState() = default;
  AdamState(const NeuralLevelSet<Scalar>& net, PiecewiseConstantSchedule s)
      : first_moment(MlpParameters<Scalar>::zeros_like(net.params())),
        second_moment(MlpParameters<Scalar>::zeros_like(net.params())),
        schedule(std::move(s)) {}
};

/// One bias-corrected Adam step, rate taken from the schedule at the current
/// step count (before increment).
template <typename Scalar>
void adam_update(NeuralLevelSet<Scalar>& net, const MlpParameters<Scalar>& grads,
                 AdamState<Scalar>& state) {
  auto& theta = net.mutable_params();
  if (!grads.same_shape(theta) || !state.first_moment.same_shape(theta) ||
      !state.second_moment.same_shape(theta))
    throw std::invalid_argument("adam_update: gradient shape does not match the network");

  const double lr = state.schedule.rate(state.step_count);
  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  const Scalar c1 = Scalar(1.0 - std::pow(state.beta1, t));
  const Scalar c2 = Scalar(1.0 - std::pow(state.beta2, t));
  const Scalar b1 = Scalar(state.beta1);
  const Scalar b2 = Scalar(state.beta2);
  const Scalar eps = Scalar(state.epsilon);
  const Scalar rate = Scalar(lr);

  auto step = [&](auto& x, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    x.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < theta.weights.size(); ++l) {
    step(theta.weights[l], state.first_moment.weights[l], state.second_moment.weights[l],
         grads.weights[l]);
    step(theta.biases[l], state.first_moment.biases[l], state.second_moment.biases[l],
         grads.biases[l]);
  }
}

}  // namespace probshape
