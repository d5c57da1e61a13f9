#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "probshape/errors.hpp"
#include "probshape/geometry.hpp"
#include "probshape/network.hpp"
#include "probshape/rng.hpp"

namespace probshape {

// A "batch field" is any callable mapping a 2 x N point cloud to a row of N
// reals. Networks, the tracking map and analytic test fields all fit.

inline auto network_field(const NeuralLevelSetd& net) {
  return [&net](const PointCloud& x) -> Eigen::RowVectorXd { return values(net, x); };
}

inline auto network_gradient(const NeuralLevelSetd& net) {
  return [&net](const PointCloud& x) -> PointCloud { return gradients(net, x); };
}

inline auto network_level(const NeuralLevelSetd& net) {
  return [&net](const Point& x) { return forward(net, x); };
}

inline auto tracking_field(const TrackingData& z) {
  return [z](const PointCloud& x) -> Eigen::RowVectorXd { return tracking_values(z, x); };
}

struct AcceptRejectOptions {
  std::int64_t max_proposals = 10'000'000;
  double min_acceptance_ratio = 1e-6;
  /// The ratio test also runs once this many proposals have been made.
  std::int64_t ratio_check_after = 1'000'000;
  Eigen::Index batch = 4096;
};

struct AcceptRejectResult {
  PointCloud samples;
  std::int64_t trials = 0;
  std::int64_t violations = 0;  ///< proposals where rho > C rho_ref
  bool complete = true;         ///< false if the proposal budget ran out first

  [[nodiscard]] double acceptance_ratio() const {
    return trials > 0 ? static_cast<double>(samples.cols()) / static_cast<double>(trials) : 0.0;
  }
};

/// Batch acceptance-rejection against the uniform reference density on `reference`.
///
/// Proposal j draws its point and its uniform from substream j of `rng`, so the
/// result does not depend on the batch size. `density` may be unnormalized; the
/// acceptance test is U <= density(X) / (C rho_ref(X)). Sampling stops at the
/// M-th acceptance. Throws SamplingError when the acceptance ratio is below the
/// configured minimum after `ratio_check_after` proposals or at the end of the
/// budget. A budget exhausted above that ratio returns the partial set with
/// `complete == false`.
template <class Density>
AcceptRejectResult acceptance_rejection(Density&& density, double C, const Rectangle& reference,
                                        Eigen::Index M, const Rng& rng,
                                        const AcceptRejectOptions& options = {}) {
  if (!(C > 0.0)) throw std::invalid_argument("acceptance_rejection: C must be positive");
  if (reference.degenerate()) throw GeometryError("degenerate reference rectangle");
  const double rho_ref = 1.0 / reference.area();
  AcceptRejectResult result;
  result.samples.resize(2, M);
  Eigen::Index accepted = 0;
  std::int64_t next = 0;
  PointCloud proposals;
  Eigen::VectorXd uniforms;
  while (accepted < M && next < options.max_proposals) {
    const auto n = static_cast<Eigen::Index>(
        std::min<std::int64_t>(options.batch, options.max_proposals - next));
    proposals.resize(2, n);
    uniforms.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Rng item = rng.split(static_cast<std::uint64_t>(next + i));
      proposals.col(i) = reference.sample(item);
      uniforms(i) = item.uniform();
    }
    const Eigen::RowVectorXd rho = density(proposals);
    Eigen::Index i = 0;
    for (; i < n && accepted < M; ++i) {
      const double ratio = rho(i) / (C * rho_ref);
      if (ratio > 1.0) ++result.violations;
      if (uniforms(i) <= ratio) result.samples.col(accepted++) = proposals.col(i);
    }
    next += i;
    if (accepted < M && next >= options.ratio_check_after &&
        static_cast<double>(accepted) < options.min_acceptance_ratio * static_cast<double>(next))
      break;
  }
  result.trials = next;
  if (accepted < M) {
    result.samples.conservativeResize(2, accepted);
    result.complete = false;
    if (result.acceptance_ratio() < options.min_acceptance_ratio)
      throw SamplingError("acceptance ratio " + std::to_string(result.acceptance_ratio()) + " after " +
                          std::to_string(result.trials) +
                          " proposals; target support empty or bound C misconfigured");
  }
  return result;
}

enum class Side { plus, minus };

inline const char* to_string(Side side) { return side == Side::plus ? "plus" : "minus"; }

/// Monte Carlo description of one subdomain {+-(v - z) >= 0} n {v >= 0}.
struct PartitionSide {
  double measure = 0.0;         ///< lambda^2(H) * accepted / trials
  double m = 0.0;               ///< +- measure * mean(v - z), clamped at 0
  double C = std::numeric_limits<double>::quiet_NaN();
  double max_abs_residual = 0.0;
  PointCloud samples;           ///< retained uniform samples
  std::int64_t trials = 0;
  bool empty = false;           ///< no usable acceptances; m = 0 and C undefined
  bool clamped = false;         ///< m estimate was negative and set to 0
  bool complete = true;
};

struct PartitionEstimate {
  PartitionSide plus;
  PartitionSide minus;
  double holdall_area = 1.0;
  double safety = 1.1;

  [[nodiscard]] const PartitionSide& side(Side s) const { return s == Side::plus ? plus : minus; }
};

struct PartitionOptions {
  Eigen::Index m_uniform = 100'000;   ///< uniform samples per side (measure and C)
  Eigen::Index m_constant = 100'000;  ///< leading samples used for the mean in m
  double safety = 1.1;
  AcceptRejectOptions sampler;
};

/// Estimates measures, constants m and acceptance bounds C of both partition sides.
///
/// `state` and `target` are batch fields for v and z_d. Each side is sampled
/// with an indicator target (C = lambda^2(H)); a side whose sampler finds too
/// few acceptances is marked empty. Throws SamplingError if both are empty.
template <class State, class Target>
PartitionEstimate estimate_partition(State&& state, Target&& target, const Rectangle& holdall,
                                     const PartitionOptions& options, const Rng& rng) {
  PartitionEstimate est;
  est.holdall_area = holdall.area();
  est.safety = options.safety;

  for (Side s : {Side::plus, Side::minus}) {
    const double sign = s == Side::plus ? 1.0 : -1.0;
    auto indicator = [&](const PointCloud& x) -> Eigen::RowVectorXd {
      const Eigen::RowVectorXd v = state(x);
      const Eigen::RowVectorXd r = v - target(x);
      Eigen::RowVectorXd out(x.cols());
      for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = (sign * r(i) >= 0.0 && v(i) >= 0.0) ? 1.0 : 0.0;
      return out;
    };
    PartitionSide& side = s == Side::plus ? est.plus : est.minus;
    const Rng side_rng = substream(rng, s == Side::plus ? Stream::partition_plus : Stream::partition_minus);
    try {
      AcceptRejectResult ar =
          acceptance_rejection(indicator, est.holdall_area, holdall, options.m_uniform, side_rng, options.sampler);
      side.samples = std::move(ar.samples);
      side.trials = ar.trials;
      side.complete = ar.complete;
    } catch (const SamplingError&) {
      side.empty = true;
      side.trials = options.sampler.max_proposals;
    }
    if (side.empty || side.samples.cols() == 0) {
      side.empty = true;
      side.samples.resize(2, 0);
      continue;
    }
    side.measure = est.holdall_area * static_cast<double>(side.samples.cols()) / static_cast<double>(side.trials);

    const Eigen::RowVectorXd residual = state(side.samples) - target(side.samples);
    const Eigen::Index n_mean = std::min(options.m_constant, residual.size());
    const double mean = residual.head(n_mean).mean();
    side.m = sign * side.measure * mean;
    if (side.m < 0.0) {
      std::clog << "warning: negative m_" << to_string(s) << " estimate " << side.m << " clamped to 0\n";
      side.m = 0.0;
      side.clamped = true;
    }
    side.max_abs_residual = residual.cwiseAbs().maxCoeff();
    if (side.m > 0.0) side.C = est.holdall_area * options.safety * side.max_abs_residual / side.m;
  }
  if (est.plus.empty && est.minus.empty) throw SamplingError("both partition sides are empty");
  return est;
}

/// Random starts from rho = |v - z| 1_side / m via acceptance-rejection with bound C.
/// Throws SamplingError for a degenerate side or when more than 0.1% of
/// proposals violate the bound.
template <class State, class Target>
AcceptRejectResult sample_random_starts(State&& state, Target&& target, const Rectangle& holdall,
                                        const PartitionEstimate& partition, Side s, Eigen::Index M,
                                        const Rng& rng, const AcceptRejectOptions& options = {}) {
  const PartitionSide& side = partition.side(s);
  if (side.empty || !(side.m > 0.0) || !std::isfinite(side.C))
    throw SamplingError(std::string("cannot sample random starts on degenerate side ") + to_string(s));
  const double sign = s == Side::plus ? 1.0 : -1.0;
  const double m = side.m;
  auto density = [&](const PointCloud& x) -> Eigen::RowVectorXd {
    const Eigen::RowVectorXd v = state(x);
    const Eigen::RowVectorXd r = v - target(x);
    Eigen::RowVectorXd out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      out(i) = (sign * r(i) >= 0.0 && v(i) >= 0.0) ? std::abs(r(i)) / m : 0.0;
    return out;
  };
  AcceptRejectResult result = acceptance_rejection(density, side.C, holdall, M, rng, options);
  if (static_cast<double>(result.violations) > 1e-3 * static_cast<double>(result.trials))
    throw SamplingError(std::to_string(result.violations) + " of " + std::to_string(result.trials) +
                        " proposals exceed the acceptance bound; increase the safety factor");
  return result;
}

struct ExitSample {
  Point start;
  BoundaryLocation exit;
  std::int64_t steps = 0;
};

struct ExitSampleSet {
  std::vector<ExitSample> samples;
  double delta = 1e-4;
};

/// Euler-Maruyama walk x_k = x_{k-1} + sqrt(2 delta) xi until level(x_k) <= 0,
/// then projection onto the chain. `level` maps a Point to a real.
template <class Level>
ExitSample euler_maruyama_exit(Level&& level, const PolygonalBoundary& boundary, const Point& start,
                               double delta, Rng& rng, std::int64_t max_steps = 10'000'000) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double scale = std::sqrt(2.0 * delta);
  Point x = start;
  std::int64_t steps = 0;
  while (level(x) > 0.0) {
    if (steps >= max_steps)
      throw SamplingError("exit walk exceeded " + std::to_string(max_steps) + " steps from (" +
                          std::to_string(start.x()) + ", " + std::to_string(start.y()) +
                          "); level set may have spurious positive regions");
    const auto [xi1, xi2] = rng.normal_pair();
    x += scale * Point(xi1, xi2);
    ++steps;
  }
  return {start, project_to_boundary(boundary, x), steps};
}

/// One exit per start; path i uses substream i.
template <class Level>
ExitSampleSet sample_exits(Level&& level, const PolygonalBoundary& boundary, const PointCloud& starts,
                           double delta, const Rng& rng, std::int64_t max_steps = 10'000'000) {
  ExitSampleSet set;
  set.delta = delta;
  set.samples.reserve(static_cast<std::size_t>(starts.cols()));
  for (Eigen::Index i = 0; i < starts.cols(); ++i) {
    Rng path = rng.split(static_cast<std::uint64_t>(i));
    set.samples.push_back(euler_maruyama_exit(level, boundary, starts.col(i), delta, path, max_steps));
  }
  return set;
}

/// CSV `start_x,start_y,exit_x,exit_y,edge,steps`; vertex exits have edge = -(vertex + 1).
void write_exit_samples(const ExitSampleSet& exits, const std::string& path);

}  // namespace probshape
