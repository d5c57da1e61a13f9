#include "probshape/driver.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "probshape/checkpoint.hpp"
#include "probshape/errors.hpp"

namespace probshape {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for key " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean '" + value + "' for key " + key);
}

std::vector<int> parse_layers(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw ConfigError("hidden_layers needs at least one width");
  return out;
}

using Setter = void (*)(RunConfig&, const std::string&, const std::string&);

#define PROBSHAPE_DOUBLE(name) \
  {#name, [](RunConfig& c, const std::string& k, const std::string& v) { c.name = parse_number<double>(k, v); }}
#define PROBSHAPE_INT(name)                                                 \
  {#name, [](RunConfig& c, const std::string& k, const std::string& v) {   \
     c.name = parse_number<decltype(c.name)>(k, v);                         \
   }}
#define PROBSHAPE_BOOL(name) \
  {#name, [](RunConfig& c, const std::string& k, const std::string& v) { c.name = parse_bool(k, v); }}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      PROBSHAPE_DOUBLE(holdall_x_min),
      PROBSHAPE_DOUBLE(holdall_y_min),
      PROBSHAPE_DOUBLE(holdall_x_max),
      PROBSHAPE_DOUBLE(holdall_y_max),
      PROBSHAPE_DOUBLE(ellipse_center_x),
      PROBSHAPE_DOUBLE(ellipse_center_y),
      PROBSHAPE_DOUBLE(ellipse_a),
      PROBSHAPE_DOUBLE(ellipse_b),
      PROBSHAPE_DOUBLE(ball_center_x),
      PROBSHAPE_DOUBLE(ball_center_y),
      PROBSHAPE_DOUBLE(ball_radius),
      {"initial_shape",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "ball") c.initial_shape = InitialShape::ball;
         else if (v == "ellipse") c.initial_shape = InitialShape::ellipse;
         else throw ConfigError("invalid value '" + v + "' for key " + k + " (ball|ellipse)");
       }},
      PROBSHAPE_INT(vertex_count),
      {"hidden_layers",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.hidden_layers = parse_layers(k, v); }},
      PROBSHAPE_INT(n_interior),
      PROBSHAPE_INT(n_boundary),
      PROBSHAPE_INT(initial_steps),
      PROBSHAPE_INT(initial_restarts),
      PROBSHAPE_DOUBLE(learning_rate),
      PROBSHAPE_DOUBLE(learning_rate_late),
      PROBSHAPE_DOUBLE(learning_rate_switch),
      PROBSHAPE_INT(transfer_steps),
      PROBSHAPE_DOUBLE(transfer_learning_rate),
      {"loss_weights",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "printed") c.loss_weights = LossWeighting::printed;
         else if (v == "mean") c.loss_weights = LossWeighting::mean;
         else throw ConfigError("invalid value '" + v + "' for key " + k + " (printed|mean)");
       }},
      PROBSHAPE_INT(m_uniform),
      PROBSHAPE_INT(m_constant),
      PROBSHAPE_INT(m_exit),
      PROBSHAPE_DOUBLE(safety),
      PROBSHAPE_DOUBLE(delta),
      PROBSHAPE_INT(max_proposals),
      PROBSHAPE_INT(max_exit_steps),
      PROBSHAPE_DOUBLE(step_length),
      PROBSHAPE_INT(max_iterations),
      PROBSHAPE_DOUBLE(gradient_tolerance),
      PROBSHAPE_DOUBLE(stiffness_factor),
      {"objective_formula",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "mean_based") c.objective_formula = ObjectiveFormula::mean_based;
         else if (v == "as_printed") c.objective_formula = ObjectiveFormula::as_printed;
         else throw ConfigError("invalid value '" + v + "' for key " + k + " (mean_based|as_printed)");
       }},
      PROBSHAPE_INT(seed),
      {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      PROBSHAPE_BOOL(write_svg),
      PROBSHAPE_BOOL(dump_exits),
      PROBSHAPE_BOOL(dump_derivative),
      PROBSHAPE_INT(check_directions),
      PROBSHAPE_DOUBLE(check_epsilon),
      PROBSHAPE_INT(check_grid),
  };
  return table;
}

#undef PROBSHAPE_DOUBLE
#undef PROBSHAPE_INT
#undef PROBSHAPE_BOOL


double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string boundary_path(const std::string& dir, int iteration) {
  return (std::filesystem::path(dir) / ("boundary_iter_" + std::to_string(iteration) + ".csv")).string();
}

struct LossRow {
  int iteration;
  LossRecord record;
};

void write_loss_rows(const std::vector<LossRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,step,loss,best_loss\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.iteration << ',' << r.record.step << ',' << r.record.loss << ',' << r.record.best_loss << '\n';
}

}  // namespace

Rectangle RunConfig::holdall() const { return {{holdall_x_min, holdall_y_min}, {holdall_x_max, holdall_y_max}}; }

TrackingData RunConfig::tracking() const {
  TrackingData z;
  z.center = {ellipse_center_x, ellipse_center_y};
  z.a = ellipse_a;
  z.b = ellipse_b;
  return z;
}

PolygonalBoundary RunConfig::initial_boundary() const {
  if (initial_shape == InitialShape::ellipse)
    return PolygonalBoundary::ellipse({ellipse_center_x, ellipse_center_y}, ellipse_a, ellipse_b, vertex_count);
  return PolygonalBoundary::circle({ball_center_x, ball_center_y}, ball_radius, vertex_count);
}

std::vector<int> RunConfig::widths() const {
  std::vector<int> w{2};
  w.insert(w.end(), hidden_layers.begin(), hidden_layers.end());
  w.push_back(1);
  return w;
}

TrainOptions RunConfig::initial_train_options() const {
  TrainOptions o;
  o.steps = initial_steps;
  o.n_interior = n_interior;
  o.n_boundary = n_boundary;
  o.weighting = loss_weights;
  o.schedule = PiecewiseConstantSchedule::two_phase(initial_steps, learning_rate, learning_rate_late,
                                                    learning_rate_switch);
  return o;
}

TrainOptions RunConfig::transfer_train_options() const {
  TrainOptions o = initial_train_options();
  o.steps = transfer_steps;
  o.schedule = PiecewiseConstantSchedule(transfer_learning_rate);
  return o;
}

PartitionOptions RunConfig::partition_options() const {
  PartitionOptions o;
  o.m_uniform = m_uniform;
  o.m_constant = m_constant;
  o.safety = safety;
  o.sampler.max_proposals = max_proposals;
  return o;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(holdall_x_max > holdall_x_min && holdall_y_max > holdall_y_min, "hold-all rectangle is degenerate");
  require(ellipse_a > 0.0 && ellipse_b > 0.0, "ellipse semi-axes must be positive");
  require(ball_radius > 0.0, "ball_radius must be positive");
  require(vertex_count >= 3, "vertex_count must be >= 3");
  for (int w : hidden_layers) require(w > 0, "hidden layer widths must be positive");
  require(n_interior > 0 && n_boundary > 0, "collocation counts must be positive");
  require(initial_steps > 0 && initial_restarts > 0, "initial training budget must be positive");
  require(transfer_steps >= 0, "transfer_steps must be >= 0");
  require(learning_rate > 0.0 && learning_rate_late > 0.0 && transfer_learning_rate > 0.0,
          "learning rates must be positive");
  require(learning_rate_switch >= 0.0 && learning_rate_switch <= 1.0, "learning_rate_switch must lie in [0, 1]");
  require(m_uniform > 0 && m_constant > 0 && m_exit > 0, "sample counts must be positive");
  require(safety >= 1.0, "safety must be >= 1");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(max_proposals > 0 && max_exit_steps > 0, "sampling budgets must be positive");
  require(step_length > 0.0, "step_length must be positive");
  require(max_iterations >= 0, "max_iterations must be >= 0");
  require(gradient_tolerance >= 0.0, "gradient_tolerance must be >= 0");
  require(stiffness_factor >= 0.0, "stiffness_factor must be >= 0");
  require(check_directions > 0 && check_epsilon > 0.0 && check_grid > 0, "derivative-check settings must be positive");
  const Rectangle h = holdall();
  const PolygonalBoundary b = initial_boundary();
  for (const Point& v : b.vertices()) require(h.contains(v), "initial shape leaves the hold-all");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(config, key, value);
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::set<std::string> seen;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    set_config_value(config, key, value);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  return parse_config(in);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  out << std::setprecision(17);
  std::string layers;
  for (std::size_t i = 0; i < c.hidden_layers.size(); ++i)
    layers += (i ? "," : "") + std::to_string(c.hidden_layers[i]);
  out << "holdall_x_min = " << c.holdall_x_min << "\nholdall_y_min = " << c.holdall_y_min
      << "\nholdall_x_max = " << c.holdall_x_max << "\nholdall_y_max = " << c.holdall_y_max
      << "\nellipse_center_x = " << c.ellipse_center_x << "\nellipse_center_y = " << c.ellipse_center_y
      << "\nellipse_a = " << c.ellipse_a << "\nellipse_b = " << c.ellipse_b
      << "\nball_center_x = " << c.ball_center_x << "\nball_center_y = " << c.ball_center_y
      << "\nball_radius = " << c.ball_radius
      << "\ninitial_shape = " << (c.initial_shape == InitialShape::ball ? "ball" : "ellipse")
      << "\nvertex_count = " << c.vertex_count << "\nhidden_layers = " << layers
      << "\nn_interior = " << c.n_interior << "\nn_boundary = " << c.n_boundary
      << "\ninitial_steps = " << c.initial_steps << "\ninitial_restarts = " << c.initial_restarts
      << "\nlearning_rate = " << c.learning_rate << "\nlearning_rate_late = " << c.learning_rate_late
      << "\nlearning_rate_switch = " << c.learning_rate_switch << "\ntransfer_steps = " << c.transfer_steps
      << "\ntransfer_learning_rate = " << c.transfer_learning_rate
      << "\nloss_weights = " << (c.loss_weights == LossWeighting::printed ? "printed" : "mean")
      << "\nm_uniform = " << c.m_uniform << "\nm_constant = " << c.m_constant << "\nm_exit = " << c.m_exit
      << "\nsafety = " << c.safety << "\ndelta = " << c.delta << "\nmax_proposals = " << c.max_proposals
      << "\nmax_exit_steps = " << c.max_exit_steps << "\nstep_length = " << c.step_length
      << "\nmax_iterations = " << c.max_iterations << "\ngradient_tolerance = " << c.gradient_tolerance
      << "\nstiffness_factor = " << c.stiffness_factor << "\nobjective_formula = "
      << (c.objective_formula == ObjectiveFormula::mean_based ? "mean_based" : "as_printed")
      << "\nseed = " << c.seed << "\noutput_dir = " << c.output_dir
      << "\nwrite_svg = " << (c.write_svg ? "true" : "false")
      << "\ndump_exits = " << (c.dump_exits ? "true" : "false")
      << "\ndump_derivative = " << (c.dump_derivative ? "true" : "false")
      << "\ncheck_directions = " << c.check_directions << "\ncheck_epsilon = " << c.check_epsilon
      << "\ncheck_grid = " << c.check_grid << '\n';
  return out.str();
}

ShapeEvaluation evaluate_shape(const NeuralLevelSetd& net, const PolygonalBoundary& boundary,
                               const RunConfig& config, const Rng& rng) {
  const Rectangle holdall = config.holdall();
  const TrackingData z = config.tracking();
  const PartitionOptions options = config.partition_options();
  auto state = network_field(net);
  auto target = tracking_field(z);

  ShapeEvaluation eval;
  eval.partition = estimate_partition(state, target, holdall, options, rng);
  eval.objective = mc_objective(state, target, eval.partition, config.objective_formula);

  for (Side side : {Side::plus, Side::minus}) {
    const PartitionSide& part = eval.partition.side(side);
    ExitSampleSet& exits = side == Side::plus ? eval.exits_plus : eval.exits_minus;
    exits.delta = config.delta;
    if (part.empty || !(part.m > 0.0)) continue;
    const Rng starts_rng = substream(rng, side == Side::plus ? Stream::starts_plus : Stream::starts_minus);
    const Rng exits_rng = substream(rng, side == Side::plus ? Stream::exits_plus : Stream::exits_minus);
    const AcceptRejectResult starts =
        sample_random_starts(state, target, holdall, eval.partition, side, config.m_exit, starts_rng, options.sampler);
    exits = sample_exits(network_level(net), boundary, starts.samples, config.delta, exits_rng, config.max_exit_steps);
  }

  eval.derivative = assemble(eval.partition, eval.exits_plus, eval.exits_minus, boundary, z, network_gradient(net));
  if (!eval.derivative.identity_holds()) throw std::logic_error("derivative decomposition identity violated");
  eval.fem = assemble_system(boundary, config.stiffness_factor);
  eval.gradient.w = solve_deformation(eval.fem, eval.derivative.values);
  eval.gradient.W = galerkin_project(eval.fem, eval.gradient.w);
  eval.gradient.tau = config.step_length;
  return eval;
}

TrainResult train_initial_state(const RunConfig& config) {
  Rng rng = Rng(config.seed).split(0);
  return train_with_restarts(config.widths(), config.initial_boundary(), config.holdall(),
                             config.initial_train_options(), config.initial_restarts, rng);
}

RunResult run(const RunConfig& config, const RunHooks& hooks) {
  config.validate();
  const bool write = !config.output_dir.empty();
  if (write) std::filesystem::create_directories(config.output_dir);
  const auto out_path = [&](const std::string& name) {
    return (std::filesystem::path(config.output_dir) / name).string();
  };

  const Rng root(config.seed);
  const Rectangle holdall = config.holdall();
  RunResult result{config.initial_boundary(), {}, {}, {}, {}, {}};
  std::vector<LossRow> loss_rows;

  auto start = std::chrono::steady_clock::now();
  double pinn_loss_value = 0.0;
  if (hooks.initial_net) {
    Rng colloc = substream(root.split(0), Stream::collocation);
    const TrainResult check =
        transfer_train(*hooks.initial_net, result.boundary, holdall, config.initial_train_options(), 0, colloc);
    result.net = check.net;
    pinn_loss_value = check.mean_loss;
  } else {
    TrainResult initial = train_initial_state(config);
    for (const auto& r : initial.history) loss_rows.push_back({0, r});
    result.net = std::move(initial.net);
    pinn_loss_value = initial.mean_loss;
  }

  const auto persist = [&]() {
    if (!write) return;
    write_history_csv(result.history, out_path("history.csv"));
    write_timing_csv(result.history, out_path("timing.csv"));
    write_loss_rows(loss_rows, out_path("pinn_loss.csv"));
    write_boundary_csv(result.boundary, out_path("boundary_final.csv"));
    save_checkpoint(result.net, out_path("state.bin"));
    if (config.write_svg && !result.history.empty()) write_objective_svg(result.history, out_path("objective.svg"));
  };

  try {
    for (int iteration = 0;; ++iteration) {
      const Rng iteration_rng = root.split(static_cast<std::uint64_t>(iteration) + 1);
      ShapeEvaluation eval = evaluate_shape(result.net, result.boundary, config, iteration_rng);

      IterationRecord record;
      record.iteration = iteration;
      record.objective = eval.objective;
      record.m_plus = eval.partition.plus.m;
      record.m_minus = eval.partition.minus.m;
      record.d_inf = eval.derivative.values.lpNorm<Eigen::Infinity>();
      record.d_sigma_inf = eval.derivative.std_error.lpNorm<Eigen::Infinity>();
      record.W_inf = eval.gradient.W.colwise().norm().maxCoeff();
      record.pinn_loss = pinn_loss_value;
      record.wall_seconds = elapsed(start);
      result.history.push_back(record);
      result.shapes.push_back(result.boundary);

      if (write) {
        write_boundary_csv(result.boundary, boundary_path(config.output_dir, iteration));
        if (config.dump_derivative)
          write_derivative_csv(eval.derivative, out_path("derivative_iter_" + std::to_string(iteration) + ".csv"));
        if (config.dump_exits) {
          write_exit_samples(eval.exits_plus, out_path("exits_plus_iter_" + std::to_string(iteration) + ".csv"));
          write_exit_samples(eval.exits_minus, out_path("exits_minus_iter_" + std::to_string(iteration) + ".csv"));
        }
        write_history_csv(result.history, out_path("history.csv"));
      }
      std::clog << "iteration " << iteration << " objective " << record.objective << " |d|_inf " << record.d_inf
                << " |W|_inf " << record.W_inf << " pinn_loss " << record.pinn_loss << '\n';

      bool keep_going = true;
      if (hooks.on_iteration) keep_going = hooks.on_iteration(record, eval);
      const ShapeGradientField gradient = eval.gradient;
      if (hooks.keep_evaluations) result.evaluations.push_back(std::move(eval));
      if (!keep_going) {
        result.stop_reason = "stopped by caller";
        break;
      }
      if (iteration >= config.max_iterations) {
        result.stop_reason = "max_iterations";
        break;
      }
      if (record.d_inf <= config.gradient_tolerance) {
        result.stop_reason = "gradient_tolerance";
        break;
      }

      start = std::chrono::steady_clock::now();
      result.boundary = update_vertices(result.boundary, gradient.W, gradient.tau);
      Rng colloc = substream(root.split(static_cast<std::uint64_t>(iteration) + 2), Stream::collocation);
      TrainResult transfer = transfer_train(result.net, result.boundary, holdall, config.transfer_train_options(),
                                            config.transfer_steps, colloc);
      for (const auto& r : transfer.history) loss_rows.push_back({iteration + 1, r});
      result.net = std::move(transfer.net);
      pinn_loss_value = transfer.mean_loss;
    }
  } catch (...) {
    // The failing update never replaced result.boundary, so it is the last valid shape.
    persist();
    throw;
  }
  persist();
  return result;
}

void write_history_csv(const std::vector<IterationRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,objective,m_plus,m_minus,d_inf,d_sigma_inf,W_inf,pinn_loss\n" << std::setprecision(17);
  for (const auto& r : history)
    out << r.iteration << ',' << r.objective << ',' << r.m_plus << ',' << r.m_minus << ',' << r.d_inf << ','
        << r.d_sigma_inf << ',' << r.W_inf << ',' << r.pinn_loss << '\n';
}

void write_timing_csv(const std::vector<IterationRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,wall_seconds\n";
  for (const auto& r : history) out << r.iteration << ',' << r.wall_seconds << '\n';
}

void write_objective_svg(const std::vector<IterationRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  constexpr double width = 640.0;
  constexpr double height = 400.0;
  constexpr double margin = 60.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : history) {
    if (!(r.objective > 0.0)) continue;
    lo = std::min(lo, std::log10(r.objective));
    hi = std::max(hi, std::log10(r.objective));
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1.0);
  const double last = std::max(1, history.empty() ? 1 : history.back().iteration);
  const auto px = [&](double it) { return margin + (width - 2 * margin) * it / last; };
  const auto py = [&](double l) { return height - margin - (height - 2 * margin) * (l - lo) / (hi - lo); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  for (double e = lo; e <= hi; e += 1.0)
    out << "<text x=\"" << margin - 8 << "\" y=\"" << py(e) + 4 << "\" font-size=\"12\" text-anchor=\"end\">1e"
        << e << "</text>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">iteration</text>\n"
      << "<text x=\"15\" y=\"" << height / 2 << "\" font-size=\"13\" transform=\"rotate(-90 15 " << height / 2
      << ")\" text-anchor=\"middle\">Monte Carlo objective</text>\n<polyline fill=\"none\" stroke=\"steelblue\" "
         "stroke-width=\"2\" points=\"";
  for (const auto& r : history)
    if (r.objective > 0.0) out << px(r.iteration) << ',' << py(std::log10(r.objective)) << ' ';
  out << "\"/>\n</svg>\n";
}

double grid_objective(const NeuralLevelSetd& net, const TrackingData& z, const PolygonalBoundary& boundary,
                      const Rectangle& holdall, int grid) {
  const Point size = holdall.upper - holdall.lower;
  const double cell = size.x() * size.y() / (static_cast<double>(grid) * grid);
  std::vector<Point> inside;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const Point x = holdall.lower + Point((i + 0.5) * size.x() / grid, (j + 0.5) * size.y() / grid);
      if (contains_exact(boundary, x)) inside.push_back(x);
    }
  if (inside.empty()) return 0.0;
  PointCloud points(2, static_cast<Eigen::Index>(inside.size()));
  for (std::size_t i = 0; i < inside.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = inside[i];
  const Eigen::RowVectorXd r = values(net, points) - tracking_values(z, points);
  return 0.5 * r.squaredNorm() * cell;
}

std::vector<DirectionCheck> derivative_check(const RunConfig& config, const NeuralLevelSetd& net) {
  const PolygonalBoundary boundary = config.initial_boundary();
  const Rectangle holdall = config.holdall();
  const TrackingData z = config.tracking();
  const Rng root(config.seed);
  const ShapeEvaluation eval = evaluate_shape(net, boundary, config, root.split(1));
  const Point center = config.initial_shape == InitialShape::ball
                           ? Point(config.ball_center_x, config.ball_center_y)
                           : Point(config.ellipse_center_x, config.ellipse_center_y);

  std::vector<DirectionCheck> checks;
  for (int q = 0; q < config.check_directions; ++q) {
    Eigen::VectorXd c(boundary.size());
    for (int j = 0; j < boundary.size(); ++j) {
      const Point r = boundary.vertex(j) - center;
      c(j) = q == 0 ? 1.0 : std::cos((q + 1) * std::atan2(r.y(), r.x()));
    }
    DirectionCheck check;
    check.name = q == 0 ? "dilation" : "cos(" + std::to_string(q + 1) + " theta)";
    // The probabilistic derivative carries the opposite sign of dJ/deps.
    check.mc = -c.dot(eval.derivative.values);
    check.mc_sigma = std::sqrt(c.cwiseAbs2().dot(eval.derivative.std_error.cwiseAbs2()));
    const Eigen::Matrix2Xd field = galerkin_project(eval.fem, c);

    double objective[2];
    for (int s = 0; s < 2; ++s) {
      const PolygonalBoundary moved = update_vertices(boundary, s == 0 ? field : Eigen::Matrix2Xd(-field),
                                                      config.check_epsilon);
      Rng colloc = substream(root.split(2), Stream::collocation);
      const TrainResult state = transfer_train(net, moved, holdall, config.transfer_train_options(),
                                               config.transfer_steps, colloc);
      objective[s] = grid_objective(state.net, z, moved, holdall, config.check_grid);
    }
    check.fd = (objective[0] - objective[1]) / (2.0 * config.check_epsilon);
    check.sign_agrees = (check.fd > 0.0) == (check.mc > 0.0);
    checks.push_back(check);
  }
  return checks;
}

}  // namespace probshape
