#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "probshape/allocator.hpp"
#include "probshape/checkpoint.hpp"
#include "probshape/driver.hpp"

using namespace probshape;

namespace {

RunConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig config = path.empty() ? RunConfig{} : load_config(path);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    set_config_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
  config.validate();
  return config;
}

NeuralLevelSetd state_for(const RunConfig& config, const std::string& checkpoint) {
  if (!checkpoint.empty()) return load_checkpoint(checkpoint);
  std::clog << "training the state on the initial shape\n";
  return train_initial_state(config).net;
}

std::string in_dir(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.output_dir);
  return (std::filesystem::path(config.output_dir) / name).string();
}

int cmd_run(const RunConfig& config, const std::string& checkpoint) {
  RunHooks hooks;
  if (!checkpoint.empty()) hooks.initial_net = load_checkpoint(checkpoint);
  const RunResult result = run(config, hooks);
  const auto& first = result.history.front();
  const auto& last = result.history.back();
  std::cout << "stopped after iteration " << last.iteration << " (" << result.stop_reason << ")\n"
            << "objective " << first.objective << " -> " << last.objective << '\n'
            << "outputs in " << config.output_dir << '\n';
  return 0;
}

int cmd_pinn_train(const RunConfig& config) {
  const TrainResult trained = train_initial_state(config);
  const PolygonalBoundary boundary = config.initial_boundary();
  write_loss_history(trained.history, in_dir(config, "pinn_loss.csv"));
  save_checkpoint(trained.net, in_dir(config, "state.bin"));
  write_boundary_csv(boundary, in_dir(config, "boundary_iter_0.csv"));

  PointCloud dense(2, 64 * boundary.size());
  for (int e = 0; e < boundary.size(); ++e)
    for (int s = 0; s < 64; ++s) dense.col(64 * e + s) = boundary.vertex(e) + (s / 64.0) * boundary.edge_vector(e);
  std::cout << std::setprecision(6) << "best loss (configured weights) " << trained.best_loss << '\n'
            << "mean-weighted loss " << trained.mean_loss << '\n'
            << "max |v| on the chain " << values(trained.net, dense).cwiseAbs().maxCoeff() << '\n'
            << "checkpoint " << in_dir(config, "state.bin") << '\n';
  return 0;
}

int cmd_derivative_check(const RunConfig& config, const std::string& checkpoint) {
  const NeuralLevelSetd net = state_for(config, checkpoint);
  const auto checks = derivative_check(config, net);
  std::cout << std::setprecision(6) << std::left << std::setw(16) << "direction" << std::setw(16) << "mc"
            << std::setw(16) << "mc_sigma" << std::setw(16) << "fd"
            << "sign\n";
  bool all = true;
  for (const auto& c : checks) {
    std::cout << std::setw(16) << c.name << std::setw(16) << c.mc << std::setw(16) << c.mc_sigma << std::setw(16)
              << c.fd << (c.sign_agrees ? "agree" : "DISAGREE") << '\n';
    all = all && c.sign_agrees;
  }
  return all ? 0 : 2;
}

int cmd_exit_diagnostics(const RunConfig& config, const std::string& checkpoint) {
  const NeuralLevelSetd net = state_for(config, checkpoint);
  const PolygonalBoundary boundary = config.initial_boundary();
  const ShapeEvaluation eval = evaluate_shape(net, boundary, config, Rng(config.seed).split(1));
  for (Side side : {Side::plus, Side::minus}) {
    const ExitSampleSet& exits = side == Side::plus ? eval.exits_plus : eval.exits_minus;
    const PartitionSide& part = eval.partition.side(side);
    write_exit_samples(exits, in_dir(config, std::string("exits_") + to_string(side) + ".csv"));
    std::int64_t steps = 0;
    std::int64_t at_vertex = 0;
    double max_offset = 0.0;
    for (const auto& s : exits.samples) {
      steps += s.steps;
      if (s.exit.kind == BoundaryLocation::Kind::vertex) ++at_vertex;
      max_offset = std::max(max_offset, distance_to_chain(boundary, s.exit.point));
    }
    const double n = std::max<double>(1.0, static_cast<double>(exits.samples.size()));
    std::cout << to_string(side) << ": measure " << part.measure << " m " << part.m << " C " << part.C
              << " exits " << exits.samples.size() << " mean steps " << static_cast<double>(steps) / n
              << " vertex exits " << at_vertex << " max projected offset " << max_offset << '\n';
  }
  write_derivative_csv(eval.derivative, in_dir(config, "derivative.csv"));
  std::cout << "objective " << eval.objective << " |d|_inf " << eval.derivative.values.lpNorm<Eigen::Infinity>()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  retain_heap_between_steps();
  CLI::App app{"Mesh-free probabilistic shape optimization"};
  app.require_subcommand(1);
  std::string config_path;
  std::string checkpoint;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub, bool with_state) {
    sub->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "override a config key, key=value (repeatable)");
    if (with_state) sub->add_option("--state", checkpoint, "start from a saved network instead of training");
  };
  auto* run_cmd = app.add_subcommand("run", "shape gradient descent");
  add_common(run_cmd, true);
  auto* train_cmd = app.add_subcommand("pinn-train", "state solve on the initial shape only");
  add_common(train_cmd, false);
  auto* check_cmd = app.add_subcommand("derivative-check", "finite-difference validation of the derivative");
  add_common(check_cmd, true);
  auto* exit_cmd = app.add_subcommand("exit-diagnostics", "dump exit samples on the initial shape");
  add_common(exit_cmd, true);
  auto* defaults_cmd = app.add_subcommand("print-config", "print the effective config");
  add_common(defaults_cmd, false);

  CLI11_PARSE(app, argc, argv);
  try {
    const RunConfig config = load_with_overrides(config_path, overrides);
    if (run_cmd->parsed()) return cmd_run(config, checkpoint);
    if (train_cmd->parsed()) return cmd_pinn_train(config);
    if (check_cmd->parsed()) return cmd_derivative_check(config, checkpoint);
    if (exit_cmd->parsed()) return cmd_exit_diagnostics(config, checkpoint);
    std::cout << format_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
