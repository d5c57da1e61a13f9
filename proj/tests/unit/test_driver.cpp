#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "probshape/driver.hpp"
#include "probshape/errors.hpp"
#include "support.hpp"

using namespace probshape;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig tiny_config(const std::string& output_dir) {
  RunConfig c;
  c.vertex_count = 24;
  c.n_interior = 1000;
  c.n_boundary = 300;
  c.initial_steps = 400;
  c.initial_restarts = 1;
  c.learning_rate = 3e-2;
  c.learning_rate_late = 1e-3;
  c.transfer_steps = 20;
  c.transfer_learning_rate = 3e-3;
  c.m_uniform = 5000;
  c.m_constant = 5000;
  c.m_exit = 20;
  c.max_proposals = 2'000'000;
  c.max_exit_steps = 2'000'000;
  c.max_iterations = 2;
  c.seed = 5;
  c.write_svg = false;
  c.output_dir = output_dir;
  return c;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("probshape_unit_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse(
      "# comment\n"
      "vertex_count = 64   # trailing comment\n"
      "\n"
      "delta=1e-5\n"
      "initial_shape = ellipse\n"
      "hidden_layers = 10,30\n"
      "dump_exits = true\n"
      "objective_formula = as_printed\n"
      "output_dir = runs/x\n");
  CHECK(c.vertex_count == 64);
  CHECK(c.delta == 1e-5);
  CHECK(c.initial_shape == InitialShape::ellipse);
  CHECK(c.hidden_layers == std::vector<int>{10, 30});
  CHECK(c.widths() == std::vector<int>{2, 10, 30, 1});
  CHECK(c.dump_exits);
  CHECK(c.objective_formula == ObjectiveFormula::as_printed);
  CHECK(c.output_dir == "runs/x");
  CHECK(c.m_exit == 100);

  CHECK_THROWS_AS(parse("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("delta = 1e-4\ndelta = 1e-5\n"), ConfigError);
  CHECK_THROWS_AS(parse("vertex_count = many\n"), ConfigError);
  CHECK_THROWS_AS(parse("vertex_count = 12x\n"), ConfigError);
  CHECK_THROWS_AS(parse("vertex_count\n"), ConfigError);
  CHECK_THROWS_AS(parse("initial_shape = square\n"), ConfigError);
  CHECK_THROWS_AS(parse("vertex_count = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("delta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("ball_radius = 0.6\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/probshape.cfg"), ConfigError);
}

TEST_CASE("formatted config parses back to the same config") {
  RunConfig c;
  c.delta = 1.0 / 3.0 * 1e-4;
  c.hidden_layers = {7, 9, 11};
  c.loss_weights = LossWeighting::mean;
  c.seed = 123456789012345ULL;
  c.step_length = 0.1 + 0.2;
  const RunConfig back = parse(format_config(c));
  CHECK(format_config(back) == format_config(c));
  CHECK(back.delta == c.delta);
  CHECK(back.step_length == c.step_length);
  CHECK(back.seed == c.seed);
}

TEST_CASE("initial shapes") {
  RunConfig c;
  c.vertex_count = 40;
  const auto ball = c.initial_boundary();
  CHECK(ball.size() == 40);
  for (const Point& v : ball.vertices()) CHECK((v - Point(0.5, 0.5)).norm() == doctest::Approx(0.25));
  c.initial_shape = InitialShape::ellipse;
  const TrackingData z = c.tracking();
  const auto ellipse = c.initial_boundary();
  for (const Point& v : ellipse.vertices()) CHECK(std::abs(z.bracket(v)) < 1e-14);
}

TEST_CASE("Monte Carlo objective") {
  const Point center(0.5, 0.5);
  const double kappa = 0.2;
  auto plateau = [&](const PointCloud& x) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd out(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) out(i) = (x.col(i) - center).norm() < 0.25 ? kappa : -1.0;
    return out;
  };
  auto zero = [](const PointCloud& x) -> Eigen::RowVectorXd { return Eigen::RowVectorXd::Zero(x.cols()); };
  PartitionOptions options;
  options.m_uniform = 20000;
  const auto est = estimate_partition(plateau, zero, Rectangle{}, options, Rng(40));
  CHECK(mc_objective(plateau, zero, est) == doctest::Approx(est.plus.measure * kappa * kappa / 2).epsilon(1e-12));
  CHECK(mc_objective(plateau, plateau, est) == 0.0);
  CHECK(mc_objective(plateau, zero, est, ObjectiveFormula::as_printed) ==
        doctest::Approx(est.plus.measure * 20000 * kappa * kappa / 2).epsilon(1e-12));

  PartitionEstimate none;
  CHECK_THROWS_AS(mc_objective(plateau, zero, none), SamplingError);
}

TEST_CASE("grid objective of the exact state on the ellipse") {
  RunConfig c;
  c.initial_shape = InitialShape::ellipse;
  c.vertex_count = 64;
  const NeuralLevelSetd zero_net;
  const TrackingData z = c.tracking();
  // int over the ellipse of 1/2 z^2 = pi a b peak^2 / 6.
  const double exact = std::numbers::pi * z.a * z.b * z.peak() * z.peak() / 6.0;
  const double grid = grid_objective(zero_net, z, PolygonalBoundary::ellipse(z.center, z.a, z.b, 512),
                                     c.holdall(), 800);
  CHECK(grid == doctest::Approx(exact).epsilon(2e-3));
}

TEST_CASE("short runs") {
  const auto dir_a = scratch("a");
  const auto dir_b = scratch("b");
  const RunConfig config_a = tiny_config(dir_a.string());
  const RunConfig config_b = tiny_config(dir_b.string());

  SUBCASE("zero iterations emit one record") {
    RunConfig c = config_a;
    c.max_iterations = 0;
    const RunResult r = run(c);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].iteration == 0);
    CHECK(r.stop_reason == "max_iterations");
    CHECK(r.boundary.vertices() == c.initial_boundary().vertices());
    CHECK(std::filesystem::exists(dir_a / "history.csv"));
    CHECK(std::filesystem::exists(dir_a / "boundary_iter_0.csv"));
    CHECK(std::filesystem::exists(dir_a / "state.bin"));
  }
  SUBCASE("records are contiguous and the run is reproducible") {
    RunHooks hooks;
    hooks.keep_evaluations = true;
    const RunResult a = run(config_a, hooks);
    const RunResult b = run(config_b);
    REQUIRE(a.history.size() == 3);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].iteration == static_cast<int>(i));
      CHECK(std::isfinite(a.history[i].objective));
      CHECK(a.evaluations[i].derivative.identity_holds());
    }
    CHECK(a.shapes.size() == a.history.size());
    CHECK(slurp(dir_a / "history.csv") == slurp(dir_b / "history.csv"));
    CHECK(slurp(dir_a / "boundary_final.csv") == slurp(dir_b / "boundary_final.csv"));
    CHECK(read_boundary_csv((dir_a / "boundary_iter_2.csv").string()).vertices() == a.shapes[2].vertices());
  }
  SUBCASE("hook can stop the run") {
    RunHooks hooks;
    hooks.on_iteration = [](const IterationRecord&, const ShapeEvaluation&) { return false; };
    RunConfig c = config_a;
    c.output_dir.clear();
    const RunResult r = run(c, hooks);
    CHECK(r.history.size() == 1);
  }
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}
