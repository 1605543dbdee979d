#include <cmath>

#include "doctest.h"
#include "ocpkit/benchmarks.hpp"
#include "ocpkit/refinement.hpp"

using namespace ocpkit;

namespace {

// Control-free integration fixture: ydot = f(t, y) with a fixed window,
// objective reads the terminal state.
template <class F>
std::shared_ptr<ProblemDefinition> integration_problem(F rate, double y0, double tf) {
  auto problem = std::make_shared<ProblemDefinition>();
  PhaseDefinition ph;
  ph.n_y = 1;
  ph.n_u = 0;
  ph.state = Bounds::box(1, -50.0, 50.0);
  ph.initial_state = Bounds::fixed(Eigen::VectorXd::Constant(1, y0));
  ph.control = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.integrals = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.path = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(tf);
  ph.guess.time = Eigen::Vector2d(0.0, tf);
  ph.guess.state = Eigen::MatrixXd::Constant(2, 1, y0);
  ph.dynamics = make_kernel_function(2, 1, "fixture dynamics", rate);
  problem->phases.push_back(std::move(ph));
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "yf",
                                            [](auto x, auto& out) { out[0] = x[2]; });
  return problem;
}

PhaseSolution solve_fixture(const ProblemDefinition& problem, const Mesh& mesh,
                            Eigen::VectorXd& statics) {
  AdaptiveOptions options;
  options.max_mesh_iterations = 1;
  options.mesh_tolerance = 1e-30;  // force a single estimate pass
  const AdaptiveResult res = solve_adaptive(problem, mesh, options);
  statics = res.solution.static_params;
  return res.solution.phases[0];
}

}  // namespace

TEST_CASE("polynomial dynamics give machine-level error estimates") {
  // ydot = 2t with y = t^2 lies inside every degree >= 2 space.
  auto problem = integration_problem([](auto x, auto& out) { out[0] = 2.0 * x[1]; }, 0.0, 2.0);
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(3, 3));
  Eigen::VectorXd statics;
  const PhaseSolution sol = solve_fixture(*problem, mesh, statics);
  const Eigen::VectorXd errors = estimate_error(*problem, sol, statics);
  CHECK(errors.maxCoeff() < 1e-10);
}

TEST_CASE("smooth exponential error decreases when an interval is halved") {
  auto problem = integration_problem([](auto x, auto& out) { out[0] = -x[0]; }, 1.0, 2.0);
  Mesh coarse;
  coarse.phases.push_back(PhaseMesh::uniform(1, 4));
  Eigen::VectorXd statics;
  const PhaseSolution sol1 = solve_fixture(*problem, coarse, statics);
  const double e1 = estimate_error(*problem, sol1, statics).maxCoeff();

  Mesh halved;
  halved.phases.push_back(PhaseMesh::uniform(2, 4));
  const PhaseSolution sol2 = solve_fixture(*problem, halved, statics);
  const double e2 = estimate_error(*problem, sol2, statics).maxCoeff();
  CHECK(e2 < e1);
  CHECK(e1 > 0.0);
}

TEST_CASE("cubic decay fixture: halving strictly decreases the interval error") {
  auto problem = integration_problem(
      [](auto x, auto& out) { out[0] = -x[0] * x[0] * x[0]; }, 1.0, 4.0);
  Mesh coarse;
  coarse.phases.push_back(PhaseMesh::uniform(1, 3));
  Eigen::VectorXd statics;
  const PhaseSolution sol1 = solve_fixture(*problem, coarse, statics);
  const double e1 = estimate_error(*problem, sol1, statics).maxCoeff();

  Mesh halved;
  halved.phases.push_back(PhaseMesh::uniform(2, 3));
  const PhaseSolution sol2 = solve_fixture(*problem, halved, statics);
  const double e2 = estimate_error(*problem, sol2, statics).maxCoeff();
  CHECK(e2 < e1);
}

TEST_CASE("hp-I degree arithmetic") {
  PhaseMesh mesh = PhaseMesh::uniform(1, 3);
  RefinementOptions options;
  options.n_min = 3;
  options.n_max = 10;
  options.tolerance = 1e-6;

  Eigen::VectorXd ok(1);
  ok << 1e-7;
  const PhaseMesh same = refine_hp_i(ok, mesh, options);
  CHECK(same.degrees == mesh.degrees);
  CHECK(same.breakpoints == mesh.breakpoints);

  // e/tol = 1e3: N' = 3 + ceil(ln(1e3)/ln(3)) = 10 <= n_max.
  Eigen::VectorXd e3(1);
  e3 << 1e-3;
  const PhaseMesh raised = refine_hp_i(e3, mesh, options);
  REQUIRE(raised.degrees.size() == 1);
  CHECK(raised.degrees[0] == 10);

  // e/tol = 1e6: N' = 16 > n_max: split into ceil(16/3) = 6 pieces of 3.
  Eigen::VectorXd e6(1);
  e6 << 1.0;
  const PhaseMesh split = refine_hp_i(e6, mesh, options);
  REQUIRE(split.degrees.size() == 6);
  for (int d : split.degrees) CHECK(d == 3);
  CHECK(split.valid());
}

TEST_CASE("hp-II branch selection") {
  PhaseMesh mesh = PhaseMesh::uniform(1, 3);
  RefinementOptions options;
  options.n_min = 3;
  options.n_max = 10;
  options.tolerance = 1e-6;
  options.curvature_ratio_threshold = 2.0;

  Eigen::VectorXd failing(1);
  failing << 1e-3;

  // Flat curvature (straight-line state): ratio treated as 1, p-refine.
  std::vector<Eigen::VectorXd> flat{Eigen::VectorXd::Zero(50)};
  const PhaseMesh p_refined = refine_hp_ii(failing, mesh, flat, options);
  REQUIRE(p_refined.degrees.size() == 1);
  CHECK(p_refined.degrees[0] == 10);

  // Strong max/mean ratio: h-refine with n_min degrees.
  Eigen::VectorXd spiky = Eigen::VectorXd::Constant(50, 0.1);
  spiky[49] = 10.0;
  std::vector<Eigen::VectorXd> spike{spiky};
  const PhaseMesh h_refined = refine_hp_ii(failing, mesh, spike, options);
  CHECK(h_refined.degrees.size() >= 2);
  for (int d : h_refined.degrees) CHECK(d == options.n_min);
  CHECK(h_refined.valid());
}

TEST_CASE("hp-II equidistributes the curvature density") {
  // State tau -> (tau+1)^4 on one interval: curvature 12 (tau+1)^2, whose
  // cumulative integral splits in half at tau = 4^(1/3) - 1.
  PhaseSolution sol;
  sol.mesh.breakpoints = {-1.0, 1.0};
  sol.mesh.degrees = {5};
  const auto& basis = lgr_basis(5);
  sol.tau.resize(6);
  sol.tau.head(5) = basis.points;
  sol.tau[5] = 1.0;
  sol.t0 = 0.0;
  sol.tf = 1.0;
  sol.state.resize(6, 1);
  for (Index i = 0; i < 6; ++i) sol.state(i, 0) = std::pow(sol.tau[i] + 1.0, 4);
  sol.control.resize(5, 0);
  sol.integrals.resize(0);

  const auto curvature = sample_curvature(sol, 2000);
  RefinementOptions options;
  options.n_min = 3;
  options.n_max = 4;  // force a split via a large predicted degree
  options.tolerance = 1e-9;
  options.curvature_ratio_threshold = 2.0;
  Eigen::VectorXd failing(1);
  failing << 1.0;
  const PhaseMesh refined = refine_hp_ii(failing, sol.mesh, curvature, options);
  REQUIRE(refined.degrees.size() >= 2);
  if (refined.degrees.size() == 2) {
    CHECK(refined.breakpoints[1] == doctest::Approx(std::cbrt(4.0) - 1.0).epsilon(5e-3));
  } else {
    // More pieces: breakpoints cluster toward the high-curvature edge.
    const double first_width = refined.breakpoints[1] - refined.breakpoints[0];
    const double last_width =
        refined.breakpoints.back() - refined.breakpoints[refined.breakpoints.size() - 2];
    CHECK(last_width < first_width);
  }
}

TEST_CASE("refinement never coarsens") {
  PhaseMesh mesh;
  mesh.breakpoints = {-1.0, -0.2, 0.4, 1.0};
  mesh.degrees = {4, 5, 6};
  RefinementOptions options;
  options.n_min = 3;
  options.n_max = 10;
  options.tolerance = 1e-6;
  Eigen::VectorXd errors(3);
  errors << 1e-8, 1e-4, 1e-2;
  const PhaseMesh refined = refine_hp_i(errors, mesh, options);
  CHECK(refined.valid());
  CHECK(refined.total_collocation() >= mesh.total_collocation());
  CHECK(refined.degrees[0] == 4);
}

TEST_CASE("exact-solution problems terminate on the first iteration") {
  auto problem = integration_problem([](auto x, auto& out) { out[0] = 2.0 * x[1]; }, 0.0, 2.0);
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(2, 4));
  AdaptiveOptions options;
  options.mesh_tolerance = 1e-6;
  const AdaptiveResult res = solve_adaptive(*problem, mesh, options);
  CHECK(res.status == SolveStatus::solved);
  CHECK(res.solution.history.iterations.size() == 1);
}

TEST_CASE("single mesh iteration cap") {
  const BenchmarkCase bc = hyper_sensitive();
  AdaptiveOptions options = bc.options;
  options.max_mesh_iterations = 1;
  const AdaptiveResult res = solve_adaptive(*bc.problem, bc.initial_mesh, options);
  CHECK(res.status == SolveStatus::max_mesh_iterations);
  CHECK(res.solution.history.iterations.size() == 1);
}

TEST_CASE("smooth decay converges monotonically under hp-I") {
  auto problem = integration_problem([](auto x, auto& out) { out[0] = -x[0]; }, 1.0, 3.0);
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(1, 3));
  AdaptiveOptions options;
  options.mesh_tolerance = 1e-8;
  options.refinement.tolerance = 1e-8;
  const AdaptiveResult res = solve_adaptive(*problem, mesh, options);
  REQUIRE(res.status == SolveStatus::solved);
  const auto& hist = res.solution.history.iterations;
  for (size_t k = 1; k < hist.size(); ++k) CHECK(hist[k].max_error < hist[k - 1].max_error);
  const auto& phase = res.solution.phases[0];
  CHECK(phase.state(phase.state.rows() - 1, 0) ==
        doctest::Approx(std::exp(-3.0)).epsilon(1e-7));
}

TEST_CASE("mesh history point counts match stored meshes") {
  const BenchmarkCase bc = hyper_sensitive();
  AdaptiveOptions options = bc.options;
  options.max_mesh_iterations = 3;
  const AdaptiveResult res = solve_adaptive(*bc.problem, bc.initial_mesh, options);
  REQUIRE(res.solution.history.iterations.size() >= 1);
  int total = 0;
  for (const auto& ph : res.solution.phases) total += ph.mesh.total_collocation();
  CHECK(res.solution.history.iterations.back().collocation_points == total);
  for (size_t k = 0; k < res.solution.history.iterations.size(); ++k)
    CHECK(res.solution.history.iterations[k].iteration == static_cast<int>(k) + 1);
}
