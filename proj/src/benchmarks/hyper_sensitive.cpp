#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

// Stiff one-state problem: minimize 1/2 integral (x^2 + u^2) dt subject to
// xdot = -x^3 + u, x(0) = 1, x(tf) = 1.5, tf = 10000. The solution decays
// to zero in a thin initial layer and climbs back in a thin terminal layer.
BenchmarkCase hyper_sensitive() {
  auto problem = std::make_shared<ProblemDefinition>();
  problem->name = "hyper-sensitive";

  PhaseDefinition ph;
  ph.n_y = 1;
  ph.n_u = 1;
  ph.n_q = 1;
  ph.n_c = 0;
  ph.state = Bounds::box(1, -50.0, 50.0);
  ph.initial_state = Bounds::fixed(Eigen::VectorXd::Constant(1, 1.0));
  ph.final_state = Bounds::fixed(Eigen::VectorXd::Constant(1, 1.5));
  ph.control = Bounds::box(1, -50.0, 50.0);
  ph.integrals = Bounds::box(1, -100.0, 2e4);
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(10000.0);

  ph.guess.time = Eigen::Vector2d(0.0, 10000.0);
  ph.guess.state = Eigen::MatrixXd(2, 1);
  ph.guess.state << 1.0, 1.5;
  ph.guess.control = Eigen::MatrixXd::Zero(2, 1);

  ph.dynamics = make_kernel_function(3, 1, "hyper-sensitive dynamics", [](auto x, auto& out) {
    const auto& y = x[0];
    const auto& u = x[1];
    out[0] = -y * y * y + u;
  });
  ph.integrand = make_kernel_function(3, 1, "hyper-sensitive integrand", [](auto x, auto& out) {
    const auto& y = x[0];
    const auto& u = x[1];
    out[0] = 0.5 * (y * y + u * u);
  });

  problem->phases.push_back(std::move(ph));
  // Endpoint inputs [x0, t0, xf, tf, Q]; the cost is the lifted integral.
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1,
                                            "hyper-sensitive objective",
                                            [](auto x, auto& out) { out[0] = x[4]; });

  BenchmarkCase bc;
  bc.name = "hyper-sensitive";
  bc.problem = problem;
  bc.initial_mesh.phases.push_back(PhaseMesh::uniform(10, 3));
  bc.options.method = RefinementMethod::hp_i;
  bc.options.refinement.n_min = 3;
  bc.options.refinement.n_max = 10;
  bc.options.mesh_tolerance = 1e-6;
  bc.options.refinement.tolerance = 1e-6;
  bc.options.nlp_tolerance = 1e-7;
  bc.reference_cost = 3.3620559;
  bc.reproduction_tolerance = 1e-4;
  return bc;
}

}  // namespace ocpkit
