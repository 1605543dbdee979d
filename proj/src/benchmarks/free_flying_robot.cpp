#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kAlpha = 0.2;
constexpr double kBeta = 0.2;
}  // namespace

// Planar robot with two thruster pairs; the Hamiltonian is linear in the
// controls, so the optimal profile is bang-bang. Minimizes total thrust
// integral over a fixed 12 second horizon.
BenchmarkCase free_flying_robot() {
  auto problem = std::make_shared<ProblemDefinition>();
  problem->name = "free-flying-robot";

  PhaseDefinition ph;
  ph.n_y = 6;
  ph.n_u = 4;
  ph.n_q = 1;
  ph.n_c = 2;

  Eigen::VectorXd lo(6), up(6);
  lo << -15.0, -15.0, -5.0, -5.0, -kPi, -2.0;
  up << 15.0, 15.0, 5.0, 5.0, kPi, 2.0;
  ph.state = Bounds(lo, up);

  Eigen::VectorXd y0(6), yf(6);
  y0 << -10.0, -10.0, 0.0, 0.0, kPi / 2.0, 0.0;
  yf.setZero();
  ph.initial_state = Bounds::fixed(y0);
  ph.final_state = Bounds::fixed(yf);

  ph.control = Bounds::box(4, 0.0, 1.0);
  ph.integrals = Bounds::box(1, -10.0, 60.0);
  ph.path = Bounds::box(2, -1.0, 1.0);
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(12.0);

  ph.guess.time = Eigen::Vector2d(0.0, 12.0);
  ph.guess.state = Eigen::MatrixXd(2, 6);
  ph.guess.state.row(0) = y0;
  ph.guess.state.row(1) = yf;
  ph.guess.control = Eigen::MatrixXd::Constant(2, 4, 0.5);

  ph.dynamics = make_kernel_function(11, 6, "robot dynamics", [](auto x, auto& out) {
    const auto& vx = x[2];
    const auto& vy = x[3];
    const auto& theta = x[4];
    const auto& omega = x[5];
    const auto f1 = x[6] - x[7];
    const auto f2 = x[8] - x[9];
    out[0] = vx;
    out[1] = vy;
    out[2] = (f1 + f2) * cos(theta);
    out[3] = (f1 + f2) * sin(theta);
    out[4] = omega;
    out[5] = kAlpha * f1 - kBeta * f2;
  });
  ph.path_fn = make_kernel_function(11, 2, "robot thrust bounds", [](auto x, auto& out) {
    out[0] = x[6] - x[7];
    out[1] = x[8] - x[9];
  });
  ph.integrand = make_kernel_function(11, 1, "robot integrand", [](auto x, auto& out) {
    out[0] = x[6] + x[7] + x[8] + x[9];
  });

  problem->phases.push_back(std::move(ph));
  // Endpoint inputs [y0(6), t0, yf(6), tf, Q].
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "robot objective",
                                            [](auto x, auto& out) { out[0] = x[14]; });

  BenchmarkCase bc;
  bc.name = "free-flying-robot";
  bc.problem = problem;
  bc.initial_mesh.phases.push_back(PhaseMesh::uniform(10, 5));
  bc.options.method = RefinementMethod::hp_ii;
  bc.options.refinement.n_min = 3;
  bc.options.refinement.n_max = 10;
  bc.options.mesh_tolerance = 1e-6;
  bc.options.refinement.tolerance = 1e-6;
  bc.options.nlp_tolerance = 1e-7;
  bc.reference_cost = 7.9101471;
  bc.reproduction_tolerance = 5e-2;
  return bc;
}

}  // namespace ocpkit
