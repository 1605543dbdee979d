#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

// Source data in English units converted to SI.
constexpr double kRe = 6371203.92;          // m
constexpr double kS = 249.9091776;          // m^2
constexpr double kCl0 = -0.2070;
constexpr double kCl1 = 1.6756;             // per rad
constexpr double kCd0 = 0.07854;
constexpr double kCd1 = -0.3529;            // per rad
constexpr double kCd2 = 2.0400;             // per rad^2
constexpr double kH = 7254.24;              // m
constexpr double kRho0 = 1.225570827014494; // kg/m^3
constexpr double kMu = 3.986031954093051e14;
constexpr double kMass = 92079.2525560557;  // kg

}  // namespace

// Atmospheric entry of a winged vehicle, maximizing crossrange (terminal
// latitude). States: altitude, longitude, latitude, speed, flight path
// angle, azimuth; controls: angle of attack, bank angle.
BenchmarkCase rlv_entry() {
  auto problem = std::make_shared<ProblemDefinition>();
  problem->name = "rlv-entry";

  PhaseDefinition ph;
  ph.n_y = 6;
  ph.n_u = 2;
  ph.n_q = 0;
  ph.n_c = 0;

  Eigen::VectorXd lo(6), up(6);
  lo << 0.0, -kPi, -70.0 * kDeg, 10.0, -80.0 * kDeg, -kPi;
  up << 80000.0, kPi, 70.0 * kDeg, 10000.0, 80.0 * kDeg, kPi;
  ph.state = Bounds(lo, up);

  Eigen::VectorXd y0(6), yf_lo(6), yf_up(6);
  y0 << 79248.0, 0.0, 0.0, 7802.88, -1.0 * kDeg, 90.0 * kDeg;
  ph.initial_state = Bounds::fixed(y0);
  yf_lo << 24384.0, -kPi, -70.0 * kDeg, 762.0, -5.0 * kDeg, -kPi;
  yf_up << 24384.0, kPi, 70.0 * kDeg, 762.0, -5.0 * kDeg, kPi;
  ph.final_state = Bounds(yf_lo, yf_up);

  Eigen::VectorXd ulo(2), uup(2);
  ulo << -kPi / 2.0, -kPi / 2.0;
  uup << kPi / 2.0, 1.0 * kDeg;
  ph.control = Bounds(ulo, uup);

  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds{10.0, 3000.0};

  ph.guess.time = Eigen::Vector2d(0.0, 1000.0);
  ph.guess.state = Eigen::MatrixXd(2, 6);
  ph.guess.state.row(0) = y0;
  ph.guess.state.row(1) << 24384.0, 0.0, 0.0, 762.0, -5.0 * kDeg, 90.0 * kDeg;
  ph.guess.control = Eigen::MatrixXd::Zero(2, 2);

  ph.dynamics = make_kernel_function(9, 6, "rlv dynamics", [](auto x, auto& out) {
    const auto& h = x[0];
    const auto& lat = x[2];
    const auto& v = x[3];
    const auto& gamma = x[4];
    const auto& psi = x[5];
    const auto& alpha = x[6];
    const auto& sigma = x[7];

    const auto r = h + kRe;
    const auto rho = kRho0 * exp(-h / kH);
    const auto cl = kCl0 + kCl1 * alpha;
    const auto cd = kCd0 + alpha * (kCd1 + kCd2 * alpha);
    const auto q = 0.5 * rho * v * v;
    const auto drag = q * kS * cd;
    const auto lift = q * kS * cl;
    const auto grav = kMu / (r * r);

    out[0] = v * sin(gamma);
    out[1] = v * cos(gamma) * sin(psi) / (r * cos(lat));
    out[2] = v * cos(gamma) * cos(psi) / r;
    out[3] = -drag / kMass - grav * sin(gamma);
    out[4] = lift * cos(sigma) / (kMass * v) - (grav / v - v / r) * cos(gamma);
    out[5] = lift * sin(sigma) / (kMass * v * cos(gamma)) +
             v * cos(gamma) * sin(psi) * tan(lat) / r;
  });

  problem->phases.push_back(std::move(ph));
  // Endpoint inputs [y0(6), t0, yf(6), tf]; crossrange is the terminal
  // latitude, maximized by minimizing its negative.
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "rlv objective",
                                            [](auto x, auto& out) { out[0] = -x[9]; });

  BenchmarkCase bc;
  bc.name = "rlv-entry";
  bc.problem = problem;
  bc.initial_mesh.phases.push_back(PhaseMesh::uniform(10, 4));
  bc.options.method = RefinementMethod::hp_i;
  bc.options.refinement.n_min = 4;
  bc.options.refinement.n_max = 10;
  bc.options.mesh_tolerance = 1e-7;
  bc.options.refinement.tolerance = 1e-7;
  bc.options.nlp_tolerance = 1e-7;
  bc.reference_cost = -0.59627639;
  bc.reproduction_tolerance = 5e-3;
  return bc;
}

}  // namespace ocpkit
