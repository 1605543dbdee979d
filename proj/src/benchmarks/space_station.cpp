#include <array>

#include <Eigen/Dense>

#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kOmegaOrb = 0.6511 * kPi / 180.0;
constexpr double kHMax = 10000.0;

const Eigen::Matrix3d& inertia() {
  static const Eigen::Matrix3d j = (Eigen::Matrix3d() <<
      2.80701911616e7, 4.822509936e5, -1.71675094448e7,
      4.822509936e5, 9.5144639344e7, 6.02604448e4,
      -1.71675094448e7, 6.02604448e4, 7.6594401336e7).finished();
  return j;
}

const Eigen::Matrix3d& inertia_inverse() {
  static const Eigen::Matrix3d inv = inertia().inverse();
  return inv;
}

template <class T>
using Vec3 = std::array<T, 3>;

template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
Vec3<T> mat_apply(const Eigen::Matrix3d& m, const Vec3<T>& v) {
  Vec3<T> r;
  for (int i = 0; i < 3; ++i) r[static_cast<size_t>(i)] =
      m(i, 0) * v[0] + m(i, 1) * v[1] + m(i, 2) * v[2];
  return r;
}

// Attitude dynamics of the station: omega angular velocity, r the
// Euler-Rodrigues attitude vector, h the stored momentum; u is the applied
// moment. The terminal conditions ask for a torque-equilibrium attitude.
template <class T>
void station_rates(std::span<const T> x, bool with_control, std::array<T, 9>& rates) {
  const Vec3<T> omega{x[0], x[1], x[2]};
  const Vec3<T> r{x[3], x[4], x[5]};
  const Vec3<T> h{x[6], x[7], x[8]};
  const Eigen::Matrix3d& jmat = inertia();

  // C = I + 2/(1 + r'r) (r~ r~ - r~); columns 2 and 3 drive the orbital
  // frame rate and the gravity-gradient torque.
  const T rr = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
  const T s = 2.0 / (1.0 + rr);
  // r~ r~ = r r' - (r'r) I.
  Vec3<T> c2{s * (r[0] * r[1] + r[2]), 1.0 + s * (r[1] * r[1] - rr), s * (r[1] * r[2] - r[0])};
  Vec3<T> c3{s * (r[0] * r[2] - r[1]), s * (r[1] * r[2] + r[0]), 1.0 + s * (r[2] * r[2] - rr)};

  const Vec3<T> jc3 = mat_apply(jmat, c3);
  const Vec3<T> tau_gg_v = cross(c3, jc3);
  const Vec3<T> jw = mat_apply(jmat, omega);
  Vec3<T> jwh{jw[0] + h[0], jw[1] + h[1], jw[2] + h[2]};
  const Vec3<T> gyro = cross(omega, jwh);

  Vec3<T> torque;
  for (int i = 0; i < 3; ++i) {
    torque[static_cast<size_t>(i)] =
        3.0 * kOmegaOrb * kOmegaOrb * tau_gg_v[static_cast<size_t>(i)] -
        gyro[static_cast<size_t>(i)];
    if (with_control) torque[static_cast<size_t>(i)] = torque[static_cast<size_t>(i)] - x[9 + i];
  }
  const Vec3<T> wdot = mat_apply(inertia_inverse(), torque);

  // rdot = 1/2 (r r' + I + r~)(omega - omega0), omega0 = -omega_orb C2.
  Vec3<T> werr{omega[0] + kOmegaOrb * c2[0], omega[1] + kOmegaOrb * c2[1],
               omega[2] + kOmegaOrb * c2[2]};
  const T rw = r[0] * werr[0] + r[1] * werr[1] + r[2] * werr[2];
  const Vec3<T> rxw = cross(r, werr);
  Vec3<T> rdot;
  for (int i = 0; i < 3; ++i)
    rdot[static_cast<size_t>(i)] =
        0.5 * (r[static_cast<size_t>(i)] * rw + werr[static_cast<size_t>(i)] +
               rxw[static_cast<size_t>(i)]);

  for (int i = 0; i < 3; ++i) {
    rates[static_cast<size_t>(i)] = wdot[static_cast<size_t>(i)];
    rates[static_cast<size_t>(i) + 3] = rdot[static_cast<size_t>(i)];
    rates[static_cast<size_t>(i) + 6] = with_control ? T(x[9 + i]) : T(0.0);
  }
}

}  // namespace

BenchmarkCase space_station() {
  auto problem = std::make_shared<ProblemDefinition>();
  problem->name = "space-station";

  PhaseDefinition ph;
  ph.n_y = 9;
  ph.n_u = 3;
  ph.n_q = 1;
  ph.n_c = 1;

  Eigen::VectorXd lo(9), up(9);
  lo << -2e-3, -2e-3, -2e-3, -1.0, -1.0, -1.0, -15000.0, -15000.0, -15000.0;
  up = -lo;
  ph.state = Bounds(lo, up);

  Eigen::VectorXd y0(9);
  y0 << -9.5380685844896e-6, -1.1363312657036e-3, 5.3472801108427e-6,
      2.9963689649816e-3, 1.5334477761054e-1, 3.8359805613992e-3,
      5000.0, 5000.0, 5000.0;
  ph.initial_state = Bounds::fixed(y0);

  ph.control = Bounds::box(3, -150.0, 150.0);
  ph.integrals = Bounds::box(1, -100.0, 100.0);
  ph.path = Bounds(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, kHMax * kHMax));
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(1800.0);

  ph.guess.time = Eigen::Vector2d(0.0, 1800.0);
  ph.guess.state = Eigen::MatrixXd(2, 9);
  ph.guess.state.row(0) = y0;
  ph.guess.state.row(1) = y0;
  ph.guess.control = Eigen::MatrixXd::Zero(2, 3);

  ph.dynamics = make_kernel_function(13, 9, "station dynamics", [](auto x, auto& out) {
    using T = std::decay_t<decltype(out[0])>;
    std::array<T, 9> rates;
    station_rates<T>(x, true, rates);
    for (int i = 0; i < 9; ++i) out[static_cast<size_t>(i)] = rates[static_cast<size_t>(i)];
  });
  ph.path_fn = make_kernel_function(13, 1, "station momentum bound", [](auto x, auto& out) {
    out[0] = x[6] * x[6] + x[7] * x[7] + x[8] * x[8];
  });
  ph.integrand = make_kernel_function(13, 1, "station integrand", [](auto x, auto& out) {
    out[0] = 0.5 * (x[9] * x[9] + x[10] * x[10] + x[11] * x[11]);
  });

  problem->phases.push_back(std::move(ph));

  // Endpoint inputs [y0(9), t0, yf(9), tf, Q]: objective is the lifted
  // control energy; events pin the terminal attitude at torque equilibrium.
  problem->n_b = 6;
  problem->event = Bounds(Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6));
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "station objective",
                                            [](auto x, auto& out) { out[0] = x[20]; });
  problem->events = make_kernel_function(problem->endpoint_inputs(), 6, "station events",
                                         [](auto x, auto& out) {
    using T = std::decay_t<decltype(out[0])>;
    std::array<T, 9> rates;
    // Terminal states occupy inputs 10..18.
    station_rates<T>(x.subspan(10, 9), false, rates);
    for (int i = 0; i < 6; ++i) out[static_cast<size_t>(i)] = rates[static_cast<size_t>(i)];
  });

  BenchmarkCase bc;
  bc.name = "space-station";
  bc.problem = problem;
  bc.initial_mesh.phases.push_back(PhaseMesh::uniform(10, 4));
  bc.options.method = RefinementMethod::hp_i;
  bc.options.refinement.n_min = 4;
  bc.options.refinement.n_max = 10;
  bc.options.mesh_tolerance = 1e-6;
  bc.options.refinement.tolerance = 1e-6;
  bc.options.nlp_tolerance = 1e-7;
  bc.reference_cost = 3.5867511e-6;
  bc.reproduction_tolerance = 5e-7;
  bc.gating = false;
  return bc;
}

}  // namespace ocpkit
