#include <array>
#include <cmath>

#include <Eigen/Geometry>

#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

constexpr double kMu = 3.986012e14;
constexpr double kRe = 6378145.0;
constexpr double kOmegaEarth = 7.29211585e-5;
constexpr double kG0 = 9.80665;
constexpr double kRho0 = 1.225;
constexpr double kScaleHeight = 7200.0;
constexpr double kDragArea = 4.0 * kPi;
constexpr double kCd = 0.5;

// Vehicle stack: nine strap-on boosters (six burn in phase 1, three in
// phase 2), a core first stage burning through phases 1-3, and an upper
// stage in phase 4.
constexpr double kBoosterTotal = 19290.0, kBoosterProp = 17010.0;
constexpr double kBoosterThrust = 628500.0, kBoosterIsp = 283.3;
constexpr double kStage1Total = 104380.0, kStage1Prop = 95550.0;
constexpr double kStage1Thrust = 1083100.0, kStage1Isp = 301.7;
constexpr double kStage2Total = 19300.0, kStage2Prop = 16820.0;
constexpr double kStage2Thrust = 110094.0, kStage2Isp = 467.2;
constexpr double kPayload = 4164.0;

constexpr double kT1 = 75.2, kT2 = 150.4, kT3 = 261.0;
constexpr double kMaxBurn4 = 700.0;

// Target geosynchronous transfer orbit.
constexpr double kTargetSma = 24361.14e3;
constexpr double kTargetEcc = 0.7308;
constexpr double kTargetInc = 28.5 * kDeg;
constexpr double kTargetRaan = 269.8 * kDeg;
constexpr double kTargetArgp = 130.5 * kDeg;

struct PhaseEngine {
  double thrust;
  double mdot;
};

PhaseEngine phase_engine(int p) {
  const double booster_mdot = kBoosterThrust / (kG0 * kBoosterIsp);
  const double stage1_mdot = kStage1Thrust / (kG0 * kStage1Isp);
  switch (p) {
    case 0: return {6.0 * kBoosterThrust + kStage1Thrust, 6.0 * booster_mdot + stage1_mdot};
    case 1: return {3.0 * kBoosterThrust + kStage1Thrust, 3.0 * booster_mdot + stage1_mdot};
    case 2: return {kStage1Thrust, stage1_mdot};
    default: return {kStage2Thrust, kStage2Thrust / (kG0 * kStage2Isp)};
  }
}

// Casing/stage mass dropped at the end of phases 1-3.
double jettison_mass(int p) {
  switch (p) {
    case 0: return 6.0 * (kBoosterTotal - kBoosterProp);
    case 1: return 3.0 * (kBoosterTotal - kBoosterProp);
    default: return kStage1Total - kStage1Prop;
  }
}

template <class T>
std::array<T, 3> cross3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
T dot3(const std::array<T, 3>& a, const std::array<T, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
T wrap_two_pi(T angle) {
  if (angle < T(0.0)) return angle + T(2.0 * kPi);
  return angle;
}

// Classical orbital elements (a, e, i, RAAN, argp) from an ECI state.
template <class T>
std::array<T, 5> orbital_elements(const std::array<T, 3>& r, const std::array<T, 3>& v) {
  const T rn = sqrt(dot3(r, r));
  const T v2 = dot3(v, v);
  const std::array<T, 3> h = cross3(r, v);
  const T hn = sqrt(dot3(h, h));
  const std::array<T, 3> n{-h[1], h[0], T(0.0)};
  const T nn = sqrt(n[0] * n[0] + n[1] * n[1]);
  const T rv = dot3(r, v);
  std::array<T, 3> evec;
  for (int i = 0; i < 3; ++i)
    evec[static_cast<size_t>(i)] =
        ((v2 - kMu / rn) * r[static_cast<size_t>(i)] - rv * v[static_cast<size_t>(i)]) / kMu;
  const T ecc = sqrt(dot3(evec, evec));
  const T energy = 0.5 * v2 - kMu / rn;
  const T sma = -kMu / (2.0 * energy);
  const T inc = acos(h[2] / hn);
  const T raan = wrap_two_pi(atan2(n[1], n[0]));
  const std::array<T, 3> nxe = cross3(n, evec);
  const T argp = wrap_two_pi(atan2(dot3(nxe, h) / hn, dot3(n, evec)));
  return {sma, ecc, inc, raan, argp};
}

// Real-valued inverse used only to build the phase 3/4 initial guess.
void elements_to_state(double sma, double ecc, double inc, double raan, double argp, double nu,
                       Eigen::Vector3d& r, Eigen::Vector3d& v) {
  const double p = sma * (1.0 - ecc * ecc);
  const double rn = p / (1.0 + ecc * std::cos(nu));
  const Eigen::Vector3d r_pqw(rn * std::cos(nu), rn * std::sin(nu), 0.0);
  const double c = std::sqrt(kMu / p);
  const Eigen::Vector3d v_pqw(-c * std::sin(nu), c * (ecc + std::cos(nu)), 0.0);
  Eigen::Matrix3d rot;
  rot = Eigen::AngleAxisd(raan, Eigen::Vector3d::UnitZ()) *
        Eigen::AngleAxisd(inc, Eigen::Vector3d::UnitX()) *
        Eigen::AngleAxisd(argp, Eigen::Vector3d::UnitZ());
  r = rot * r_pqw;
  v = rot * v_pqw;
}

template <class T>
void launch_rates(std::span<const T> x, const PhaseEngine& engine, std::vector<T>& out) {
  const std::array<T, 3> r{x[0], x[1], x[2]};
  const std::array<T, 3> v{x[3], x[4], x[5]};
  const T& m = x[6];
  const std::array<T, 3> u{x[7], x[8], x[9]};

  const T rn = sqrt(dot3(r, r));
  const T h = rn - kRe;
  // Exponent guard keeps probes far below ground finite; the feasible set
  // (|r| >= Re) never reaches the clamp.
  const T rho = kRho0 * exp(min(-h / kScaleHeight, T(300.0)));
  const std::array<T, 3> vrel{v[0] + kOmegaEarth * r[1], v[1] - kOmegaEarth * r[0], v[2]};
  const T vrel_n = sqrt(dot3(vrel, vrel) + 1e-12);
  const T drag_coeff = -0.5 * kCd * kDragArea * rho * vrel_n;
  const T grav = -kMu / (rn * rn * rn);
  const T acc = engine.thrust / m;

  out[0] = v[0];
  out[1] = v[1];
  out[2] = v[2];
  out[3] = grav * r[0] + acc * u[0] + drag_coeff * vrel[0] / m;
  out[4] = grav * r[1] + acc * u[1] + drag_coeff * vrel[1] / m;
  out[5] = grav * r[2] + acc * u[2] + drag_coeff * vrel[2] / m;
  out[6] = T(-engine.mdot);
}

PhaseDefinition make_phase(int p, double t_start, double t_end, bool tf_free, double m_start,
                           double m_end, const Eigen::Vector3d& r_guess,
                           const Eigen::Vector3d& v_guess) {
  PhaseDefinition ph;
  ph.n_y = 7;
  ph.n_u = 3;
  ph.n_q = 0;
  ph.n_c = 2;

  Eigen::VectorXd lo(7), up(7);
  lo << -2.0 * kRe, -2.0 * kRe, -2.0 * kRe, -10000.0, -10000.0, -10000.0, m_end - 100.0;
  up << 2.0 * kRe, 2.0 * kRe, 2.0 * kRe, 10000.0, 10000.0, 10000.0, m_start + 100.0;
  ph.state = Bounds(lo, up);

  ph.control = Bounds::box(3, -1.1, 1.1);
  // Stay above ground, unit thrust direction.
  Eigen::VectorXd clo(2), cup(2);
  clo << kRe, 1.0;
  cup << 2.0 * kRe, 1.0;
  ph.path = Bounds(clo, cup);

  ph.t0 = ScalarBounds::fixed(t_start);
  ph.tf = tf_free ? ScalarBounds{t_start + 10.0, kT3 + kMaxBurn4} : ScalarBounds::fixed(t_end);

  ph.guess.time = Eigen::Vector2d(t_start, t_end);
  ph.guess.state = Eigen::MatrixXd(2, 7);
  ph.guess.state.row(0) << r_guess[0], r_guess[1], r_guess[2], v_guess[0], v_guess[1], v_guess[2],
      m_start;
  ph.guess.state.row(1) << r_guess[0], r_guess[1], r_guess[2], v_guess[0], v_guess[1], v_guess[2],
      m_end;
  ph.guess.control = Eigen::MatrixXd::Zero(2, 3);
  ph.guess.control.col(1).setConstant(1.0);

  const PhaseEngine engine = phase_engine(p);
  ph.dynamics = make_kernel_function(11, 7, "launch dynamics " + std::to_string(p + 1),
                                     [engine](auto x, auto& out) {
    launch_rates(x, engine, out);
  });
  ph.path_fn = make_kernel_function(11, 2, "launch path " + std::to_string(p + 1),
                                    [](auto x, auto& out) {
    out[0] = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    out[1] = x[7] * x[7] + x[8] * x[8] + x[9] * x[9];
  });
  return ph;
}

}  // namespace

BenchmarkCase launch_ascent() {
  auto problem = std::make_shared<ProblemDefinition>();
  problem->name = "launch-ascent";

  const Eigen::Vector3d r0(5605.2e3, 0.0, 3043.4e3);
  const Eigen::Vector3d v0(0.0, 0.4076e3, 0.0);
  const double m0 = 301454.0;

  // Phase masses follow the constant burn rates and the jettison schedule.
  const double m1f = m0 - phase_engine(0).mdot * kT1;
  const double m2s = m1f - jettison_mass(0);
  const double m2f = m2s - phase_engine(1).mdot * (kT2 - kT1);
  const double m3s = m2f - jettison_mass(1);
  const double m3f = m3s - phase_engine(2).mdot * (kT3 - kT2);
  const double m4s = m3f - jettison_mass(2);
  const double m4f = m4s - kStage2Prop;

  Eigen::Vector3d rt, vt;
  elements_to_state(kTargetSma, kTargetEcc, kTargetInc, kTargetRaan, kTargetArgp, 0.0, rt, vt);

  problem->phases.push_back(make_phase(0, 0.0, kT1, false, m0, m1f, r0, v0));
  problem->phases.push_back(make_phase(1, kT1, kT2, false, m2s, m2f, r0, v0));
  problem->phases.push_back(make_phase(2, kT2, kT3, false, m3s, m3f, rt, vt));
  problem->phases.push_back(make_phase(3, kT3, kT3 + 0.9 * kMaxBurn4, true, m4s, m4f, rt, vt));
  problem->phases[0].initial_state = Bounds::fixed(problem->phases[0].guess.state.row(0));

  // Events: state/mass linkage at the three staging points plus the five
  // terminal orbital elements. Endpoint block of phase p starts at 16 p:
  // [y0(7), t0, yf(7), tf].
  problem->n_b = 26;
  Eigen::VectorXd blo = Eigen::VectorXd::Zero(26), bup = Eigen::VectorXd::Zero(26);
  blo.tail(5) << kTargetSma, kTargetEcc, kTargetInc, kTargetRaan, kTargetArgp;
  bup.tail(5) = blo.tail(5);
  problem->event = Bounds(blo, bup);

  const double jm[3] = {jettison_mass(0), jettison_mass(1), jettison_mass(2)};
  problem->events = make_kernel_function(problem->endpoint_inputs(), 26, "launch events",
                                         [jm](auto x, auto& out) {
    using T = std::decay_t<decltype(out[0])>;
    int row = 0;
    for (int p = 0; p < 3; ++p) {
      const int yf = 16 * p + 8;        // terminal state of phase p
      const int y0n = 16 * (p + 1);     // initial state of phase p+1
      for (int i = 0; i < 6; ++i)
        out[static_cast<size_t>(row++)] = x[yf + i] - x[y0n + i];
      out[static_cast<size_t>(row++)] = x[yf + 6] - jm[p] - x[y0n + 6];
    }
    const std::array<T, 3> rf{x[56], x[57], x[58]};
    const std::array<T, 3> vf{x[59], x[60], x[61]};
    const std::array<T, 5> oe = orbital_elements(rf, vf);
    for (int i = 0; i < 5; ++i) out[static_cast<size_t>(row++)] = oe[static_cast<size_t>(i)];
  });

  // Maximize the terminal mass of phase 4 (endpoint input 16*3 + 8 + 6).
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "launch objective",
                                            [](auto x, auto& out) { out[0] = -x[62]; });

  BenchmarkCase bc;
  bc.name = "launch-ascent";
  bc.problem = problem;
  for (int p = 0; p < 4; ++p) bc.initial_mesh.phases.push_back(PhaseMesh::uniform(10, 4));
  bc.options.method = RefinementMethod::hp_i;
  bc.options.refinement.n_min = 4;
  bc.options.refinement.n_max = 10;
  bc.options.mesh_tolerance = 1e-6;
  bc.options.refinement.tolerance = 1e-6;
  bc.options.nlp_tolerance = 1e-7;
  bc.reference_cost = -7547.9729;
  bc.reproduction_tolerance = 1.0;
  bc.gating = false;
  return bc;
}

}  // namespace ocpkit
