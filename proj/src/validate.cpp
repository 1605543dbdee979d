#include <cmath>
#include <sstream>

#include "ocpkit/problem.hpp"
#include "ocpkit/solution.hpp"

namespace ocpkit {

namespace {

void check_bounds(const Bounds& b, Index expected, const std::string& where,
                  std::vector<ValidationIssue>& issues) {
  if (b.lower.size() != expected || b.upper.size() != expected) {
    issues.push_back({where, "bound vectors sized " + std::to_string(b.lower.size()) + "/" +
                                 std::to_string(b.upper.size()) + ", expected " +
                                 std::to_string(expected)});
    return;
  }
  for (Index i = 0; i < expected; ++i) {
    if (b.lower[i] > b.upper[i]) {
      std::ostringstream msg;
      msg << "lower bound " << b.lower[i] << " exceeds upper bound " << b.upper[i]
          << " at component " << i;
      issues.push_back({where, msg.str()});
    }
  }
}

void check_in_box(const Eigen::VectorXd& v, const Bounds& b, const std::string& where,
                  std::vector<ValidationIssue>& issues) {
  if (b.lower.size() != v.size()) return;  // sizing already reported
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] < b.lower[i] - 1e-12 || v[i] > b.upper[i] + 1e-12) {
      std::ostringstream msg;
      msg << "guess value " << v[i] << " outside bounds [" << b.lower[i] << ", " << b.upper[i]
          << "] at component " << i;
      issues.push_back({where, msg.str()});
    }
  }
}

void probe_function(const KernelFunction& fn, const Eigen::VectorXd& probe,
                    const std::string& where, std::vector<ValidationIssue>& issues) {
  if (!fn.valid()) {
    issues.push_back({where, "function handle not set"});
    return;
  }
  try {
    std::vector<double> out;
    detail::eval_checked<double>(fn, std::span<const double>(probe.data(),
                                                             static_cast<size_t>(probe.size())),
                                 out);
  } catch (const EvaluationError& err) {
    issues.push_back({where, err.what()});
  }
}

}  // namespace

ValidationReport validate(const ProblemDefinition& problem) {
  ValidationReport report;
  auto& issues = report.issues;

  if (problem.phases.empty()) {
    issues.push_back({"problem", "at least one phase is required"});
    return report;
  }
  check_bounds(problem.static_params, problem.n_s, "static parameters", issues);
  check_bounds(problem.event, problem.n_b, "event bounds", issues);

  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    const std::string tag = "phase " + std::to_string(p + 1);

    check_bounds(ph.state, ph.n_y, tag + " state bounds", issues);
    if (ph.initial_state) check_bounds(*ph.initial_state, ph.n_y, tag + " initial state", issues);
    if (ph.final_state) check_bounds(*ph.final_state, ph.n_y, tag + " final state", issues);
    check_bounds(ph.control, ph.n_u, tag + " control bounds", issues);
    check_bounds(ph.integrals, ph.n_q, tag + " integral bounds", issues);
    check_bounds(ph.path, ph.n_c, tag + " path bounds", issues);
    if (ph.t0.lower > ph.t0.upper) issues.push_back({tag, "t0 bounds inverted"});
    if (ph.tf.lower > ph.tf.upper) issues.push_back({tag, "tf bounds inverted"});
    if (ph.tf.upper <= ph.t0.lower)
      issues.push_back({tag, "tf upper bound does not exceed t0 lower bound"});

    const auto& g = ph.guess;
    if (g.time.size() < 2) {
      issues.push_back({tag, "guess table needs at least two time samples"});
    } else {
      for (Index i = 1; i < g.time.size(); ++i) {
        if (!(g.time[i] > g.time[i - 1])) {
          issues.push_back({tag, "guess time samples not strictly increasing"});
          break;
        }
      }
    }
    if (g.state.rows() != g.time.size() || g.state.cols() != ph.n_y)
      issues.push_back({tag, "guess state table shape mismatch"});
    if (ph.n_u > 0 && (g.control.rows() != g.time.size() || g.control.cols() != ph.n_u))
      issues.push_back({tag, "guess control table shape mismatch"});

    if (g.state.rows() == g.time.size() && g.state.cols() == ph.n_y) {
      for (Index r = 0; r < g.state.rows(); ++r)
        check_in_box(g.state.row(r), ph.state, tag + " state guess", issues);
    }
    if (ph.n_u > 0 && g.control.rows() == g.time.size() && g.control.cols() == ph.n_u) {
      for (Index r = 0; r < g.control.rows(); ++r)
        check_in_box(g.control.row(r), ph.control, tag + " control guess", issues);
    }

    // Probe point: first guess row at the initial guess time.
    Eigen::VectorXd probe(ph.point_inputs(problem.n_s));
    probe.setZero();
    if (g.state.rows() > 0 && g.state.cols() == ph.n_y) probe.head(ph.n_y) = g.state.row(0);
    if (ph.n_u > 0 && g.control.rows() > 0 && g.control.cols() == ph.n_u)
      probe.segment(ph.n_y, ph.n_u) = g.control.row(0);
    probe[ph.n_y + ph.n_u] = g.time.size() > 0 ? g.time[0] : 0.0;
    if (problem.n_s > 0 && problem.static_guess.size() == problem.n_s)
      probe.tail(problem.n_s) = problem.static_guess;

    probe_function(ph.dynamics, probe, tag + " dynamics", issues);
    if (ph.n_c > 0) probe_function(ph.path_fn, probe, tag + " path", issues);
    if (ph.n_q > 0) probe_function(ph.integrand, probe, tag + " integrand", issues);
  }

  // Probe endpoint functions with guess endpoints.
  Eigen::VectorXd ep(problem.endpoint_inputs());
  ep.setZero();
  Index at = 0;
  bool ep_ok = true;
  for (const auto& ph : problem.phases) {
    const auto& g = ph.guess;
    if (g.state.rows() < 2 || g.state.cols() != ph.n_y || g.time.size() < 2) {
      ep_ok = false;
      break;
    }
    ep.segment(at, ph.n_y) = g.state.row(0);
    ep[at + ph.n_y] = g.time[0];
    ep.segment(at + ph.n_y + 1, ph.n_y) = g.state.row(g.state.rows() - 1);
    ep[at + 2 * ph.n_y + 1] = g.time[g.time.size() - 1];
    at += endpoint_vector_length(ph);
  }
  if (problem.n_s > 0 && problem.static_guess.size() == problem.n_s)
    ep.tail(problem.n_s) = problem.static_guess;
  if (ep_ok) {
    probe_function(problem.objective, ep, "objective", issues);
    if (problem.n_b > 0) probe_function(problem.events, ep, "events", issues);
  }
  if (problem.objective.valid() && problem.objective.n_out != 1)
    issues.push_back({"objective", "must declare exactly one output"});

  return report;
}

Eigen::VectorXd evaluate_endpoint_vector(const Eigen::VectorXd& initial_state, double t0,
                                         const Eigen::VectorXd& final_state, double tf,
                                         const Eigen::VectorXd& integrals) {
  const Index n_y = initial_state.size();
  Eigen::VectorXd e(2 * n_y + integrals.size() + 2);
  e.head(n_y) = initial_state;
  e[n_y] = t0;
  e.segment(n_y + 1, n_y) = final_state;
  e[2 * n_y + 1] = tf;
  e.tail(integrals.size()) = integrals;
  return e;
}

Eigen::VectorXd PhaseSolution::terminal_control_extrapolated() const {
  if (control.cols() == 0 || control.rows() == 0) return Eigen::VectorXd(0);
  const int k = mesh.interval_count() - 1;
  const auto& basis = lgr_basis(mesh.degrees[static_cast<size_t>(k)]);
  const Eigen::VectorXd bw = barycentric_weights(basis.points);
  return barycentric_interpolate(basis.points, bw,
                                 control.bottomRows(basis.points.size()), 1.0);
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::max_mesh_iterations: return "max-mesh-iterations";
    default: return "nlp-failure";
  }
}

}  // namespace ocpkit
