#include "ocpkit/refinement.hpp"

#include <algorithm>
#include <cmath>

namespace ocpkit {

namespace {

// Propagated-versus-interpolated state comparison at the N_k+1 point Radau
// set of one interval.
double interval_error(const ProblemDefinition& problem, int phase, const PhaseSolution& sol,
                      const Eigen::VectorXd& statics, int k, const std::vector<Index>& offsets) {
  const auto& ph = problem.phases[static_cast<size_t>(phase)];
  const auto& mesh = sol.mesh;
  const int nk = mesh.degrees[static_cast<size_t>(k)];
  const int m = nk + 1;
  const double a = mesh.breakpoints[static_cast<size_t>(k)];
  const double b = mesh.breakpoints[static_cast<size_t>(k) + 1];
  const Index off = offsets[static_cast<size_t>(k)];

  const auto& fine = lgr_basis(m);
  // Interval-local supports of the solved state and control polynomials.
  const Eigen::VectorXd state_support = sol.tau.segment(off, nk + 1);
  const Eigen::VectorXd state_bw = barycentric_weights(state_support);
  const Eigen::MatrixXd state_vals = sol.state.middleRows(off, nk + 1);
  Eigen::VectorXd control_support, control_bw;
  Eigen::MatrixXd control_vals;
  if (ph.n_u > 0) {
    control_support = sol.tau.segment(off, nk);
    control_bw = barycentric_weights(control_support);
    control_vals = sol.control.middleRows(off, nk);
  }

  const double beta = 0.5 * (sol.tf - sol.t0);
  Eigen::MatrixXd rates(m, ph.n_y);
  Eigen::MatrixXd interp(m + 1, ph.n_y);
  interp.row(0) = state_vals.row(0);
  Eigen::VectorXd x(ph.point_inputs(problem.n_s));
  std::vector<double> out;
  for (int i = 0; i < m; ++i) {
    const double sigma = fine.points[i];
    const double tau = 0.5 * (b - a) * sigma + 0.5 * (b + a);
    const Eigen::VectorXd y = barycentric_interpolate(state_support, state_bw, state_vals, tau);
    x.setZero();
    x.head(ph.n_y) = y;
    if (ph.n_u > 0)
      x.segment(ph.n_y, ph.n_u) =
          barycentric_interpolate(control_support, control_bw, control_vals, tau);
    x[ph.n_y + ph.n_u] = map_tau_to_time(tau, sol.t0, sol.tf);
    if (problem.n_s > 0) x.tail(problem.n_s) = statics;
    detail::eval_checked<double>(
        ph.dynamics, std::span<const double>(x.data(), static_cast<size_t>(x.size())), out);
    for (int j = 0; j < ph.n_y; ++j) rates(i, j) = out[static_cast<size_t>(j)];
    // Comparison values at the fine supports 2..m; the interval end follows.
    if (i > 0) interp.row(i) = y;
  }
  interp.row(m) = barycentric_interpolate(state_support, state_bw, state_vals, b);

  // Propagate from the interval's initial value with the fine-rule
  // integration matrix; (b-a)/2 restores the interval measure.
  const Eigen::MatrixXd rhs = 0.5 * (b - a) * beta * rates - fine.diff.col(0) * interp.row(0);
  const Eigen::MatrixXd propagated = fine.integration * rhs;

  double err = 0.0;
  for (int j = 0; j < ph.n_y; ++j) {
    double denom = 1.0;
    for (int i = 0; i <= m; ++i) denom = std::max(denom, 1.0 + std::fabs(interp(i, j)));
    for (int i = 0; i < m; ++i)
      err = std::max(err, std::fabs(propagated(i, j) - interp(i + 1, j)) / denom);
  }
  return err;
}

int find_phase(const ProblemDefinition& problem, const PhaseSolution& solution) {
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    if (ph.n_y == solution.state.cols() && ph.n_u == solution.control.cols()) return p;
  }
  throw std::invalid_argument("solution does not match any phase");
}

int predicted_degree(int nk, double error, double tolerance) {
  const double base = std::log(std::max(2.0, static_cast<double>(nk)));
  const int bump = static_cast<int>(std::ceil(std::log(error / tolerance) / base));
  return nk + std::max(1, bump);
}

}  // namespace

Eigen::VectorXd estimate_error(const ProblemDefinition& problem, const PhaseSolution& solution,
                               const Eigen::VectorXd& static_params) {
  const int phase = find_phase(problem, solution);
  const auto offsets = mesh_interval_offsets(solution.mesh);
  Eigen::VectorXd errors(solution.mesh.interval_count());
  for (int k = 0; k < solution.mesh.interval_count(); ++k)
    errors[k] = interval_error(problem, phase, solution, static_params, k, offsets);
  return errors;
}

ErrorReport estimate_error_report(const ProblemDefinition& problem, const Solution& solution,
                                  double tolerance, int iteration) {
  ErrorReport report;
  report.tolerance = tolerance;
  report.iteration = iteration;
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& sol = solution.phases[static_cast<size_t>(p)];
    const auto offsets = mesh_interval_offsets(sol.mesh);
    Eigen::VectorXd errors(sol.mesh.interval_count());
    for (int k = 0; k < sol.mesh.interval_count(); ++k)
      errors[k] = interval_error(problem, p, sol, solution.static_params, k, offsets);
    report.max_error = std::max(report.max_error, errors.maxCoeff());
    report.interval_errors.push_back(std::move(errors));
  }
  return report;
}

PhaseMesh refine_hp_i(const Eigen::VectorXd& errors, const PhaseMesh& mesh,
                      const RefinementOptions& options) {
  PhaseMesh refined;
  refined.breakpoints.push_back(mesh.breakpoints.front());
  for (int k = 0; k < mesh.interval_count(); ++k) {
    const double a = mesh.breakpoints[static_cast<size_t>(k)];
    const double b = mesh.breakpoints[static_cast<size_t>(k) + 1];
    const int nk = mesh.degrees[static_cast<size_t>(k)];
    if (errors[k] <= options.tolerance) {
      refined.degrees.push_back(nk);
      refined.breakpoints.push_back(b);
      continue;
    }
    const int predicted = predicted_degree(nk, errors[k], options.tolerance);
    if (predicted <= options.n_max) {
      refined.degrees.push_back(predicted);
      refined.breakpoints.push_back(b);
    } else {
      const int pieces = (predicted + options.n_min - 1) / options.n_min;  // ceil(N'/n_min)
      for (int s = 1; s <= pieces; ++s) {
        refined.degrees.push_back(options.n_min);
        refined.breakpoints.push_back(a + (b - a) * s / pieces);
      }
      refined.breakpoints.back() = b;
    }
  }
  return refined;
}

std::vector<Eigen::VectorXd> sample_curvature(const PhaseSolution& solution, int samples) {
  const auto offsets = mesh_interval_offsets(solution.mesh);
  std::vector<Eigen::VectorXd> curvature;
  for (int k = 0; k < solution.mesh.interval_count(); ++k) {
    const int nk = solution.mesh.degrees[static_cast<size_t>(k)];
    const double a = solution.mesh.breakpoints[static_cast<size_t>(k)];
    const double b = solution.mesh.breakpoints[static_cast<size_t>(k) + 1];
    const Index off = offsets[static_cast<size_t>(k)];
    const Eigen::VectorXd support = solution.tau.segment(off, nk + 1);
    const Eigen::VectorXd bw = barycentric_weights(support);
    const Eigen::MatrixXd vals = solution.state.middleRows(off, nk + 1);
    Eigen::VectorXd samples_k(samples);
    for (int s = 0; s < samples; ++s) {
      const double tau = a + (b - a) * (s + 0.5) / samples;
      const Eigen::VectorXd d2 = barycentric_second_derivative(support, bw, vals, tau);
      samples_k[s] = d2.cwiseAbs().maxCoeff();
    }
    curvature.push_back(std::move(samples_k));
  }
  return curvature;
}

PhaseMesh refine_hp_ii(const Eigen::VectorXd& errors, const PhaseMesh& mesh,
                       const std::vector<Eigen::VectorXd>& curvature_samples,
                       const RefinementOptions& options) {
  PhaseMesh refined;
  refined.breakpoints.push_back(mesh.breakpoints.front());
  for (int k = 0; k < mesh.interval_count(); ++k) {
    const double a = mesh.breakpoints[static_cast<size_t>(k)];
    const double b = mesh.breakpoints[static_cast<size_t>(k) + 1];
    const int nk = mesh.degrees[static_cast<size_t>(k)];
    if (errors[k] <= options.tolerance) {
      refined.degrees.push_back(nk);
      refined.breakpoints.push_back(b);
      continue;
    }
    const Eigen::VectorXd& curv = curvature_samples[static_cast<size_t>(k)];
    const double mean = curv.mean();
    const double ratio = mean > 0.0 ? curv.maxCoeff() / mean : 1.0;
    const int predicted = predicted_degree(nk, errors[k], options.tolerance);

    if (ratio < options.curvature_ratio_threshold) {
      // Uniform curvature: raise the degree; at the cap fall back to halving.
      if (predicted <= options.n_max) {
        refined.degrees.push_back(predicted);
        refined.breakpoints.push_back(b);
      } else {
        refined.degrees.push_back(options.n_min);
        refined.breakpoints.push_back(0.5 * (a + b));
        refined.degrees.push_back(options.n_min);
        refined.breakpoints.push_back(b);
      }
      continue;
    }

    // Localized curvature: split with breakpoints equidistributing the
    // integrated curvature density.
    const int pieces = std::max(2, (predicted + options.n_min - 1) / options.n_min);
    const int ns = static_cast<int>(curv.size());
    Eigen::VectorXd cumulative(ns + 1);
    cumulative[0] = 0.0;
    for (int s = 0; s < ns; ++s) cumulative[s + 1] = cumulative[s] + curv[s];
    if (cumulative[ns] <= 0.0) {
      for (int s = 1; s <= pieces; ++s) {
        refined.degrees.push_back(options.n_min);
        refined.breakpoints.push_back(a + (b - a) * s / pieces);
      }
      refined.breakpoints.back() = b;
      continue;
    }
    for (int s = 1; s < pieces; ++s) {
      const double target = cumulative[ns] * s / pieces;
      int cell = 0;
      while (cell < ns && cumulative[cell + 1] < target) ++cell;
      const double within = curv[cell] > 0.0 ? (target - cumulative[cell]) / curv[cell] : 0.5;
      double tau = a + (b - a) * (cell + within) / ns;
      tau = std::max(tau, refined.breakpoints.back() + 1e-10 * (b - a));
      refined.degrees.push_back(options.n_min);
      refined.breakpoints.push_back(std::min(tau, b - 1e-10 * (b - a)));
    }
    refined.degrees.push_back(options.n_min);
    refined.breakpoints.push_back(b);
  }
  return refined;
}

AdaptiveResult solve_adaptive(const ProblemDefinition& problem, const Mesh& initial_mesh,
                              const AdaptiveOptions& options, const Solution* warm_start) {
  AdaptiveResult result;
  const SparsityPattern pattern = detect(problem, {options.sparsity_samples, options.seed});
  const ProblemScales scales =
      options.use_scaling
          ? compute_scales(problem, pattern, {options.scaling_samples, options.seed})
          : identity_scales(problem);

  Mesh mesh = initial_mesh;
  Solution previous;
  bool have_previous = false;
  if (warm_start != nullptr) {
    previous = *warm_start;
    have_previous = true;
  }
  MeshHistory history;

  for (int iteration = 1; iteration <= options.max_mesh_iterations; ++iteration) {
    Transcription transcription(problem, mesh, options.kernel, pattern);
    const ScaledNLP scaled = make_scaled_nlp(transcription, scales);
    const Eigen::VectorXd z0 =
        have_previous ? transcription.pack_solution(previous) : transcription.initial_guess();

    SolverOptions nlp_options;
    nlp_options.tolerance = options.nlp_tolerance;
    nlp_options.max_iterations = options.nlp_max_iterations;
    const SolverResult nlp = solve(scaled.nlp, scaled.scale_point(z0), nlp_options);
    result.last_nlp = nlp;

    if (nlp.status != SolverStatus::optimal) {
      result.solution =
          have_previous ? previous : transcription.extract_solution(scaled.unscale_point(nlp.z));
      result.solution.history = history;
      result.status = SolveStatus::nlp_failure;
      result.solution.status = result.status;
      return result;
    }

    Solution solution = transcription.extract_solution(scaled.unscale_point(nlp.z));
    const ErrorReport report =
        estimate_error_report(problem, solution, options.mesh_tolerance, iteration);

    int points = 0;
    for (const auto& pm : mesh.phases) points += pm.total_collocation();
    history.iterations.push_back({iteration, report.max_error, points});
    solution.history = history;
    solution.final_max_error = report.max_error;

    if (report.max_error <= options.mesh_tolerance) {
      solution.status = SolveStatus::solved;
      result.solution = std::move(solution);
      result.status = SolveStatus::solved;
      return result;
    }
    if (iteration == options.max_mesh_iterations) {
      solution.status = SolveStatus::max_mesh_iterations;
      result.solution = std::move(solution);
      result.status = SolveStatus::max_mesh_iterations;
      return result;
    }

    Mesh next;
    for (int p = 0; p < problem.phase_count(); ++p) {
      const auto& pm = mesh.phases[static_cast<size_t>(p)];
      const Eigen::VectorXd& errors = report.interval_errors[static_cast<size_t>(p)];
      if (options.method == RefinementMethod::hp_i) {
        next.phases.push_back(refine_hp_i(errors, pm, options.refinement));
      } else {
        const auto curvature = sample_curvature(solution.phases[static_cast<size_t>(p)],
                                                options.refinement.curvature_samples);
        next.phases.push_back(refine_hp_ii(errors, pm, curvature, options.refinement));
      }
    }
    mesh = std::move(next);
    previous = std::move(solution);
    have_previous = true;
  }
  return result;
}

}  // namespace ocpkit
