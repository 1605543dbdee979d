#pragma once

// Discretization error estimation, the hp-I and hp-II refinement policies,
// and the outer solve / estimate / refine loop.

#include <optional>

#include "ocpkit/transcription.hpp"

namespace ocpkit {

struct ErrorReport {
  // Per phase, per interval relative error.
  std::vector<Eigen::VectorXd> interval_errors;
  double max_error = 0.0;
  double tolerance = 0.0;
  int iteration = 0;
};

enum class RefinementMethod { hp_i, hp_ii };

struct RefinementOptions {
  int n_min = 3;
  int n_max = 10;
  double tolerance = 1e-6;
  double curvature_ratio_threshold = 2.0;  // hp-II
  int curvature_samples = 50;              // hp-II
};

/// Relative error of one phase: interpolate the solved state and control at
/// the N_k+1 point Radau set of each interval, propagate the state from the
/// interval's initial value through the dynamics quadrature, and compare.
Eigen::VectorXd estimate_error(const ProblemDefinition& problem, const PhaseSolution& solution,
                               const Eigen::VectorXd& static_params);

ErrorReport estimate_error_report(const ProblemDefinition& problem, const Solution& solution,
                                  double tolerance, int iteration);

/// Exponential-convergence degree update: failed intervals grow their degree
/// by ceil(log(e_k / tol) / log(N_k)); past n_max they split into
/// ceil(N' / n_min) equal pieces of degree n_min.
PhaseMesh refine_hp_i(const Eigen::VectorXd& errors, const PhaseMesh& mesh,
                      const RefinementOptions& options);

/// Curvature-guided variant: smooth intervals (curvature ratio below the
/// threshold) p-refine, intervals with localized curvature h-refine with
/// breakpoints equidistributing the integrated curvature density.
PhaseMesh refine_hp_ii(const Eigen::VectorXd& errors, const PhaseMesh& mesh,
                       const std::vector<Eigen::VectorXd>& curvature_samples,
                       const RefinementOptions& options);

/// Curvature magnitude (max over state components of the second derivative
/// of the interpolant) sampled uniformly inside each interval.
std::vector<Eigen::VectorXd> sample_curvature(const PhaseSolution& solution, int samples);

struct AdaptiveOptions {
  RefinementMethod method = RefinementMethod::hp_i;
  RefinementOptions refinement;
  double mesh_tolerance = 1e-6;
  double nlp_tolerance = 1e-7;
  int max_mesh_iterations = 30;
  Kernel kernel = Kernel::hyper_dual;
  std::uint64_t seed = 0;
  int sparsity_samples = 10;
  int scaling_samples = 100;
  bool use_scaling = true;
  int nlp_max_iterations = 500;
};

struct AdaptiveResult {
  Solution solution;
  SolveStatus status = SolveStatus::solved;
  SolverResult last_nlp;
};

/// The outer loop: transcribe, scale (first iteration only), solve the NLP
/// warm-started from the previous mesh, estimate the error, refine until the
/// mesh tolerance or the iteration cap is reached.
AdaptiveResult solve_adaptive(const ProblemDefinition& problem, const Mesh& initial_mesh,
                              const AdaptiveOptions& options,
                              const Solution* warm_start = nullptr);

}  // namespace ocpkit
