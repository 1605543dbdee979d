#pragma once

// Backend-neutral sparse NLP description and the result contract every
// solver backend must satisfy. kkt_residuals is a pure function usable as
// an independent optimality check on any backend's answer.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ocpkit/derivatives.hpp"

namespace ocpkit {

struct NLPInstance {
  Index n = 0;  // variables
  Index m = 0;  // constraint rows

  Eigen::VectorXd x_lower, x_upper;
  Eigen::VectorXd c_lower, c_upper;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;

  std::vector<std::pair<Index, Index>> jacobian_pattern;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jacobian_values;

  // Lower triangle (row >= col) of the Lagrangian Hessian
  // obj_factor * H(f) + sum_i lambda_i H(c_i).
  std::vector<std::pair<Index, Index>> hessian_pattern;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, double)>
      hessian_values;
};

enum class SolverStatus { optimal, max_iterations, infeasible, numerical_failure };

const char* to_string(SolverStatus status);

struct KKTResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max(stationarity, std::max(feasibility, complementarity));
  }
};

struct IterationRecord {
  int iteration = 0;
  double mu = 0.0;
  double merit = 0.0;        // merit before the step, at this step's nu
  double merit_after = 0.0;  // merit after the accepted step, same nu
  double objective = 0.0;
  double constraint_violation = 0.0;
  double step_length = 0.0;
  double regularization = 0.0;
  double penalty = 0.0;
  bool relaxed = false;  // watchdog episode step, exempt from the monotone merit rule
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
};

struct SolverResult {
  Eigen::VectorXd z;
  Eigen::VectorXd constraint_multipliers;
  Eigen::VectorXd bound_multipliers_lower;
  Eigen::VectorXd bound_multipliers_upper;
  SolverStatus status = SolverStatus::numerical_failure;
  KKTResiduals residuals;
  int iterations = 0;
  std::string message;
  std::vector<IterationRecord> trace;
};

struct SolverOptions {
  double tolerance = 1e-7;
  int max_iterations = 500;
  bool collect_trace = false;
};

/// Reference sparse primal-dual interior-point solver.
SolverResult solve(const NLPInstance& nlp, const Eigen::VectorXd& z0,
                   const SolverOptions& options = {});

/// Infinity norms of the stationarity, feasibility, and complementarity
/// blocks at (z, multipliers). Independent of any solver internals.
KKTResiduals kkt_residuals(const NLPInstance& nlp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& constraint_multipliers,
                           const Eigen::VectorXd& bound_lower,
                           const Eigen::VectorXd& bound_upper);

}  // namespace ocpkit
