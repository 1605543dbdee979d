#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ocpkit/lgr.hpp"

namespace ocpkit {

/// Discrete trajectory of one phase on its mesh. State rows cover the N+1
/// grid points; control rows cover the N collocation points only (the
/// discretization carries no control at the terminal support point).
struct PhaseSolution {
  PhaseMesh mesh;
  Eigen::VectorXd tau;      // N+1 global points in [-1, 1]
  double t0 = 0.0;
  double tf = 0.0;
  Eigen::MatrixXd state;    // (N+1) x n_y
  Eigen::MatrixXd control;  // N x n_u
  Eigen::VectorXd integrals;

  Eigen::VectorXd time() const {
    Eigen::VectorXd t(tau.size());
    for (Index i = 0; i < tau.size(); ++i) t[i] = map_tau_to_time(tau[i], t0, tf);
    return t;
  }

  /// Control polynomial of the final interval evaluated at tau = +1; used
  /// for export only, never by the discretization.
  Eigen::VectorXd terminal_control_extrapolated() const;
};

enum class SolveStatus { solved, max_mesh_iterations, nlp_failure };

struct MeshIterationRecord {
  int iteration = 0;
  double max_error = 0.0;
  int collocation_points = 0;
};

struct MeshHistory {
  std::vector<MeshIterationRecord> iterations;
};

struct Solution {
  std::string problem;
  SolveStatus status = SolveStatus::solved;
  double cost = 0.0;
  Eigen::VectorXd static_params;
  std::vector<PhaseSolution> phases;
  MeshHistory history;
  double final_max_error = 0.0;
};

const char* to_string(SolveStatus status);

}  // namespace ocpkit
