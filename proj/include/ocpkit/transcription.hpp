#pragma once

// Transcribes a validated problem on a mesh into the sparse NLP: decision
// and constraint layouts, objective/constraint callbacks, exact first and
// second NLP derivatives through the selected arithmetic kernel, and the
// automatic scaling machinery.

#include <memory>
#include <optional>

#include "ocpkit/nlp.hpp"
#include "ocpkit/problem.hpp"
#include "ocpkit/solution.hpp"
#include "ocpkit/sparsity.hpp"

namespace ocpkit {

/// Column ranges of one phase inside the NLP decision vector. Ordering:
/// state columns (grid-major per component), control columns, integrals,
/// t0, tf; static parameters trail the last phase.
struct PhaseLayout {
  Index first = 0;
  Index n_grid = 0;    // N+1 state rows
  Index n_colloc = 0;  // N collocation points
  int n_y = 0, n_u = 0, n_q = 0, n_c = 0;

  Index state_col(int comp, Index grid) const { return first + comp * n_grid + grid; }
  Index control_col(int comp, Index point) const {
    return first + n_y * n_grid + comp * n_colloc + point;
  }
  Index integral_col(int j) const { return first + n_y * n_grid + n_u * n_colloc + j; }
  Index t0_col() const { return first + n_y * n_grid + n_u * n_colloc + n_q; }
  Index tf_col() const { return t0_col() + 1; }
  Index size() const { return n_y * n_grid + n_u * n_colloc + n_q + 2; }
};

struct DecisionLayout {
  std::vector<PhaseLayout> phases;
  Index n_static = 0;
  Index total = 0;

  Index static_col(int i) const { return total - n_static + i; }
};

/// Row ranges of one phase inside the NLP constraint vector. Ordering:
/// defect rows (point-major per state component), path rows, integral
/// approximation rows; event rows trail the last phase.
struct PhaseConstraintLayout {
  Index first = 0;
  Index n_colloc = 0;
  int n_y = 0, n_c = 0, n_q = 0;

  Index defect_row(int comp, Index point) const { return first + comp * n_colloc + point; }
  Index path_row(int comp, Index point) const {
    return first + n_y * n_colloc + comp * n_colloc + point;
  }
  Index integral_row(int j) const { return first + (n_y + n_c) * n_colloc + j; }
  Index size() const { return (n_y + n_c) * n_colloc + n_q; }
};

struct ConstraintLayout {
  std::vector<PhaseConstraintLayout> phases;
  Index n_events = 0;
  Index total = 0;

  Index event_row(int i) const { return total - n_events + i; }
};

DecisionLayout build_decision_layout(const ProblemDefinition& problem, const Mesh& mesh);
ConstraintLayout build_constraint_layout(const ProblemDefinition& problem, const Mesh& mesh);

/// Per-quantity scales of the continuous problem; mesh-independent, so one
/// computation serves every refinement iteration. Variable scale/shift obey
/// scaled = v * x + r with scaled in [-1/2, 1/2] for bounded x.
struct ProblemScales {
  struct PhaseScales {
    Eigen::VectorXd state_v, state_r;
    Eigen::VectorXd control_v, control_r;
    Eigen::VectorXd integral_v, integral_r;
    double t0_v = 1.0, t0_r = 0.0;
    double tf_v = 1.0, tf_r = 0.0;
    Eigen::VectorXd defect_row;    // equals state_v
    Eigen::VectorXd path_row;
    Eigen::VectorXd integral_row;  // equals integral_v
  };
  std::vector<PhaseScales> phases;
  Eigen::VectorXd static_v, static_r;
  double objective_scale = 1.0;
  Eigen::VectorXd event_row;
  std::vector<std::string> warnings;
};

struct ScalingOptions {
  int sample_count = 100;
  std::uint64_t seed = 0;
};

ProblemScales compute_scales(const ProblemDefinition& problem, const SparsityPattern& pattern,
                             const ScalingOptions& options = {});

ProblemScales identity_scales(const ProblemDefinition& problem);

/// Variable scale and shift for one bounded interval [a, b].
std::pair<double, double> variable_scale_shift(double lower, double upper);

class Transcription {
public:
  Transcription(const ProblemDefinition& problem, const Mesh& mesh, Kernel kernel,
                const SparsityPattern& pattern);

  const DecisionLayout& decision_layout() const { return decision_; }
  const ConstraintLayout& constraint_layout() const { return constraint_; }
  const Mesh& mesh() const { return mesh_; }
  const ProblemDefinition& problem() const { return problem_; }
  Kernel kernel() const { return kernel_; }

  Eigen::VectorXd variable_lower() const;
  Eigen::VectorXd variable_upper() const;
  Eigen::VectorXd constraint_lower() const;
  Eigen::VectorXd constraint_upper() const;

  double objective(const Eigen::VectorXd& z) const;
  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& z) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const;

  const std::vector<std::pair<Index, Index>>& jacobian_pattern() const { return jac_pattern_; }
  Eigen::VectorXd jacobian_values(const Eigen::VectorXd& z) const;

  const std::vector<std::pair<Index, Index>>& hessian_pattern() const { return hess_pattern_; }
  Eigen::VectorXd hessian_values(const Eigen::VectorXd& z, const Eigen::VectorXd& multipliers,
                                 double objective_factor) const;

  /// Initial decision vector from the problem's guess tables (states and
  /// controls piecewise-linear in time, integrals by trapezoid quadrature).
  Eigen::VectorXd initial_guess() const;

  /// Decision vector from an existing solution interpolated onto this mesh.
  Eigen::VectorXd pack_solution(const Solution& solution) const;
  Solution extract_solution(const Eigen::VectorXd& z) const;

  /// Unscaled NLP view over this transcription.
  NLPInstance make_nlp() const;

private:
  struct PointWork;
  void assemble_patterns();
  void point_inputs(const Eigen::VectorXd& z, int p, Index point, Eigen::VectorXd& x) const;
  Eigen::VectorXd endpoint_inputs(const Eigen::VectorXd& z) const;
  void map_endpoint_input(int index, Index& col) const;

  const ProblemDefinition& problem_;
  Mesh mesh_;
  Kernel kernel_;
  SparsityPattern pattern_;
  DecisionLayout decision_;
  ConstraintLayout constraint_;
  std::vector<Eigen::VectorXd> tau_;  // per phase global points (N+1)
  std::vector<std::vector<Index>> interval_offsets_;
  std::vector<std::pair<Index, Index>> jac_pattern_;
  std::vector<std::pair<Index, Index>> hess_pattern_;
};

/// NLP-level sparsity assembled from the function-level pattern; exposed
/// separately for tests and the CLI pattern dump.
std::pair<std::vector<std::pair<Index, Index>>, std::vector<std::pair<Index, Index>>>
assemble_nlp_sparsity(const SparsityPattern& pattern, const ProblemDefinition& problem,
                      const Mesh& mesh);

/// Applies variable and row scaling around an unscaled NLP. The solver sees
/// scaled variables z~ = V z + r and scaled rows; results map back exactly.
struct ScaledNLP {
  NLPInstance nlp;                 // scaled view
  Eigen::VectorXd v, r;            // variable scale and shift
  Eigen::VectorXd row_scale;       // constraint row scales
  double objective_scale = 1.0;

  Eigen::VectorXd scale_point(const Eigen::VectorXd& z) const { return v.cwiseProduct(z) + r; }
  Eigen::VectorXd unscale_point(const Eigen::VectorXd& zs) const {
    return (zs - r).cwiseQuotient(v);
  }
};

ScaledNLP make_scaled_nlp(const Transcription& transcription, const ProblemScales& scales);

/// Expands per-quantity scales onto the columns/rows of a concrete layout.
void expand_scales(const ProblemScales& scales, const ProblemDefinition& problem,
                   const DecisionLayout& decision, const ConstraintLayout& constraint,
                   Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::VectorXd& row_scale);

}  // namespace ocpkit
