#pragma once

// Domain types for a multiple-phase optimal control problem. Definitions
// are immutable after construction and safe to share across threads; every
// problem function must be pure and evaluable under all arithmetic kernels.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ocpkit/derivatives.hpp"
#include "ocpkit/lgr.hpp"

namespace ocpkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Bounds() = default;
  Bounds(Eigen::VectorXd lo, Eigen::VectorXd up) : lower(std::move(lo)), upper(std::move(up)) {}

  static Bounds box(Index n, double lo, double up) {
    return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, up)};
  }
  static Bounds fixed(const Eigen::VectorXd& v) { return {v, v}; }
  static Bounds free(Index n) { return box(n, -kInf, kInf); }

  Index size() const { return lower.size(); }
};

struct ScalarBounds {
  double lower = -kInf;
  double upper = kInf;

  static ScalarBounds fixed(double v) { return {v, v}; }
};

/// Piecewise-linear guess table; time samples strictly increasing.
struct GuessTable {
  Eigen::VectorXd time;
  Eigen::MatrixXd state;    // rows align with time samples
  Eigen::MatrixXd control;  // rows align with time samples (may be 0 cols)
};

/// Per-phase argument view passed to dynamics/path/integrand functions,
/// unpacked from the flat kernel input [y, u, t, s].
template <class T>
struct PointArgs {
  std::span<const T> y;
  std::span<const T> u;
  T t;
  std::span<const T> s;
};

template <class T>
PointArgs<T> point_args(std::span<const T> x, int n_y, int n_u) {
  const auto ny = static_cast<size_t>(n_y), nu = static_cast<size_t>(n_u);
  return {x.subspan(0, ny), x.subspan(ny, nu), x[ny + nu], x.subspan(ny + nu + 1)};
}

/// Endpoint bundle [y(t0), t0, y(tf), tf, q] of one phase as seen by the
/// objective and event functions.
template <class T>
struct EndpointView {
  std::span<const T> initial_state;
  T t0;
  std::span<const T> final_state;
  T tf;
  std::span<const T> integrals;
};

struct PhaseDefinition {
  int n_y = 0;
  int n_u = 0;
  int n_q = 0;
  int n_c = 0;

  Bounds state;
  // Endpoint rows may carry tighter bounds than the interior (boundary
  // conditions posed as equal-bound endpoints). Empty means same as state.
  std::optional<Bounds> initial_state;
  std::optional<Bounds> final_state;
  Bounds control;
  Bounds integrals;
  Bounds path;
  ScalarBounds t0;
  ScalarBounds tf;

  GuessTable guess;

  KernelFunction dynamics;   // n_y outputs
  KernelFunction path_fn;    // n_c outputs (unset when n_c = 0)
  KernelFunction integrand;  // n_q outputs (unset when n_q = 0)

  int point_inputs(int n_s) const { return n_y + n_u + 1 + n_s; }
  const Bounds& initial_state_bounds() const { return initial_state ? *initial_state : state; }
  const Bounds& final_state_bounds() const { return final_state ? *final_state : state; }
};

struct ProblemDefinition {
  std::string name;
  std::vector<PhaseDefinition> phases;

  int n_s = 0;
  Bounds static_params;
  Eigen::VectorXd static_guess;

  int n_b = 0;
  Bounds event;

  KernelFunction objective;  // 1 output over [E^1 .. E^P, s]
  KernelFunction events;     // n_b outputs over the same inputs

  int phase_count() const { return static_cast<int>(phases.size()); }
  int endpoint_inputs() const {
    int n = n_s;
    for (const auto& ph : phases) n += 2 * ph.n_y + ph.n_q + 2;
    return n;
  }
};

/// Length and component order of the per-phase endpoint vector.
inline int endpoint_vector_length(const PhaseDefinition& ph) { return 2 * ph.n_y + ph.n_q + 2; }

/// Unpacks the flat endpoint input [E^1 .. E^P, s] into per-phase views.
template <class T>
std::vector<EndpointView<T>> endpoint_views(std::span<const T> x,
                                            const ProblemDefinition& problem) {
  std::vector<EndpointView<T>> views;
  views.reserve(problem.phases.size());
  size_t at = 0;
  for (const auto& ph : problem.phases) {
    const auto ny = static_cast<size_t>(ph.n_y), nq = static_cast<size_t>(ph.n_q);
    EndpointView<T> v{x.subspan(at, ny), x[at + ny], x.subspan(at + ny + 1, ny),
                      x[at + 2 * ny + 1], x.subspan(at + 2 * ny + 2, nq)};
    views.push_back(v);
    at += 2 * ny + 2 + nq;
  }
  return views;
}

template <class T>
std::span<const T> endpoint_statics(std::span<const T> x, const ProblemDefinition& problem) {
  return x.subspan(x.size() - static_cast<size_t>(problem.n_s));
}

struct ValidationIssue {
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

ValidationReport validate(const ProblemDefinition& problem);

/// Endpoint vector [y(t0), t0, y(tf), tf, q] assembled from a phase solution.
Eigen::VectorXd evaluate_endpoint_vector(const Eigen::VectorXd& initial_state, double t0,
                                         const Eigen::VectorXd& final_state, double tf,
                                         const Eigen::VectorXd& integrals);

}  // namespace ocpkit
