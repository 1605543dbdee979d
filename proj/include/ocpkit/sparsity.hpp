#pragma once

// Exact first- and second-order derivative dependencies of the problem
// functions, identified by hyper-dual probing at sampled points: a partial
// that exists is nonzero at some sample, a partial that does not exist is
// zero at every sample.

#include <cstdint>
#include <utility>
#include <vector>

#include "ocpkit/problem.hpp"

namespace ocpkit {

/// Dependency structure of one function group: (output, input) pairs with a
/// nonzero first partial and unordered input pairs {i <= j} with a nonzero
/// second partial of any output. Both lists sorted lexicographically.
struct FunctionSparsity {
  int n_in = 0;
  int n_out = 0;
  std::vector<std::pair<int, int>> first;
  std::vector<std::pair<int, int>> second;

  bool depends(int out, int in) const;
  /// Inputs appearing in any first-order pair.
  std::vector<int> active_inputs() const;
};

struct PhaseSparsity {
  FunctionSparsity dynamics;
  FunctionSparsity path;
  FunctionSparsity integrand;
};

struct SparsityPattern {
  std::vector<PhaseSparsity> phases;
  FunctionSparsity objective;
  FunctionSparsity events;
};

struct SparsityOptions {
  int sample_count = 10;
  std::uint64_t seed = 0;
};

/// Probes every problem function at sample_count points drawn uniformly from
/// the variable bounds (unbounded variables sample [-1, 1] around the guess).
/// Deterministic for a given seed; a failed evaluation retries at fresh
/// samples up to 3x sample_count draws.
SparsityPattern detect(const ProblemDefinition& problem, const SparsityOptions& options = {});

/// Dependency detection for a single standalone function over a sample box.
FunctionSparsity detect_function(const KernelFunction& fn, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, int sample_count,
                                 std::uint64_t seed);

/// Sampling box for a phase's point functions [y, u, t, s]: finite bounds
/// used directly, unbounded components replaced by [-1, 1] around the guess.
void point_sampling_box(const ProblemDefinition& problem, int phase, Eigen::VectorXd& lower,
                        Eigen::VectorXd& upper);

/// Sampling box for the endpoint functions [E^1 .. E^P, s].
void endpoint_sampling_box(const ProblemDefinition& problem, Eigen::VectorXd& lower,
                           Eigen::VectorXd& upper);

/// Writes a pattern as "row col" coordinate lines (1-based), the debug dump
/// behind the CLI flag.
std::string format_pattern(const std::vector<std::pair<Index, Index>>& entries);

}  // namespace ocpkit
