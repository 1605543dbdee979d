#pragma once

// Legendre-Gauss-Radau collocation machinery: points, quadrature weights,
// the N x (N+1) differentiation matrix on the support {tau_1..tau_N, +1},
// the affine map between tau in [-1, 1] and physical time, and the
// per-phase mesh of intervals.

#include <vector>

#include <Eigen/Core>

#include "ocpkit/errors.hpp"

namespace ocpkit {

using Index = Eigen::Index;

/// Radau basis of degree N on [-1, 1): N collocation points (tau_1 = -1,
/// all < 1), a noncollocated support point at +1, quadrature weights, and
/// the differentiation matrix.
struct LGRBasis {
  int degree = 0;
  Eigen::VectorXd points;                // N, strictly increasing, in [-1, 1)
  Eigen::VectorXd weights;               // N, positive, sums to 2
  Eigen::MatrixXd diff;                  // N x (N+1)
  Eigen::MatrixXd integration;           // N x N, inverse of diff columns 2..N+1
};

inline constexpr int kMaxLgrDegree = 60;

/// Collocation points (roots of P_{N-1} + P_N) and Radau weights.
/// Quadrature is exact for polynomials of degree <= 2N-2.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lgr_points_weights(int n);

/// Derivatives of the Lagrange basis on {tau_1..tau_N, +1} at the
/// collocation points, via barycentric differentiation.
Eigen::MatrixXd lgr_diff_matrix(int n);

/// Cached basis lookup; safe for concurrent readers.
const LGRBasis& lgr_basis(int n);

/// Barycentric weights for an arbitrary strictly increasing support.
Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& support);

/// Evaluates the Lagrange interpolant through (support, values-rows) at x.
/// values is (support size) x m; returns a length-m row.
Eigen::VectorXd barycentric_interpolate(const Eigen::VectorXd& support,
                                        const Eigen::VectorXd& bary_w,
                                        const Eigen::MatrixXd& values, double x);

/// Second derivative of the interpolant at x (used by curvature-based
/// refinement). Differentiates the barycentric form twice.
Eigen::VectorXd barycentric_second_derivative(const Eigen::VectorXd& support,
                                              const Eigen::VectorXd& bary_w,
                                              const Eigen::MatrixXd& values, double x);

/// t = (tf - t0)/2 tau + (tf + t0)/2. Requires tf > t0.
double map_tau_to_time(double tau, double t0, double tf);
double map_time_to_tau(double t, double t0, double tf);

/// One phase of the mesh: breakpoints -1 = T_0 < ... < T_K = +1 and the
/// collocation degree of each interval.
struct PhaseMesh {
  std::vector<double> breakpoints;
  std::vector<int> degrees;

  int interval_count() const { return static_cast<int>(degrees.size()); }
  int total_collocation() const;
  bool valid() const;

  static PhaseMesh uniform(int intervals, int degree);
};

struct Mesh {
  std::vector<PhaseMesh> phases;
};

/// All collocation points of a phase mapped into [-1, 1], plus the single
/// terminal support point +1 appended. Size total_collocation() + 1.
Eigen::VectorXd mesh_global_points(const PhaseMesh& mesh);

/// Start offsets of each interval's collocation block in the global grid.
std::vector<Index> mesh_interval_offsets(const PhaseMesh& mesh);

}  // namespace ocpkit
