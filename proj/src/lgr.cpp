#include "ocpkit/lgr.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

namespace ocpkit {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double d = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, d};
}

// q(x) = P_{N-1}(x) + P_N(x) and its derivative.
std::pair<double, double> radau_poly(int n, double x) {
  auto [pa, da] = legendre(n - 1, x);
  auto [pb, db] = legendre(n, x);
  return {pa + pb, da + db};
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> lgr_points_weights(int n) {
  if (n < 1) throw InvalidDegree("LGR degree must be >= 1, got " + std::to_string(n));
  if (n > kMaxLgrDegree)
    throw InvalidDegree("LGR degree " + std::to_string(n) + " exceeds supported maximum " +
                        std::to_string(kMaxLgrDegree));

  Eigen::VectorXd tau(n), w(n);
  tau[0] = -1.0;
  w[0] = 2.0 / (static_cast<double>(n) * n);
  if (n == 1) {
    w[0] = 2.0;
    return {tau, w};
  }

  constexpr double pi = 3.14159265358979323846;
  for (int j = 1; j < n; ++j) {
    // Chebyshev-Radau angles give interlacing starting guesses.
    double x = -std::cos(2.0 * pi * j / (2.0 * n - 1.0));
    for (int it = 0; it < 100; ++it) {
      auto [q, dq] = radau_poly(n, x);
      const double dx = q / dq;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    // One polishing step.
    auto [q, dq] = radau_poly(n, x);
    x -= q / dq;
    tau[j] = x;
    const double pnm1 = legendre(n - 1, x).first;
    w[j] = (1.0 - x) / (static_cast<double>(n) * n * pnm1 * pnm1);
  }
  return {tau, w};
}

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& support) {
  const Index m = support.size();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
  for (Index j = 0; j < m; ++j) {
    for (Index l = 0; l < m; ++l) {
      if (l != j) v[j] *= support[j] - support[l];
    }
    v[j] = 1.0 / v[j];
  }
  // Common scaling cancels in every barycentric formula.
  v /= v.cwiseAbs().maxCoeff();
  return v;
}

Eigen::MatrixXd lgr_diff_matrix(int n) {
  auto [tau, w] = lgr_points_weights(n);
  Eigen::VectorXd support(n + 1);
  support.head(n) = tau;
  support[n] = 1.0;
  const Eigen::VectorXd v = barycentric_weights(support);

  Eigen::MatrixXd d(n, n + 1);
  for (Index i = 0; i < n; ++i) {
    double diag = 0.0;
    for (Index j = 0; j < n + 1; ++j) {
      if (j == i) continue;
      d(i, j) = (v[j] / v[i]) / (support[i] - support[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  return d;
}

const LGRBasis& lgr_basis(int n) {
  static std::mutex mutex;
  static std::map<int, LGRBasis> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  LGRBasis basis;
  basis.degree = n;
  std::tie(basis.points, basis.weights) = lgr_points_weights(n);
  basis.diff = lgr_diff_matrix(n);
  basis.integration =
      basis.diff.rightCols(n).partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  return cache.emplace(n, std::move(basis)).first->second;
}

Eigen::VectorXd barycentric_interpolate(const Eigen::VectorXd& support,
                                        const Eigen::VectorXd& bary_w,
                                        const Eigen::MatrixXd& values, double x) {
  const Index m = support.size();
  for (Index j = 0; j < m; ++j) {
    if (x == support[j]) return values.row(j);
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(values.cols());
  double den = 0.0;
  for (Index j = 0; j < m; ++j) {
    const double c = bary_w[j] / (x - support[j]);
    num += c * values.row(j);
    den += c;
  }
  return num / den;
}

Eigen::VectorXd barycentric_second_derivative(const Eigen::VectorXd& support,
                                              const Eigen::VectorXd& bary_w,
                                              const Eigen::MatrixXd& values, double x) {
  // Build the differentiation matrix on {support, x} and apply it twice.
  // x is assumed distinct from the support points (callers sample interior
  // points); if it collides, nudge off the node.
  const Index m = support.size();
  for (Index j = 0; j < m; ++j) {
    if (x == support[j]) {
      const double span = support[m - 1] - support[0];
      x += 1e-9 * span;
      break;
    }
  }
  Eigen::VectorXd nodes(m + 1);
  nodes.head(m) = support;
  nodes[m] = x;
  const Eigen::VectorXd v = barycentric_weights(nodes);
  Eigen::MatrixXd d(m + 1, m + 1);
  for (Index i = 0; i < m + 1; ++i) {
    double diag = 0.0;
    for (Index j = 0; j < m + 1; ++j) {
      if (j == i) continue;
      d(i, j) = (v[j] / v[i]) / (nodes[i] - nodes[j]);
      diag -= d(i, j);
    }
    d(i, i) = diag;
  }
  Eigen::MatrixXd vals(m + 1, values.cols());
  vals.topRows(m) = values;
  vals.row(m) = barycentric_interpolate(support, bary_w, values, x);
  const Eigen::MatrixXd d2 = d * d;
  return d2.row(m) * vals;
}

double map_tau_to_time(double tau, double t0, double tf) {
  if (!(tf > t0))
    throw DegenerateInterval("map_tau_to_time requires tf > t0, got [" + std::to_string(t0) +
                             ", " + std::to_string(tf) + "]");
  return 0.5 * (tf - t0) * tau + 0.5 * (tf + t0);
}

double map_time_to_tau(double t, double t0, double tf) {
  if (!(tf > t0))
    throw DegenerateInterval("map_time_to_tau requires tf > t0, got [" + std::to_string(t0) +
                             ", " + std::to_string(tf) + "]");
  return 2.0 * (t - t0) / (tf - t0) - 1.0;
}

int PhaseMesh::total_collocation() const {
  int n = 0;
  for (int d : degrees) n += d;
  return n;
}

bool PhaseMesh::valid() const {
  if (degrees.empty() || breakpoints.size() != degrees.size() + 1) return false;
  if (breakpoints.front() != -1.0 || breakpoints.back() != 1.0) return false;
  for (size_t k = 1; k < breakpoints.size(); ++k) {
    if (!(breakpoints[k] > breakpoints[k - 1])) return false;
  }
  for (int d : degrees) {
    if (d < 1 || d > kMaxLgrDegree) return false;
  }
  return true;
}

PhaseMesh PhaseMesh::uniform(int intervals, int degree) {
  PhaseMesh mesh;
  mesh.degrees.assign(static_cast<size_t>(intervals), degree);
  mesh.breakpoints.resize(static_cast<size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k)
    mesh.breakpoints[static_cast<size_t>(k)] = -1.0 + 2.0 * k / intervals;
  mesh.breakpoints.front() = -1.0;
  mesh.breakpoints.back() = 1.0;
  return mesh;
}

Eigen::VectorXd mesh_global_points(const PhaseMesh& mesh) {
  const int total = mesh.total_collocation();
  Eigen::VectorXd grid(total + 1);
  Index at = 0;
  for (int k = 0; k < mesh.interval_count(); ++k) {
    const auto& basis = lgr_basis(mesh.degrees[static_cast<size_t>(k)]);
    const double a = mesh.breakpoints[static_cast<size_t>(k)];
    const double b = mesh.breakpoints[static_cast<size_t>(k) + 1];
    for (Index i = 0; i < basis.points.size(); ++i)
      grid[at++] = 0.5 * (b - a) * basis.points[i] + 0.5 * (b + a);
  }
  grid[at] = 1.0;
  return grid;
}

std::vector<Index> mesh_interval_offsets(const PhaseMesh& mesh) {
  std::vector<Index> offsets(static_cast<size_t>(mesh.interval_count()));
  Index at = 0;
  for (int k = 0; k < mesh.interval_count(); ++k) {
    offsets[static_cast<size_t>(k)] = at;
    at += mesh.degrees[static_cast<size_t>(k)];
  }
  return offsets;
}

}  // namespace ocpkit
