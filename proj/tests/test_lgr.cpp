#include <cmath>
#include <random>

#include "doctest.h"
#include "ocpkit/lgr.hpp"

using namespace ocpkit;

namespace {

// Analytic integral of tau^m over [-1, 1], the quadrature oracle.
double monomial_integral(int m) { return (m % 2 == 1) ? 0.0 : 2.0 / (m + 1); }

}  // namespace

TEST_CASE("closed-form points and weights for small degrees") {
  auto [t1, w1] = lgr_points_weights(1);
  CHECK(t1[0] ==  -1.0);
  CHECK(w1[0] == doctest::Approx(2.0).epsilon(1e-15));

  auto [t2, w2] = lgr_points_weights(2);
  CHECK(t2[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(t2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(w2[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(w2[1] == doctest::Approx(1.5).epsilon(1e-13));

  // Roots of P2 + P3 and the matching weights.
  const double s6 = std::sqrt(6.0);
  auto [t3, w3] = lgr_points_weights(3);
  CHECK(t3[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(t3[1] == doctest::Approx((1.0 - s6) / 5.0).epsilon(1e-12));
  CHECK(t3[2] == doctest::Approx((1.0 + s6) / 5.0).epsilon(1e-12));
  CHECK(w3[0] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
  CHECK(w3[1] == doctest::Approx((16.0 + s6) / 18.0).epsilon(1e-12));
  CHECK(w3[2] == doctest::Approx((16.0 - s6) / 18.0).epsilon(1e-12));
}

TEST_CASE("point sets are strictly increasing inside [-1, 1)") {
  for (int n = 1; n <= kMaxLgrDegree; ++n) {
    auto [tau, w] = lgr_points_weights(n);
    CHECK(tau[0] == -1.0);
    for (Index i = 1; i < tau.size(); ++i) {
      CHECK(tau[i] > tau[i - 1]);
      CHECK(tau[i] < 1.0);
    }
    for (Index i = 0; i < w.size(); ++i) CHECK(w[i] > 0.0);
    CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-13));
  }
}

TEST_CASE("quadrature exact through degree 2N-2") {
  for (int n = 1; n <= 10; ++n) {
    auto [tau, w] = lgr_points_weights(n);
    for (int m = 0; m <= 2 * n - 2; ++m) {
      double q = 0.0;
      for (Index i = 0; i < tau.size(); ++i) q += w[i] * std::pow(tau[i], m);
      CHECK(std::fabs(q - monomial_integral(m)) < 1e-10);
    }
  }
}

TEST_CASE("quadrature exact on random polynomials of degree 2N-2") {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  for (int n = 2; n <= 10; ++n) {
    auto [tau, w] = lgr_points_weights(n);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> c(static_cast<size_t>(2 * n - 1));
      double exact = 0.0;
      for (size_t m = 0; m < c.size(); ++m) {
        c[m] = coeff(rng);
        exact += c[m] * monomial_integral(static_cast<int>(m));
      }
      double q = 0.0;
      for (Index i = 0; i < tau.size(); ++i) {
        double acc = 0.0, p = 1.0;
        for (size_t m = 0; m < c.size(); ++m) {
          acc += c[m] * p;
          p *= tau[i];
        }
        q += w[i] * acc;
      }
      CHECK(std::fabs(q - exact) < 1e-10);
    }
  }
}

TEST_CASE("differentiation matrix for N = 1") {
  const Eigen::MatrixXd d = lgr_diff_matrix(1);
  REQUIRE(d.rows() == 1);
  REQUIRE(d.cols() == 2);
  CHECK(d(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(d(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("differentiation matrix rows sum to zero") {
  for (int n : {1, 2, 3, 5, 8, 13, 21, 34, 55, 60}) {
    const Eigen::MatrixXd d = lgr_diff_matrix(n);
    for (Index i = 0; i < d.rows(); ++i) CHECK(std::fabs(d.row(i).sum()) < 1e-12);
  }
}

TEST_CASE("differentiation matrix exact on monomials") {
  for (int n = 1; n <= 10; ++n) {
    auto [tau, w] = lgr_points_weights(n);
    Eigen::VectorXd support(n + 1);
    support.head(n) = tau;
    support[n] = 1.0;
    const Eigen::MatrixXd d = lgr_diff_matrix(n);
    for (int m = 0; m <= n; ++m) {
      Eigen::VectorXd vals(n + 1), want(n);
      for (Index j = 0; j < n + 1; ++j) vals[j] = std::pow(support[j], m);
      for (Index i = 0; i < n; ++i) want[i] = m == 0 ? 0.0 : m * std::pow(tau[i], m - 1);
      const Eigen::VectorXd got = d * vals;
      for (Index i = 0; i < n; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-10);
    }
  }
}

TEST_CASE("integration inverts differentiation for polynomial antiderivatives") {
  // Solving D Y = f with Y_1 fixed reproduces the antiderivative of any
  // polynomial f of degree <= N-1 exactly.
  for (int n = 2; n <= 8; ++n) {
    const auto& basis = lgr_basis(n);
    for (int m = 0; m < n; ++m) {
      Eigen::VectorXd f(n);
      for (Index i = 0; i < n; ++i) f[i] = std::pow(basis.points[i], m);
      // Antiderivative tau^(m+1)/(m+1) anchored at tau = -1.
      auto anti = [m](double t) {
        return (std::pow(t, m + 1) - std::pow(-1.0, m + 1)) / (m + 1);
      };
      const Eigen::VectorXd rhs = f - basis.diff.col(0) * anti(-1.0);
      const Eigen::VectorXd y = basis.integration * rhs;
      for (Index i = 0; i < n - 1; ++i)
        CHECK(std::fabs(y[i] - anti(basis.points[i + 1])) < 1e-10);
      CHECK(std::fabs(y[n - 1] - anti(1.0)) < 1e-10);
    }
  }
}

TEST_CASE("invalid degrees rejected") {
  CHECK_THROWS_AS(lgr_points_weights(0), InvalidDegree);
  CHECK_THROWS_AS(lgr_points_weights(-2), InvalidDegree);
  CHECK_THROWS_AS(lgr_points_weights(kMaxLgrDegree + 1), InvalidDegree);
  CHECK_THROWS_AS(lgr_diff_matrix(0), InvalidDegree);
}

TEST_CASE("affine time map") {
  CHECK(map_tau_to_time(-1.0, 0.0, 10000.0) ==  0.0);
  CHECK(map_tau_to_time(1.0, 0.0, 10000.0) ==  10000.0);
  CHECK(map_tau_to_time(0.0, 0.0, 10000.0) ==  5000.0);
  CHECK_THROWS_AS(map_tau_to_time(0.0, 1.0, 1.0), DegenerateInterval);
  CHECK_THROWS_AS(map_time_to_tau(0.0, 2.0, 1.0), DegenerateInterval);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double tau = u(rng);
    const double t = map_tau_to_time(tau, -3.0, 17.0);
    CHECK(std::fabs(map_time_to_tau(t, -3.0, 17.0) - tau) < 1e-12);
  }
}

TEST_CASE("global mesh points") {
  PhaseMesh one = PhaseMesh::uniform(1, 2);
  const Eigen::VectorXd g1 = mesh_global_points(one);
  REQUIRE(g1.size() == 3);
  CHECK(g1[0] ==  -1.0);
  CHECK(g1[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(g1[2] ==  1.0);

  PhaseMesh two = PhaseMesh::uniform(2, 1);
  const Eigen::VectorXd g2 = mesh_global_points(two);
  REQUIRE(g2.size() == 3);
  CHECK(g2[0] ==  -1.0);
  CHECK(g2[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g2[2] ==  1.0);

  PhaseMesh paper = PhaseMesh::uniform(10, 3);
  CHECK(paper.total_collocation() == 30);
  CHECK(mesh_global_points(paper).size() == 31);
  CHECK(paper.valid());
}

TEST_CASE("barycentric interpolation reproduces polynomials") {
  const auto& basis = lgr_basis(4);
  Eigen::VectorXd support(5);
  support.head(4) = basis.points;
  support[4] = 1.0;
  const Eigen::VectorXd bw = barycentric_weights(support);
  Eigen::MatrixXd vals(5, 1);
  for (Index i = 0; i < 5; ++i)
    vals(i, 0) = 2.0 * std::pow(support[i], 4) - support[i] + 0.5;
  for (double x : {-0.9, -0.3, 0.123, 0.777, 1.0, -1.0}) {
    const double want = 2.0 * std::pow(x, 4) - x + 0.5;
    CHECK(barycentric_interpolate(support, bw, vals, x)[0] == doctest::Approx(want).epsilon(1e-12));
  }
  // Second derivative of the interpolant: 24 x^2.
  for (double x : {-0.5, 0.2, 0.8}) {
    CHECK(barycentric_second_derivative(support, bw, vals, x)[0]
          == doctest::Approx(24.0 * x * x).epsilon(1e-9));
  }
}
