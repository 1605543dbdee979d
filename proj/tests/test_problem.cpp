#include "doctest.h"
#include "ocpkit/benchmarks.hpp"
#include "ocpkit/problem.hpp"
#include "ocpkit/solution.hpp"

using namespace ocpkit;

TEST_CASE("benchmark definitions validate cleanly") {
  for (const auto& name : benchmark_names()) {
    const BenchmarkCase bc = make_benchmark(name);
    const ValidationReport report = validate(*bc.problem);
    for (const auto& issue : report.issues)
      MESSAGE(name, ": ", issue.where, ": ", issue.message);
    CHECK(report.ok());
  }
}

TEST_CASE("bound inversion is reported") {
  BenchmarkCase bc = hyper_sensitive();
  ProblemDefinition problem = *bc.problem;
  problem.phases[0].state = Bounds(Eigen::VectorXd::Constant(1, 2.0),
                                   Eigen::VectorXd::Constant(1, -2.0));
  problem.phases[0].initial_state.reset();
  problem.phases[0].final_state.reset();
  problem.phases[0].guess.state.setConstant(0.0);
  const ValidationReport report = validate(problem);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues)
    if (issue.message.find("exceeds upper bound") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("dynamics output length mismatch is reported") {
  BenchmarkCase bc = hyper_sensitive();
  ProblemDefinition problem = *bc.problem;
  problem.phases[0].dynamics =
      make_kernel_function(3, 1, "bad dynamics", [](auto x, auto& out) {
        out.resize(2);
        out[0] = x[0];
        out[1] = x[1];
      });
  const ValidationReport report = validate(problem);
  REQUIRE_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues)
    if (issue.message.find("does not match declared") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("guess outside bounds is reported") {
  BenchmarkCase bc = hyper_sensitive();
  ProblemDefinition problem = *bc.problem;
  problem.phases[0].guess.control.setConstant(99.0);
  const ValidationReport report = validate(problem);
  CHECK_FALSE(report.ok());
}

TEST_CASE("non-increasing guess times are reported") {
  BenchmarkCase bc = hyper_sensitive();
  ProblemDefinition problem = *bc.problem;
  problem.phases[0].guess.time << 5.0, 5.0;
  const ValidationReport report = validate(problem);
  CHECK_FALSE(report.ok());
}

TEST_CASE("endpoint vector assembly") {
  const Eigen::VectorXd e = evaluate_endpoint_vector(
      Eigen::VectorXd::Constant(1, 1.0), 0.0, Eigen::VectorXd::Constant(1, 1.5), 10000.0,
      Eigen::VectorXd(0));
  REQUIRE(e.size() == 4);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 0.0);
  CHECK(e[2] == 1.5);
  CHECK(e[3] == 10000.0);

  // Zero phase with n_y = 2 gives an all-zero vector of length 2 n_y + 2.
  const Eigen::VectorXd z = evaluate_endpoint_vector(Eigen::VectorXd::Zero(2), 0.0,
                                                     Eigen::VectorXd::Zero(2), 0.0,
                                                     Eigen::VectorXd(0));
  REQUIRE(z.size() == 6);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd q = evaluate_endpoint_vector(Eigen::VectorXd::Zero(1), 0.0,
                                                     Eigen::VectorXd::Zero(1), 1.0,
                                                     Eigen::VectorXd::Constant(1, 3.362));
  REQUIRE(q.size() == 5);
  CHECK(q[4] == 3.362);
}

TEST_CASE("endpoint vector length invariant") {
  for (const auto& name : benchmark_names()) {
    const BenchmarkCase bc = make_benchmark(name);
    for (const auto& ph : bc.problem->phases)
      CHECK(endpoint_vector_length(ph) == 2 * ph.n_y + ph.n_q + 2);
  }
}

TEST_CASE("benchmark dynamics agree between real and hyper-dual kernels") {
  for (const auto& name : benchmark_names()) {
    const BenchmarkCase bc = make_benchmark(name);
    for (size_t p = 0; p < bc.problem->phases.size(); ++p) {
      const auto& ph = bc.problem->phases[p];
      // Probe at the guess point.
      Eigen::VectorXd x = Eigen::VectorXd::Zero(ph.point_inputs(bc.problem->n_s));
      for (int m = 0; m < ph.n_y; ++m) x[m] = ph.guess.state(0, m);
      for (int c = 0; c < ph.n_u; ++c) x[ph.n_y + c] = ph.guess.control(0, c);
      x[ph.n_y + ph.n_u] = ph.guess.time[0];
      const std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
      const Eigen::VectorXd real = evaluate(ph.dynamics, xs);
      std::vector<HyperDual> hx(x.data(), x.data() + x.size());
      std::vector<HyperDual> out;
      detail::eval_checked<HyperDual>(ph.dynamics, hx, out);
      for (int m = 0; m < ph.n_y; ++m)
        CHECK(std::fabs(out[static_cast<size_t>(m)].re - real[m]) <=
              1e-14 * (1.0 + std::fabs(real[m])));
    }
  }
}

TEST_CASE("hyper-sensitive dynamics value") {
  const BenchmarkCase bc = hyper_sensitive();
  Eigen::VectorXd x(3);
  x << 1.0, 0.0, 0.0;
  const std::span<const double> xs(x.data(), 3);
  CHECK(evaluate(bc.problem->phases[0].dynamics, xs)[0] == -1.0);
  x << 1.0, 1.0, 0.0;
  CHECK(evaluate(bc.problem->phases[0].integrand, xs)[0] == 1.0);
}
