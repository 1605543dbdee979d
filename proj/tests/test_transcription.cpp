#include <random>
#include <set>

#include "doctest.h"
#include "ocpkit/benchmarks.hpp"
#include "ocpkit/transcription.hpp"

using namespace ocpkit;

namespace {

Transcription transcribe(const BenchmarkCase& bc, const Mesh& mesh,
                         Kernel kernel = Kernel::hyper_dual) {
  static std::vector<std::shared_ptr<SparsityPattern>> keep_alive;
  auto pattern = std::make_shared<SparsityPattern>(detect(*bc.problem, {10, 7}));
  keep_alive.push_back(pattern);
  return Transcription(*bc.problem, mesh, kernel, *pattern);
}

// Feasible-box sample: interior point of the variable box, pinned values
// where bounds collapse, randomized elsewhere.
Eigen::VectorXd random_point(const Transcription& t, std::mt19937& rng) {
  const Eigen::VectorXd lo = t.variable_lower();
  const Eigen::VectorXd up = t.variable_upper();
  std::uniform_real_distribution<double> unit(0.25, 0.75);
  Eigen::VectorXd z(lo.size());
  for (Index i = 0; i < z.size(); ++i) {
    const double a = std::isfinite(lo[i]) ? lo[i] : -1.0;
    const double b = std::isfinite(up[i]) ? up[i] : 1.0;
    z[i] = a + (b - a) * unit(rng);
  }
  return z;
}

Eigen::MatrixXd dense_jacobian_fd(const Transcription& t, const Eigen::VectorXd& z) {
  const double h = std::cbrt(std::numeric_limits<double>::epsilon());
  const Index m = t.constraint_layout().total;
  Eigen::MatrixXd jac(m, z.size());
  Eigen::VectorXd zp = z;
  for (Index j = 0; j < z.size(); ++j) {
    const double hj = h * (1.0 + std::fabs(z[j]));
    zp[j] = z[j] + hj;
    const Eigen::VectorXd fp = t.constraints(zp);
    zp[j] = z[j] - hj;
    const Eigen::VectorXd fm = t.constraints(zp);
    zp[j] = z[j];
    jac.col(j) = (fp - fm) / (2.0 * hj);
  }
  return jac;
}

}  // namespace

TEST_CASE("decision layout counts") {
  const BenchmarkCase hs = hyper_sensitive();
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(10, 3));
  const DecisionLayout dl = build_decision_layout(*hs.problem, mesh);
  // (N+1) n_y + N n_u + n_q + 2 with N = 30 and the lifted cost integral.
  CHECK(dl.total == 31 + 30 + 1 + 2);
  const ConstraintLayout cl = build_constraint_layout(*hs.problem, mesh);
  CHECK(cl.phases[0].n_colloc == 30);
  CHECK(cl.total == 30 + 1);

  // Without the integral variable the classic count is 63.
  ProblemDefinition plain = *hs.problem;
  plain.phases[0].n_q = 0;
  plain.phases[0].integrals = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  plain.phases[0].integrand = KernelFunction{};
  CHECK(build_decision_layout(plain, mesh).total == 63);

  // One static parameter appends exactly one trailing column.
  ProblemDefinition with_static = *hs.problem;
  with_static.n_s = 1;
  with_static.static_params = Bounds::box(1, 0.0, 1.0);
  CHECK(build_decision_layout(with_static, mesh).total == dl.total + 1);

  // Launch: four phases of 7 states, 3 controls on 10x4 meshes.
  const BenchmarkCase launch = launch_ascent();
  const DecisionLayout ldl = build_decision_layout(*launch.problem, launch.initial_mesh);
  CHECK(ldl.total == 4 * (41 * 7 + 40 * 3 + 2));
  CHECK(ldl.total == 1636);
}

TEST_CASE("layout ranges are disjoint and cover the total") {
  const BenchmarkCase bc = launch_ascent();
  const DecisionLayout dl = build_decision_layout(*bc.problem, bc.initial_mesh);
  std::vector<int> hits(static_cast<size_t>(dl.total), 0);
  for (int p = 0; p < 4; ++p) {
    const auto& pl = dl.phases[static_cast<size_t>(p)];
    for (int m = 0; m < pl.n_y; ++m)
      for (Index g = 0; g < pl.n_grid; ++g) ++hits[static_cast<size_t>(pl.state_col(m, g))];
    for (int c = 0; c < pl.n_u; ++c)
      for (Index i = 0; i < pl.n_colloc; ++i) ++hits[static_cast<size_t>(pl.control_col(c, i))];
    for (int j = 0; j < pl.n_q; ++j) ++hits[static_cast<size_t>(pl.integral_col(j))];
    ++hits[static_cast<size_t>(pl.t0_col())];
    ++hits[static_cast<size_t>(pl.tf_col())];
  }
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("constant dynamics with constant guess give zero defects") {
  auto problem = std::make_shared<ProblemDefinition>();
  PhaseDefinition ph;
  ph.n_y = 1;
  ph.n_u = 0;
  ph.state = Bounds::box(1, -2.0, 2.0);
  ph.control = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.integrals = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.path = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(2.0);
  ph.guess.time = Eigen::Vector2d(0.0, 2.0);
  ph.guess.state = Eigen::MatrixXd::Constant(2, 1, 0.7);
  ph.dynamics = make_kernel_function(2, 1, "zero", [](auto, auto& out) { out[0] = 0.0; });
  problem->phases.push_back(std::move(ph));
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "yf",
                                            [](auto x, auto& out) { out[0] = x[2]; });

  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(3, 4));
  const SparsityPattern pattern = detect(*problem, {10, 7});
  Transcription t(*problem, mesh, Kernel::hyper_dual, pattern);
  const Eigen::VectorXd h = t.constraints(t.initial_guess());
  CHECK(h.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("linear solution lies in every collocation space") {
  // ydot = 1 on [0, 2] with y = t sampled at the grid: defects vanish.
  auto problem = std::make_shared<ProblemDefinition>();
  PhaseDefinition ph;
  ph.n_y = 1;
  ph.n_u = 0;
  ph.state = Bounds::box(1, -5.0, 5.0);
  ph.control = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.integrals = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.path = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(2.0);
  ph.guess.time = Eigen::Vector2d(0.0, 2.0);
  ph.guess.state = Eigen::MatrixXd(2, 1);
  ph.guess.state << 0.0, 2.0;
  ph.dynamics = make_kernel_function(2, 1, "one", [](auto, auto& out) { out[0] = 1.0; });
  problem->phases.push_back(std::move(ph));
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "yf",
                                            [](auto x, auto& out) { out[0] = x[2]; });

  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(4, 3));
  const SparsityPattern pattern = detect(*problem, {10, 7});
  Transcription t(*problem, mesh, Kernel::hyper_dual, pattern);
  // The linear guess resamples exactly onto the grid.
  const Eigen::VectorXd h = t.constraints(t.initial_guess());
  CHECK(h.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant integrand integral approximation") {
  // g = 1 over tf - t0 = 10: rho = Q - 10.
  auto problem = std::make_shared<ProblemDefinition>();
  PhaseDefinition ph;
  ph.n_y = 1;
  ph.n_u = 0;
  ph.n_q = 1;
  ph.state = Bounds::box(1, -2.0, 2.0);
  ph.control = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.integrals = Bounds::free(1);
  ph.path = Bounds(Eigen::VectorXd(0), Eigen::VectorXd(0));
  ph.t0 = ScalarBounds::fixed(0.0);
  ph.tf = ScalarBounds::fixed(10.0);
  ph.guess.time = Eigen::Vector2d(0.0, 10.0);
  ph.guess.state = Eigen::MatrixXd::Zero(2, 1);
  ph.dynamics = make_kernel_function(2, 1, "zero", [](auto, auto& out) { out[0] = 0.0; });
  ph.integrand = make_kernel_function(2, 1, "one", [](auto, auto& out) { out[0] = 1.0; });
  problem->phases.push_back(std::move(ph));
  problem->objective = make_kernel_function(problem->endpoint_inputs(), 1, "Q",
                                            [](auto x, auto& out) { out[0] = x[4]; });

  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(2, 3));
  const SparsityPattern pattern = detect(*problem, {10, 7});
  Transcription t(*problem, mesh, Kernel::hyper_dual, pattern);
  Eigen::VectorXd z = t.initial_guess();
  const auto& pl = t.decision_layout().phases[0];
  z[pl.integral_col(0)] = 4.25;
  const Eigen::VectorXd h = t.constraints(z);
  const auto& cl = t.constraint_layout().phases[0];
  CHECK(h[cl.integral_row(0)] == doctest::Approx(4.25 - 10.0).epsilon(1e-13));
}

TEST_CASE("hyper-sensitive defect control entry") {
  const BenchmarkCase bc = hyper_sensitive();
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(1, 3));
  Transcription t = transcribe(bc, mesh);
  std::mt19937 rng(3);
  const Eigen::VectorXd z = random_point(t, rng);
  const Eigen::VectorXd vals = t.jacobian_values(z);
  const auto& pattern = t.jacobian_pattern();
  const auto& pl = t.decision_layout().phases[0];
  const auto& cl = t.constraint_layout().phases[0];
  const double beta = 0.5 * (z[pl.tf_col()] - z[pl.t0_col()]);
  for (Index i = 0; i < 3; ++i) {
    for (size_t k = 0; k < pattern.size(); ++k) {
      if (pattern[k].first == cl.defect_row(0, i) && pattern[k].second == pl.control_col(0, i))
        CHECK(vals[static_cast<Index>(k)] == doctest::Approx(-beta).epsilon(1e-12));
    }
  }
}

TEST_CASE("jacobian matches finite differences on every benchmark") {
  std::mt19937 rng(17);
  for (const auto& name : benchmark_names()) {
    const BenchmarkCase bc = make_benchmark(name);
    Mesh mesh;
    for (size_t p = 0; p < bc.problem->phases.size(); ++p)
      mesh.phases.push_back(PhaseMesh::uniform(2, 3));
    Transcription t = transcribe(bc, mesh);
    const Eigen::VectorXd z = random_point(t, rng);

    const Eigen::MatrixXd fd = dense_jacobian_fd(t, z);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(fd.rows(), fd.cols());
    const Eigen::VectorXd vals = t.jacobian_values(z);
    const auto& pattern = t.jacobian_pattern();
    for (size_t k = 0; k < pattern.size(); ++k)
      dense(pattern[k].first, pattern[k].second) += vals[static_cast<Index>(k)];

    const double scale = 1.0 + fd.cwiseAbs().maxCoeff();
    const double err = (dense - fd).cwiseAbs().maxCoeff() / scale;
    INFO(name, " relative jacobian error ", err);
    CHECK(err < 1e-5);

    // Gradient check.
    const Eigen::VectorXd grad = t.objective_gradient(z);
    const double h = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::VectorXd zp = z;
    for (Index j = 0; j < z.size(); ++j) {
      const double hj = h * (1.0 + std::fabs(z[j]));
      zp[j] = z[j] + hj;
      const double fp = t.objective(zp);
      zp[j] = z[j] - hj;
      const double fm = t.objective(zp);
      zp[j] = z[j];
      const double want = (fp - fm) / (2.0 * hj);
      CHECK(std::fabs(grad[j] - want) < 1e-5 * (1.0 + std::fabs(want)));
    }
  }
}

TEST_CASE("numeric nonzeros stay inside the declared pattern") {
  std::mt19937 rng(23);
  for (const auto& name : {"hyper-sensitive", "free-flying-robot", "space-station"}) {
    const BenchmarkCase bc = make_benchmark(name);
    Mesh mesh;
    for (size_t p = 0; p < bc.problem->phases.size(); ++p)
      mesh.phases.push_back(PhaseMesh::uniform(2, 3));
    Transcription t = transcribe(bc, mesh);
    const Eigen::VectorXd z = random_point(t, rng);
    const Eigen::MatrixXd fd = dense_jacobian_fd(t, z);
    std::set<std::pair<Index, Index>> declared(t.jacobian_pattern().begin(),
                                               t.jacobian_pattern().end());
    for (Index r = 0; r < fd.rows(); ++r)
      for (Index c = 0; c < fd.cols(); ++c)
        if (std::fabs(fd(r, c)) > 1e-6 * (1.0 + fd.cwiseAbs().maxCoeff()))
          CHECK(declared.count({r, c}) == 1);
  }
}

TEST_CASE("hessian matches finite differences of the gradient of the lagrangian") {
  std::mt19937 rng(29);
  for (const auto& name : benchmark_names()) {
    const BenchmarkCase bc = make_benchmark(name);
    Mesh mesh;
    for (size_t p = 0; p < bc.problem->phases.size(); ++p)
      mesh.phases.push_back(PhaseMesh::uniform(1, 3));
    Transcription t = transcribe(bc, mesh);
    const Eigen::VectorXd z = random_point(t, rng);
    Eigen::VectorXd lam(t.constraint_layout().total);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index i = 0; i < lam.size(); ++i) lam[i] = u(rng);
    const double sigma = 0.8;

    // Dense Hessian from the sparse lower triangle.
    const Index n = t.decision_layout().total;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    const Eigen::VectorXd vals = t.hessian_values(z, lam, sigma);
    const auto& pattern = t.hessian_pattern();
    for (size_t k = 0; k < pattern.size(); ++k) {
      const auto& [r, c] = pattern[k];
      CHECK(r >= c);  // canonical lower triangle
      dense(r, c) += vals[static_cast<Index>(k)];
      if (r != c) dense(c, r) += vals[static_cast<Index>(k)];
    }
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // Independent route: finite differences of the exact Lagrangian gradient.
    auto lagr_grad = [&](const Eigen::VectorXd& at) -> Eigen::VectorXd {
      Eigen::VectorXd g = sigma * t.objective_gradient(at);
      const Eigen::VectorXd jv = t.jacobian_values(at);
      const auto& jp = t.jacobian_pattern();
      for (size_t k = 0; k < jp.size(); ++k)
        g[jp[k].second] += lam[jp[k].first] * jv[static_cast<Index>(k)];
      return g;
    };
    const double h = 1e-6;
    Eigen::MatrixXd fd(n, n);
    Eigen::VectorXd zp = z;
    for (Index j = 0; j < n; ++j) {
      const double hj = h * (1.0 + std::fabs(z[j]));
      zp[j] = z[j] + hj;
      const Eigen::VectorXd gp = lagr_grad(zp);
      zp[j] = z[j] - hj;
      const Eigen::VectorXd gm = lagr_grad(zp);
      zp[j] = z[j];
      fd.col(j) = (gp - gm) / (2.0 * hj);
    }
    const double scale = 1.0 + fd.cwiseAbs().maxCoeff();
    const double err = (dense - fd).cwiseAbs().maxCoeff() / scale;
    INFO(name, " relative hessian error ", err);
    CHECK(err < 2e-4);
  }
}

TEST_CASE("variable scaling examples") {
  auto [v1, r1] = variable_scale_shift(0.0, 10.0);
  CHECK(v1 == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r1 == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(v1 * 10.0 + r1 == doctest::Approx(0.5).epsilon(1e-14));

  auto [v2, r2] = variable_scale_shift(-0.5, 0.5);
  CHECK(v2 == 1.0);
  CHECK(r2 == doctest::Approx(0.0).epsilon(1e-15));

  auto [v3, r3] = variable_scale_shift(-kInf, kInf);
  CHECK(v3 == 1.0);
  CHECK(r3 == 0.0);

  auto [v4, r4] = variable_scale_shift(7.0, 7.0);
  CHECK(v4 == 1.0);
  CHECK(v4 * 7.0 + r4 == 0.0);
}

TEST_CASE("scaled nlp reproduces unscaled values") {
  const BenchmarkCase bc = hyper_sensitive();
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(4, 3));
  const SparsityPattern pattern = detect(*bc.problem, {10, 7});
  Transcription t(*bc.problem, mesh, Kernel::hyper_dual, pattern);
  const ProblemScales scales = compute_scales(*bc.problem, pattern, {100, 5});
  const ScaledNLP scaled = make_scaled_nlp(t, scales);

  std::mt19937 rng(31);
  const Eigen::VectorXd z = random_point(t, rng);
  const Eigen::VectorXd zs = scaled.scale_point(z);
  CHECK((scaled.unscale_point(zs) - z).cwiseAbs().maxCoeff() < 1e-10);

  // Scaled objective and constraints relate by the declared factors.
  CHECK(scaled.nlp.objective(zs) ==
        doctest::Approx(scaled.objective_scale * t.objective(z)).epsilon(1e-10));
  const Eigen::VectorXd hs = scaled.nlp.constraints(zs);
  const Eigen::VectorXd h = t.constraints(z);
  for (Index i = 0; i < h.size(); ++i)
    CHECK(hs[i] == doctest::Approx(scaled.row_scale[i] * h[i]).epsilon(1e-9));

  // Defect rows reuse the state scales; the state box maps into [-1/2, 1/2].
  const auto& pl = t.decision_layout().phases[0];
  CHECK(scaled.nlp.x_lower[pl.state_col(0, 1)] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(scaled.nlp.x_upper[pl.state_col(0, 1)] == doctest::Approx(0.5).epsilon(1e-12));
  const auto& cl = t.constraint_layout().phases[0];
  CHECK(scaled.row_scale[cl.defect_row(0, 0)] ==
        doctest::Approx(scales.phases[0].state_v[0]).epsilon(1e-15));
}

TEST_CASE("kernel selection produces consistent jacobians") {
  const BenchmarkCase bc = rlv_entry();
  Mesh mesh;
  mesh.phases.push_back(PhaseMesh::uniform(2, 3));
  const SparsityPattern pattern = detect(*bc.problem, {10, 7});
  Transcription hd(*bc.problem, mesh, Kernel::hyper_dual, pattern);
  Transcription bcx(*bc.problem, mesh, Kernel::bicomplex, pattern);
  Transcription fd(*bc.problem, mesh, Kernel::central_fd, pattern);
  std::mt19937 rng(37);
  const Eigen::VectorXd z = random_point(hd, rng);
  const Eigen::VectorXd a = hd.jacobian_values(z);
  const Eigen::VectorXd b = bcx.jacobian_values(z);
  const Eigen::VectorXd c = fd.jacobian_values(z);
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  CHECK((a - b).cwiseAbs().maxCoeff() / scale < 1e-10);
  CHECK((a - c).cwiseAbs().maxCoeff() / scale < 1e-5);
}
