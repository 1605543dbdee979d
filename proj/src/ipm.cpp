#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ocpkit/nlp.hpp"

namespace ocpkit {

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::max_iterations: return "max-iterations";
    case SolverStatus::infeasible: return "infeasible";
    default: return "numerical-failure";
  }
}

namespace {

constexpr double kMu0 = 0.1;
constexpr double kMuShrink = 0.2;
constexpr double kTau = 0.995;        // fraction-to-boundary
constexpr double kArmijoC1 = 1e-4;
constexpr double kDeltaW0 = 1e-8;     // first inertia correction
constexpr double kDeltaWMax = 1e4;
constexpr double kDeltaC = 1e-12;     // constant dual regularization
constexpr double kKappaSigma = 1e10;  // bound-multiplier safeguard
constexpr double kPinned = 1e40;      // diagonal pin for fixed variables

struct Workspace {
  Index n = 0;   // original variables
  Index m = 0;   // constraint rows
  Index nx = 0;  // variables + inequality slacks
  std::vector<Index> slack_of_row;  // -1 for equality rows
  Eigen::VectorXd xl, xu;           // extended bounds
  std::vector<bool> pinned;
  std::vector<bool> has_lower, has_upper;
};

Workspace make_workspace(const NLPInstance& nlp) {
  Workspace ws;
  ws.n = nlp.n;
  ws.m = nlp.m;
  ws.slack_of_row.assign(static_cast<size_t>(nlp.m), -1);
  Index n_slack = 0;
  for (Index i = 0; i < nlp.m; ++i) {
    if (nlp.c_lower[i] < nlp.c_upper[i]) ws.slack_of_row[static_cast<size_t>(i)] = n_slack++;
  }
  ws.nx = nlp.n + n_slack;
  ws.xl.resize(ws.nx);
  ws.xu.resize(ws.nx);
  ws.xl.head(nlp.n) = nlp.x_lower;
  ws.xu.head(nlp.n) = nlp.x_upper;
  for (Index i = 0; i < nlp.m; ++i) {
    const Index s = ws.slack_of_row[static_cast<size_t>(i)];
    if (s >= 0) {
      ws.xl[nlp.n + s] = nlp.c_lower[i];
      ws.xu[nlp.n + s] = nlp.c_upper[i];
    }
  }
  ws.pinned.resize(static_cast<size_t>(ws.nx));
  ws.has_lower.resize(static_cast<size_t>(ws.nx));
  ws.has_upper.resize(static_cast<size_t>(ws.nx));
  for (Index i = 0; i < ws.nx; ++i) {
    const bool pin = ws.xl[i] == ws.xu[i];
    ws.pinned[static_cast<size_t>(i)] = pin;
    ws.has_lower[static_cast<size_t>(i)] = !pin && std::isfinite(ws.xl[i]);
    ws.has_upper[static_cast<size_t>(i)] = !pin && std::isfinite(ws.xu[i]);
  }
  return ws;
}

// Equality residual E(x): c(z) pinned to its bound for equality rows,
// c(z) - w against the slack for inequality rows.
Eigen::VectorXd equality_residual(const Workspace& ws, const NLPInstance& nlp,
                                  const Eigen::VectorXd& c, const Eigen::VectorXd& x) {
  Eigen::VectorXd e(ws.m);
  for (Index i = 0; i < ws.m; ++i) {
    const Index s = ws.slack_of_row[static_cast<size_t>(i)];
    e[i] = s >= 0 ? c[i] - x[ws.n + s] : c[i] - nlp.c_lower[i];
  }
  return e;
}

double barrier_value(const Workspace& ws, const Eigen::VectorXd& x, double mu) {
  double b = 0.0;
  for (Index i = 0; i < ws.nx; ++i) {
    if (ws.has_lower[static_cast<size_t>(i)]) b -= mu * std::log(x[i] - ws.xl[i]);
    if (ws.has_upper[static_cast<size_t>(i)]) b -= mu * std::log(ws.xu[i] - x[i]);
  }
  return b;
}

}  // namespace

KKTResiduals kkt_residuals(const NLPInstance& nlp, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& constraint_multipliers,
                           const Eigen::VectorXd& bound_lower,
                           const Eigen::VectorXd& bound_upper) {
  KKTResiduals res;
  const Eigen::VectorXd grad = nlp.gradient(z);
  const Eigen::VectorXd jv = nlp.jacobian_values(z);
  Eigen::VectorXd stat = grad;
  for (size_t k = 0; k < nlp.jacobian_pattern.size(); ++k) {
    const auto& [row, col] = nlp.jacobian_pattern[k];
    stat[col] += constraint_multipliers[row] * jv[static_cast<Index>(k)];
  }
  stat -= bound_lower;
  stat += bound_upper;
  for (Index i = 0; i < nlp.n; ++i) {
    if (nlp.x_lower[i] == nlp.x_upper[i]) continue;  // pinned column absorbs its row
    res.stationarity = std::max(res.stationarity, std::fabs(stat[i]));
  }

  for (Index i = 0; i < nlp.n; ++i) {
    res.feasibility = std::max(res.feasibility, nlp.x_lower[i] - z[i]);
    res.feasibility = std::max(res.feasibility, z[i] - nlp.x_upper[i]);
    if (nlp.x_lower[i] == nlp.x_upper[i]) continue;
    if (std::isfinite(nlp.x_lower[i]))
      res.complementarity =
          std::max(res.complementarity, std::fabs(bound_lower[i] * (z[i] - nlp.x_lower[i])));
    if (std::isfinite(nlp.x_upper[i]))
      res.complementarity =
          std::max(res.complementarity, std::fabs(bound_upper[i] * (nlp.x_upper[i] - z[i])));
  }
  const Eigen::VectorXd c = nlp.constraints(z);
  for (Index i = 0; i < nlp.m; ++i) {
    res.feasibility = std::max(res.feasibility, nlp.c_lower[i] - c[i]);
    res.feasibility = std::max(res.feasibility, c[i] - nlp.c_upper[i]);
    if (nlp.c_lower[i] == nlp.c_upper[i]) continue;
    const double lam = constraint_multipliers[i];
    if (std::isfinite(nlp.c_upper[i]))
      res.complementarity =
          std::max(res.complementarity, std::fabs(std::max(lam, 0.0) * (nlp.c_upper[i] - c[i])));
    if (std::isfinite(nlp.c_lower[i]))
      res.complementarity =
          std::max(res.complementarity, std::fabs(std::min(lam, 0.0) * (c[i] - nlp.c_lower[i])));
  }
  res.feasibility = std::max(res.feasibility, 0.0);
  return res;
}

SolverResult solve(const NLPInstance& nlp, const Eigen::VectorXd& z0,
                   const SolverOptions& options) {
  SolverResult result;
  const Workspace ws = make_workspace(nlp);
  const Index n = ws.n, m = ws.m, nx = ws.nx;

  // Starting point pushed into the interior; slacks from the constraint
  // values at the start.
  Eigen::VectorXd x(nx);
  for (Index i = 0; i < n; ++i) x[i] = std::min(std::max(z0[i], ws.xl[i]), ws.xu[i]);
  Eigen::VectorXd c0;
  try {
    c0 = nlp.constraints(x.head(n));
  } catch (const EvaluationError& err) {
    result.message = std::string("initial point evaluation failed: ") + err.what();
    return result;
  }
  for (Index i = 0; i < m; ++i) {
    const Index s = ws.slack_of_row[static_cast<size_t>(i)];
    if (s >= 0) x[n + s] = c0[i];
  }
  for (Index i = 0; i < nx; ++i) {
    if (ws.pinned[static_cast<size_t>(i)]) {
      x[i] = ws.xl[i];
      continue;
    }
    const double width = ws.xu[i] - ws.xl[i];
    if (ws.has_lower[static_cast<size_t>(i)]) {
      double push = 1e-2 * std::max(1.0, std::fabs(ws.xl[i]));
      if (std::isfinite(width)) push = std::min(push, 1e-2 * width);
      x[i] = std::max(x[i], ws.xl[i] + push);
    }
    if (ws.has_upper[static_cast<size_t>(i)]) {
      double push = 1e-2 * std::max(1.0, std::fabs(ws.xu[i]));
      if (std::isfinite(width)) push = std::min(push, 1e-2 * width);
      x[i] = std::min(x[i], ws.xu[i] - push);
    }
  }

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd zl = Eigen::VectorXd::Zero(nx), zu = Eigen::VectorXd::Zero(nx);
  double mu = kMu0;
  const double mu_min = std::min(1e-9, options.tolerance / 10.0);
  for (Index i = 0; i < nx; ++i) {
    if (ws.has_lower[static_cast<size_t>(i)]) zl[i] = std::min(mu / (x[i] - ws.xl[i]), 1e6);
    if (ws.has_upper[static_cast<size_t>(i)]) zu[i] = std::min(mu / (ws.xu[i] - x[i]), 1e6);
  }

  // Fixed KKT pattern: Lagrangian Hessian block, barrier diagonal, Jacobian
  // rows with slack entries, dual regularization diagonal.
  std::vector<Eigen::Triplet<double>> structure;
  for (const auto& [r, c] : nlp.hessian_pattern) structure.emplace_back(r, c, 1.0);
  for (Index i = 0; i < nx; ++i) structure.emplace_back(i, i, 1.0);
  for (const auto& [r, c] : nlp.jacobian_pattern) structure.emplace_back(nx + r, c, 1.0);
  for (Index i = 0; i < m; ++i) {
    const Index s = ws.slack_of_row[static_cast<size_t>(i)];
    if (s >= 0) structure.emplace_back(nx + i, n + s, -1.0);
    structure.emplace_back(nx + i, nx + i, -1.0);
  }
  Eigen::SparseMatrix<double> kkt(nx + m, nx + m);
  kkt.setFromTriplets(structure.begin(), structure.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  ldlt.analyzePattern(kkt);

  double delta_warm = 0.0;  // regularization carried between iterations
  double nu_memory = 0.0;   // decaying floor for the l1 penalty

  // Watchdog episode: when strict Armijo accepts only crumbs, take a few
  // full steps from a saved checkpoint and demand the merit recovers below
  // the checkpoint value; restore the checkpoint otherwise.
  struct Checkpoint {
    Eigen::VectorXd x, lambda, zl, zu;
    double merit = 0.0;
    double nu = 0.0;
  };
  Checkpoint wd;
  int wd_countdown = 0;
  int wd_cooldown = 0;
  bool wd_active = false;

  result.status = SolverStatus::max_iterations;

  auto eval_merit = [&](const Eigen::VectorXd& xt, double nu_now, double& f_out,
                        double& viol_out) -> double {
    const Eigen::VectorXd zt = xt.head(n);
    f_out = nlp.objective(zt);
    const Eigen::VectorXd e = equality_residual(ws, nlp, nlp.constraints(zt), xt);
    viol_out = e.lpNorm<1>();
    return f_out + barrier_value(ws, xt, mu) + nu_now * viol_out;
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd z = x.head(n);
    Eigen::VectorXd grad, c, jv, hv;
    try {
      grad = nlp.gradient(z);
      c = nlp.constraints(z);
      jv = nlp.jacobian_values(z);
      hv = nlp.hessian_values(z, lambda, 1.0);
    } catch (const EvaluationError& err) {
      result.message = std::string("derivative evaluation failed: ") + err.what();
      result.status = SolverStatus::numerical_failure;
      break;
    }
    const Eigen::VectorXd e = equality_residual(ws, nlp, c, x);

    // Stationarity over the extended variables: slack columns carry
    // -lambda, bound duals enter with their signs.
    Eigen::VectorXd stat = Eigen::VectorXd::Zero(nx);
    stat.head(n) = grad;
    for (size_t k = 0; k < nlp.jacobian_pattern.size(); ++k) {
      const auto& [row, col] = nlp.jacobian_pattern[k];
      stat[col] += lambda[row] * jv[static_cast<Index>(k)];
    }
    for (Index i = 0; i < m; ++i) {
      const Index s = ws.slack_of_row[static_cast<size_t>(i)];
      if (s >= 0) stat[n + s] -= lambda[i];
    }
    stat -= zl;
    stat += zu;

    double stat_norm = 0.0, comp_norm = 0.0, comp_mu = 0.0;
    for (Index i = 0; i < nx; ++i) {
      if (ws.pinned[static_cast<size_t>(i)]) continue;
      stat_norm = std::max(stat_norm, std::fabs(stat[i]));
      if (ws.has_lower[static_cast<size_t>(i)]) {
        const double gap = zl[i] * (x[i] - ws.xl[i]);
        comp_norm = std::max(comp_norm, gap);
        comp_mu = std::max(comp_mu, std::fabs(gap - mu));
      }
      if (ws.has_upper[static_cast<size_t>(i)]) {
        const double gap = zu[i] * (ws.xu[i] - x[i]);
        comp_norm = std::max(comp_norm, gap);
        comp_mu = std::max(comp_mu, std::fabs(gap - mu));
      }
    }
    const double feas_norm = e.size() ? e.cwiseAbs().maxCoeff() : 0.0;

    result.residuals = {stat_norm, feas_norm, comp_norm};
    if (std::max(stat_norm, std::max(feas_norm, comp_norm)) <= options.tolerance) {
      result.status = SolverStatus::optimal;
      break;
    }
    // Barrier subproblem converged: tighten mu monotonically (held fixed
    // while a watchdog episode is open so its merits stay comparable).
    while (!wd_active && mu > mu_min &&
           std::max(stat_norm, std::max(feas_norm, comp_mu)) <= 10.0 * mu) {
      mu = std::max(mu * kMuShrink, mu_min);
      comp_mu = 0.0;
      for (Index i = 0; i < nx; ++i) {
        if (ws.pinned[static_cast<size_t>(i)]) continue;
        if (ws.has_lower[static_cast<size_t>(i)])
          comp_mu = std::max(comp_mu, std::fabs(zl[i] * (x[i] - ws.xl[i]) - mu));
        if (ws.has_upper[static_cast<size_t>(i)])
          comp_mu = std::max(comp_mu, std::fabs(zu[i] * (ws.xu[i] - x[i]) - mu));
      }
    }

    // Barrier gradient and the direction right-hand side.
    Eigen::VectorXd phi_grad = Eigen::VectorXd::Zero(nx);
    Eigen::VectorXd rhs(nx + m);
    for (Index i = 0; i < nx; ++i) {
      if (ws.pinned[static_cast<size_t>(i)]) {
        rhs[i] = 0.0;
        continue;
      }
      double g = i < n ? grad[i] : 0.0;
      if (ws.has_lower[static_cast<size_t>(i)]) g -= mu / (x[i] - ws.xl[i]);
      if (ws.has_upper[static_cast<size_t>(i)]) g += mu / (ws.xu[i] - x[i]);
      phi_grad[i] = g;
      rhs[i] = -g;
    }
    {
      Eigen::VectorXd jl = Eigen::VectorXd::Zero(nx);
      for (size_t k = 0; k < nlp.jacobian_pattern.size(); ++k) {
        const auto& [row, col] = nlp.jacobian_pattern[k];
        jl[col] += lambda[row] * jv[static_cast<Index>(k)];
      }
      for (Index i = 0; i < m; ++i) {
        const Index s = ws.slack_of_row[static_cast<size_t>(i)];
        if (s >= 0) jl[n + s] -= lambda[i];
      }
      for (Index i = 0; i < nx; ++i)
        if (!ws.pinned[static_cast<size_t>(i)]) rhs[i] -= jl[i];
    }
    rhs.tail(m) = -e;

    // Step computation: inertia-corrected factorization, penalty steering,
    // Armijo on the l1 merit. A rejected line search escalates the
    // regularization and recomputes the direction, which bends the step
    // toward pure feasibility restoration.
    bool accepted = false;
    bool fatal = false;
    bool relaxed_step = false;
    double nu_used = 0.0;
    double alpha_cap_seen = 1.0;
    Eigen::VectorXd x_pre = x, lambda_pre = lambda, zl_pre = zl, zu_pre = zu;
    // Corrections scale with the Hessian magnitude; multiplier transients
    // can push it far above unity.
    const double delta_unit =
        std::max(1.0, hv.size() ? hv.cwiseAbs().maxCoeff() : 0.0);
    double delta = delta_warm * delta_unit;
    double merit_pre = 0.0, merit_post = 0.0, f_pre = 0.0, alpha_used = 0.0;
    double viol_post = 0.0;

    for (int round = 0; round < 12 && !accepted; ++round) {
      Eigen::VectorXd step;
      bool factored = false;
      std::vector<Eigen::Triplet<double>> trips;
      for (int attempt = 0; attempt < 16; ++attempt) {
        trips.clear();
        trips.reserve(structure.size());
        for (size_t k = 0; k < nlp.hessian_pattern.size(); ++k) {
          const auto& [r, cc] = nlp.hessian_pattern[k];
          trips.emplace_back(r, cc, hv[static_cast<Index>(k)]);
        }
        for (Index i = 0; i < nx; ++i) {
          double d = delta;
          if (ws.pinned[static_cast<size_t>(i)]) {
            d = kPinned;
          } else {
            if (ws.has_lower[static_cast<size_t>(i)]) d += zl[i] / (x[i] - ws.xl[i]);
            if (ws.has_upper[static_cast<size_t>(i)]) d += zu[i] / (ws.xu[i] - x[i]);
          }
          trips.emplace_back(i, i, d);
        }
        for (size_t k = 0; k < nlp.jacobian_pattern.size(); ++k) {
          const auto& [row, col] = nlp.jacobian_pattern[k];
          trips.emplace_back(nx + row, col, jv[static_cast<Index>(k)]);
        }
        for (Index i = 0; i < m; ++i) {
          const Index s = ws.slack_of_row[static_cast<size_t>(i)];
          if (s >= 0) trips.emplace_back(nx + i, n + s, -1.0);
          trips.emplace_back(nx + i, nx + i, -kDeltaC);
        }
        kkt.setFromTriplets(trips.begin(), trips.end());
        ldlt.factorize(kkt);

        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
          Index pos = 0, neg = 0, zero = 0;
          const auto& d = ldlt.vectorD();
          for (Index i = 0; i < d.size(); ++i) {
            if (d[i] > 0.0) ++pos;
            else if (d[i] < 0.0) ++neg;
            else ++zero;
          }
          ok = pos == nx && neg == m && zero == 0;
        }
        if (ok) {
          step = ldlt.solve(rhs);
          const Eigen::VectorXd resid = rhs - kkt.selfadjointView<Eigen::Lower>() * step;
          step += ldlt.solve(resid);
          factored = true;
          break;
        }
        delta = delta == 0.0 ? kDeltaW0 * delta_unit : delta * 10.0;
        if (delta > kDeltaWMax * delta_unit) break;
      }
      if (!factored) {
        result.message = "KKT factorization failed after maximum regularization";
        result.status = SolverStatus::numerical_failure;
        fatal = true;
        break;
      }

      const Eigen::VectorXd dx = step.head(nx);
      const Eigen::VectorXd dlambda = step.tail(m);

      Eigen::VectorXd dzl = Eigen::VectorXd::Zero(nx), dzu = Eigen::VectorXd::Zero(nx);
      for (Index i = 0; i < nx; ++i) {
        if (ws.pinned[static_cast<size_t>(i)]) continue;
        if (ws.has_lower[static_cast<size_t>(i)])
          dzl[i] = mu / (x[i] - ws.xl[i]) - zl[i] - zl[i] / (x[i] - ws.xl[i]) * dx[i];
        if (ws.has_upper[static_cast<size_t>(i)])
          dzu[i] = mu / (ws.xu[i] - x[i]) - zu[i] + zu[i] / (ws.xu[i] - x[i]) * dx[i];
      }

      double alpha_max = 1.0, alpha_dual = 1.0;
      for (Index i = 0; i < nx; ++i) {
        if (ws.pinned[static_cast<size_t>(i)]) continue;
        if (ws.has_lower[static_cast<size_t>(i)] && dx[i] < 0.0)
          alpha_max = std::min(alpha_max, -kTau * (x[i] - ws.xl[i]) / dx[i]);
        if (ws.has_upper[static_cast<size_t>(i)] && dx[i] > 0.0)
          alpha_max = std::min(alpha_max, kTau * (ws.xu[i] - x[i]) / dx[i]);
        if (dzl[i] < 0.0) alpha_dual = std::min(alpha_dual, -kTau * zl[i] / dzl[i]);
        if (dzu[i] < 0.0) alpha_dual = std::min(alpha_dual, -kTau * zu[i] / dzu[i]);
      }

      // The l1 penalty is selected per direction: large enough that the
      // quadratic model predicts descent dominated by the feasibility
      // decrease, and above the multiplier estimate for exactness. It is
      // not ratcheted across iterations; transient estimates would pin it.
      const double e_l1 = e.lpNorm<1>();
      const double grad_dir = phi_grad.dot(dx);
      double nu = 1e-2;
      if (e_l1 > 1e-14) {
        const Eigen::VectorXd wdx =
            (kkt.selfadjointView<Eigen::Lower>() *
             (Eigen::VectorXd(nx + m) << dx, Eigen::VectorXd::Zero(m)).finished())
                .head(nx);
        const double quad = dx.dot(wdx);
        const double nu_req = (grad_dir + (quad > 0.0 ? 0.5 * quad : 0.0)) / (0.5 * e_l1);
        nu = std::max(nu, 1.1 * nu_req + 1e-4);
      }
      if (m > 0) nu = std::max(nu, 1.05 * (lambda + dlambda).lpNorm<Eigen::Infinity>());
      nu = std::min(std::max(nu, 0.5 * nu_memory), 1e12);
      double ddir = grad_dir - nu * e_l1;

      double viol_pre = 0.0;
      merit_pre = eval_merit(x, nu, f_pre, viol_pre);
      // Guard against runaway infeasibility without blocking tangential
      // steps, whose transient violation is O(step^2) but can exceed the
      // current violation by orders of magnitude near feasibility.
      const double viol_cap = 1.0 + 10.0 * viol_pre;
      alpha_cap_seen = alpha_max;
      const bool dbg = std::getenv("OCPKIT_IPM_DEBUG") != nullptr;
      if (dbg)
        std::fprintf(stderr, "[dir] round=%d delta=%.2e amax=%.2e ddir=%.3e nu=%.2e |dx|=%.2e\n",
                     round, delta, alpha_max, ddir, nu, dx.lpNorm<Eigen::Infinity>());
      double alpha = alpha_max;
      for (int ls = 0; ls < 40 && alpha > 1e-12; ++ls) {
        const Eigen::VectorXd xt = x + alpha * dx;
        double f_trial = 0.0, viol_trial = 0.0;
        double merit_trial;
        try {
          merit_trial = eval_merit(xt, nu, f_trial, viol_trial);
        } catch (const EvaluationError&) {
          alpha *= 0.5;
          continue;
        }
        if (dbg && ls < 6)
          std::fprintf(stderr,
                       "  [ls] a=%.3e dmerit=%.6e need<=%.6e df=%.3e dviol=%.3e dbar=%.3e\n",
                       alpha, merit_trial - merit_pre, kArmijoC1 * alpha * std::min(ddir, 0.0),
                       f_trial - f_pre, nu * (viol_trial - viol_pre),
                       (merit_trial - f_trial - nu * viol_trial) -
                           (merit_pre - f_pre - nu * viol_pre));
        const bool armijo_ok =
            merit_trial <= merit_pre + kArmijoC1 * alpha * std::min(ddir, 0.0);
        // Episode steps are checkpoint-protected; they bypass the merit
        // test but still honor an absolute violation ceiling.
        const bool relax_ok = wd_active && wd_countdown > 0 && ls == 0 && viol_trial <= 1.0;
        const bool cap_ok = viol_trial <= viol_cap || relax_ok;
        if (std::isfinite(merit_trial) && cap_ok && (armijo_ok || relax_ok)) {
          relaxed_step = !armijo_ok;
          x = xt;
          // Multipliers take the full dual step: damping them with the
          // primal alpha leaves the Lagrangian curvature stale, and the
          // next Newton direction repeats the same overshoot.
          lambda += dlambda;
          // Multiplier magnitudes beyond this are transients of the early
          // flailing phase, never converged estimates; clipping them keeps
          // the Hessian and the penalty finite.
          lambda = lambda.cwiseMax(-1e7).cwiseMin(1e7);
          zl += alpha_dual * dzl;
          zu += alpha_dual * dzu;
          merit_post = merit_trial;
          viol_post = viol_trial;
          alpha_used = alpha;
          nu_used = nu;
          nu_memory = std::max(0.9 * nu_memory, nu);
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        delta = std::max(delta * 10.0, kDeltaW0 * 100.0 * delta_unit);
        if (delta > kDeltaWMax * delta_unit) {
          result.message = "line search failed at maximum regularization";
          result.status = SolverStatus::numerical_failure;
          fatal = true;
          break;
        }
      }
    }
    if (fatal || !accepted) {
      if (wd_active) {
        x = wd.x;
        lambda = wd.lambda;
        zl = wd.zl;
        zu = wd.zu;
        wd_active = false;
        wd_cooldown = 5;
        delta_warm = std::max(delta_warm, 1e-2);
        continue;
      }
      if (!fatal && !accepted) {
        result.message = "no acceptable step found";
        result.status = SolverStatus::numerical_failure;
      }
      break;
    }
    if (wd_active) {
      double f_chk = 0.0, viol_chk = 0.0;
      const double merit_chk = eval_merit(x, wd.nu, f_chk, viol_chk);
      if (merit_chk <= wd.merit - 1e-12 * (1.0 + std::fabs(wd.merit))) {
        wd_active = false;  // recovered below the checkpoint
      } else if (--wd_countdown <= 0) {
        x = wd.x;
        lambda = wd.lambda;
        zl = wd.zl;
        zu = wd.zu;
        wd_active = false;
        wd_cooldown = 5;
        delta_warm = std::max(delta_warm, 1e-2);
        continue;
      }
    } else if (wd_cooldown > 0) {
      --wd_cooldown;
    } else if (alpha_used < alpha_cap_seen / 128.0 && viol_post <= 1e-3) {
      // Strict progress reduced to crumbs near feasibility: open an episode
      // anchored at the pre-step point and let a few full steps work
      // through the kink that stalls the merit.
      wd.x = x_pre;
      wd.lambda = lambda_pre;
      wd.zl = zl_pre;
      wd.zu = zu_pre;
      wd.merit = merit_pre;
      wd.nu = nu_used;
      wd_active = true;
      wd_countdown = 4;
    }

    // Carry a tenth of the accepted relative regularization forward; it
    // decays to zero near the solution.
    delta_warm = delta / (10.0 * delta_unit) > kDeltaW0 ? delta / (10.0 * delta_unit) : 0.0;

    // Keep the bound duals within a factor of the barrier target.
    for (Index i = 0; i < nx; ++i) {
      if (ws.has_lower[static_cast<size_t>(i)]) {
        const double target = mu / (x[i] - ws.xl[i]);
        zl[i] = std::min(std::max(zl[i], target / kKappaSigma), target * kKappaSigma);
      }
      if (ws.has_upper[static_cast<size_t>(i)]) {
        const double target = mu / (ws.xu[i] - x[i]);
        zu[i] = std::min(std::max(zu[i], target / kKappaSigma), target * kKappaSigma);
      }
    }

    if (options.collect_trace) {
      IterationRecord rec;
      rec.iteration = iter + 1;
      rec.mu = mu;
      rec.merit = merit_pre;
      rec.merit_after = merit_post;
      rec.objective = f_pre;
      rec.constraint_violation = e.lpNorm<1>();
      rec.step_length = alpha_used;
      rec.regularization = delta;
      rec.penalty = nu_used;
      rec.relaxed = relaxed_step;
      rec.stationarity = stat_norm;
      rec.feasibility = feas_norm;
      rec.complementarity = comp_norm;
      result.trace.push_back(rec);
    }
  }

  result.z = x.head(n);
  result.constraint_multipliers = lambda;
  result.bound_multipliers_lower = zl.head(n);
  result.bound_multipliers_upper = zu.head(n);
  // Pinned columns absorb their stationarity residual into the bound pair.
  try {
    const Eigen::VectorXd grad = nlp.gradient(result.z);
    const Eigen::VectorXd jv = nlp.jacobian_values(result.z);
    Eigen::VectorXd stat = grad;
    for (size_t k = 0; k < nlp.jacobian_pattern.size(); ++k) {
      const auto& [row, col] = nlp.jacobian_pattern[k];
      stat[col] += lambda[row] * jv[static_cast<Index>(k)];
    }
    for (Index i = 0; i < n; ++i) {
      if (nlp.x_lower[i] != nlp.x_upper[i]) continue;
      result.bound_multipliers_lower[i] = std::max(stat[i], 0.0);
      result.bound_multipliers_upper[i] = std::max(-stat[i], 0.0);
    }
  } catch (const EvaluationError&) {
  }
  return result;
}

}  // namespace ocpkit
