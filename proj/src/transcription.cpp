#include "ocpkit/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <Eigen/Sparse>

namespace ocpkit {

DecisionLayout build_decision_layout(const ProblemDefinition& problem, const Mesh& mesh) {
  DecisionLayout layout;
  Index at = 0;
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    const auto& pm = mesh.phases[static_cast<size_t>(p)];
    PhaseLayout pl;
    pl.first = at;
    pl.n_colloc = pm.total_collocation();
    pl.n_grid = pl.n_colloc + 1;
    pl.n_y = ph.n_y;
    pl.n_u = ph.n_u;
    pl.n_q = ph.n_q;
    pl.n_c = ph.n_c;
    at += pl.size();
    layout.phases.push_back(pl);
  }
  layout.n_static = problem.n_s;
  layout.total = at + problem.n_s;
  return layout;
}

ConstraintLayout build_constraint_layout(const ProblemDefinition& problem, const Mesh& mesh) {
  ConstraintLayout layout;
  Index at = 0;
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    const auto& pm = mesh.phases[static_cast<size_t>(p)];
    PhaseConstraintLayout pl;
    pl.first = at;
    pl.n_colloc = pm.total_collocation();
    pl.n_y = ph.n_y;
    pl.n_c = ph.n_c;
    pl.n_q = ph.n_q;
    at += pl.size();
    layout.phases.push_back(pl);
  }
  layout.n_events = problem.n_b;
  layout.total = at + problem.n_b;
  return layout;
}

namespace {

// Columns touched by one kernel input of a point function, with the chain
// factor of each column. The time input maps onto both endpoint columns
// through dt/dt0 = (1-tau)/2 and dt/dtf = (1+tau)/2.
using ColSet = std::vector<std::pair<Index, double>>;

ColSet point_input_columns(const PhaseLayout& pl, const DecisionLayout& layout, int input,
                           Index point, double tau) {
  if (input < pl.n_y) return {{pl.state_col(input, point), 1.0}};
  if (input < pl.n_y + pl.n_u) return {{pl.control_col(input - pl.n_y, point), 1.0}};
  if (input == pl.n_y + pl.n_u)
    return {{pl.t0_col(), 0.5 * (1.0 - tau)}, {pl.tf_col(), 0.5 * (1.0 + tau)}};
  return {{layout.static_col(input - pl.n_y - pl.n_u - 1), 1.0}};
}

std::vector<Index> endpoint_columns(const ProblemDefinition& problem,
                                    const DecisionLayout& layout) {
  std::vector<Index> cols;
  cols.reserve(static_cast<size_t>(problem.endpoint_inputs()));
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& pl = layout.phases[static_cast<size_t>(p)];
    for (int i = 0; i < pl.n_y; ++i) cols.push_back(pl.state_col(i, 0));
    cols.push_back(pl.t0_col());
    for (int i = 0; i < pl.n_y; ++i) cols.push_back(pl.state_col(i, pl.n_grid - 1));
    cols.push_back(pl.tf_col());
    for (int i = 0; i < pl.n_q; ++i) cols.push_back(pl.integral_col(i));
  }
  for (int i = 0; i < problem.n_s; ++i) cols.push_back(layout.static_col(i));
  return cols;
}

std::pair<Index, Index> canon(Index a, Index b) { return a >= b ? std::make_pair(a, b) : std::make_pair(b, a); }

struct PairHash {
  size_t operator()(const std::pair<Index, Index>& p) const {
    return std::hash<long long>()((static_cast<long long>(p.first) << 24) ^ p.second);
  }
};

}  // namespace

std::pair<std::vector<std::pair<Index, Index>>, std::vector<std::pair<Index, Index>>>
assemble_nlp_sparsity(const SparsityPattern& pattern, const ProblemDefinition& problem,
                      const Mesh& mesh) {
  const DecisionLayout decision = build_decision_layout(problem, mesh);
  const ConstraintLayout constraint = build_constraint_layout(problem, mesh);
  std::set<std::pair<Index, Index>> jac;
  std::set<std::pair<Index, Index>> hess;

  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& pm = mesh.phases[static_cast<size_t>(p)];
    const auto& pl = decision.phases[static_cast<size_t>(p)];
    const auto& cl = constraint.phases[static_cast<size_t>(p)];
    const auto& pat = pattern.phases[static_cast<size_t>(p)];
    const Eigen::VectorXd tau = mesh_global_points(pm);
    const auto offsets = mesh_interval_offsets(pm);

    // Defect rows: differentiation coupling across the interval supports.
    for (int k = 0; k < pm.interval_count(); ++k) {
      const int nk = pm.degrees[static_cast<size_t>(k)];
      for (int m = 0; m < pl.n_y; ++m) {
        for (Index i = 0; i < nk; ++i) {
          const Index row = cl.defect_row(m, offsets[static_cast<size_t>(k)] + i);
          for (Index j = 0; j <= nk; ++j)
            jac.insert({row, pl.state_col(m, offsets[static_cast<size_t>(k)] + j)});
        }
      }
    }
    for (Index i = 0; i < pl.n_colloc; ++i) {
      const double ti = tau[i];
      // Dynamics dependencies plus the time columns every defect row carries.
      for (int m = 0; m < pl.n_y; ++m) {
        const Index row = cl.defect_row(m, i);
        jac.insert({row, pl.t0_col()});
        jac.insert({row, pl.tf_col()});
        for (const auto& [out, in] : pat.dynamics.first) {
          if (out != m) continue;
          for (const auto& [col, fac] : point_input_columns(pl, decision, in, i, ti))
            jac.insert({row, col});
        }
      }
      for (const auto& [out, in] : pat.path.first) {
        const Index row = cl.path_row(out, i);
        for (const auto& [col, fac] : point_input_columns(pl, decision, in, i, ti))
          jac.insert({row, col});
      }
      // Hessian blocks of the point functions.
      auto add_second = [&](const FunctionSparsity& fs, bool beta_weighted) {
        for (const auto& [w1, w2] : fs.second) {
          const ColSet c1 = point_input_columns(pl, decision, w1, i, ti);
          const ColSet c2 = point_input_columns(pl, decision, w2, i, ti);
          if (w1 == w2) {
            for (size_t a = 0; a < c1.size(); ++a)
              for (size_t b = a; b < c1.size(); ++b)
                hess.insert(canon(c1[a].first, c1[b].first));
          } else {
            for (const auto& [ca, fa] : c1)
              for (const auto& [cb, fb] : c2) hess.insert(canon(ca, cb));
          }
        }
        if (!beta_weighted) return;
        for (int in : fs.active_inputs()) {
          for (const auto& [col, fac] : point_input_columns(pl, decision, in, i, ti)) {
            hess.insert(canon(pl.t0_col(), col));
            hess.insert(canon(pl.tf_col(), col));
          }
        }
      };
      add_second(pat.dynamics, true);
      add_second(pat.path, false);
      if (pl.n_q > 0) add_second(pat.integrand, true);
    }
    // Integral approximation rows couple every collocation point.
    for (int j = 0; j < pl.n_q; ++j) {
      const Index row = cl.integral_row(j);
      jac.insert({row, pl.integral_col(j)});
      jac.insert({row, pl.t0_col()});
      jac.insert({row, pl.tf_col()});
      for (const auto& [out, in] : pat.integrand.first) {
        if (out != j) continue;
        for (Index i = 0; i < pl.n_colloc; ++i)
          for (const auto& [col, fac] : point_input_columns(pl, decision, in, i, tau[i]))
            jac.insert({row, col});
      }
    }
  }

  // Endpoint functions.
  const std::vector<Index> ep_cols = endpoint_columns(problem, decision);
  for (const auto& [out, in] : pattern.events.first)
    jac.insert({constraint.event_row(out), ep_cols[static_cast<size_t>(in)]});
  for (const auto& [l1, l2] : pattern.objective.second)
    hess.insert(canon(ep_cols[static_cast<size_t>(l1)], ep_cols[static_cast<size_t>(l2)]));
  for (const auto& [l1, l2] : pattern.events.second)
    hess.insert(canon(ep_cols[static_cast<size_t>(l1)], ep_cols[static_cast<size_t>(l2)]));

  return {{jac.begin(), jac.end()}, {hess.begin(), hess.end()}};
}

// ---------------------------------------------------------------------------
// Transcription
// ---------------------------------------------------------------------------

Transcription::Transcription(const ProblemDefinition& problem, const Mesh& mesh, Kernel kernel,
                             const SparsityPattern& pattern)
    : problem_(problem), mesh_(mesh), kernel_(kernel), pattern_(pattern) {
  decision_ = build_decision_layout(problem, mesh);
  constraint_ = build_constraint_layout(problem, mesh);
  for (const auto& pm : mesh.phases) {
    tau_.push_back(mesh_global_points(pm));
    interval_offsets_.push_back(mesh_interval_offsets(pm));
  }
  std::tie(jac_pattern_, hess_pattern_) = assemble_nlp_sparsity(pattern, problem, mesh);
}

Eigen::VectorXd Transcription::variable_lower() const {
  Eigen::VectorXd lo(decision_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    for (int m = 0; m < pl.n_y; ++m) {
      for (Index g = 0; g < pl.n_grid; ++g) lo[pl.state_col(m, g)] = ph.state.lower[m];
      lo[pl.state_col(m, 0)] = ph.initial_state_bounds().lower[m];
      lo[pl.state_col(m, pl.n_grid - 1)] = ph.final_state_bounds().lower[m];
    }
    for (int c = 0; c < pl.n_u; ++c)
      for (Index i = 0; i < pl.n_colloc; ++i) lo[pl.control_col(c, i)] = ph.control.lower[c];
    for (int j = 0; j < pl.n_q; ++j) lo[pl.integral_col(j)] = ph.integrals.lower[j];
    lo[pl.t0_col()] = ph.t0.lower;
    lo[pl.tf_col()] = ph.tf.lower;
  }
  for (int i = 0; i < problem_.n_s; ++i)
    lo[decision_.static_col(i)] = problem_.static_params.lower[i];
  return lo;
}

Eigen::VectorXd Transcription::variable_upper() const {
  Eigen::VectorXd up(decision_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    for (int m = 0; m < pl.n_y; ++m) {
      for (Index g = 0; g < pl.n_grid; ++g) up[pl.state_col(m, g)] = ph.state.upper[m];
      up[pl.state_col(m, 0)] = ph.initial_state_bounds().upper[m];
      up[pl.state_col(m, pl.n_grid - 1)] = ph.final_state_bounds().upper[m];
    }
    for (int c = 0; c < pl.n_u; ++c)
      for (Index i = 0; i < pl.n_colloc; ++i) up[pl.control_col(c, i)] = ph.control.upper[c];
    for (int j = 0; j < pl.n_q; ++j) up[pl.integral_col(j)] = ph.integrals.upper[j];
    up[pl.t0_col()] = ph.t0.upper;
    up[pl.tf_col()] = ph.tf.upper;
  }
  for (int i = 0; i < problem_.n_s; ++i)
    up[decision_.static_col(i)] = problem_.static_params.upper[i];
  return up;
}

Eigen::VectorXd Transcription::constraint_lower() const {
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(constraint_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& cl = constraint_.phases[static_cast<size_t>(p)];
    for (int m = 0; m < cl.n_c; ++m)
      for (Index i = 0; i < cl.n_colloc; ++i) lo[cl.path_row(m, i)] = ph.path.lower[m];
  }
  for (int i = 0; i < problem_.n_b; ++i)
    lo[constraint_.event_row(i)] = problem_.event.lower[i];
  return lo;
}

Eigen::VectorXd Transcription::constraint_upper() const {
  Eigen::VectorXd up = Eigen::VectorXd::Zero(constraint_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& cl = constraint_.phases[static_cast<size_t>(p)];
    for (int m = 0; m < cl.n_c; ++m)
      for (Index i = 0; i < cl.n_colloc; ++i) up[cl.path_row(m, i)] = ph.path.upper[m];
  }
  for (int i = 0; i < problem_.n_b; ++i)
    up[constraint_.event_row(i)] = problem_.event.upper[i];
  return up;
}

void Transcription::point_inputs(const Eigen::VectorXd& z, int p, Index point,
                                 Eigen::VectorXd& x) const {
  const auto& ph = problem_.phases[static_cast<size_t>(p)];
  const auto& pl = decision_.phases[static_cast<size_t>(p)];
  x.resize(ph.point_inputs(problem_.n_s));
  for (int m = 0; m < ph.n_y; ++m) x[m] = z[pl.state_col(m, point)];
  for (int c = 0; c < ph.n_u; ++c) x[ph.n_y + c] = z[pl.control_col(c, point)];
  const double t0 = z[pl.t0_col()], tf = z[pl.tf_col()];
  const double tau = tau_[static_cast<size_t>(p)][point];
  x[ph.n_y + ph.n_u] = 0.5 * (tf - t0) * tau + 0.5 * (tf + t0);
  for (int i = 0; i < problem_.n_s; ++i)
    x[ph.n_y + ph.n_u + 1 + i] = z[decision_.static_col(i)];
}

Eigen::VectorXd Transcription::endpoint_inputs(const Eigen::VectorXd& z) const {
  Eigen::VectorXd e(problem_.endpoint_inputs());
  Index at = 0;
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    for (int m = 0; m < pl.n_y; ++m) e[at + m] = z[pl.state_col(m, 0)];
    e[at + pl.n_y] = z[pl.t0_col()];
    for (int m = 0; m < pl.n_y; ++m) e[at + pl.n_y + 1 + m] = z[pl.state_col(m, pl.n_grid - 1)];
    e[at + 2 * pl.n_y + 1] = z[pl.tf_col()];
    for (int j = 0; j < pl.n_q; ++j) e[at + 2 * pl.n_y + 2 + j] = z[pl.integral_col(j)];
    at += 2 * pl.n_y + 2 + pl.n_q;
  }
  for (int i = 0; i < problem_.n_s; ++i) e[at + i] = z[decision_.static_col(i)];
  return e;
}

double Transcription::objective(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd e = endpoint_inputs(z);
  return evaluate(problem_.objective, std::span<const double>(e.data(),
                                                              static_cast<size_t>(e.size())))[0];
}

Eigen::VectorXd Transcription::objective_gradient(const Eigen::VectorXd& z) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(decision_.total);
  const Eigen::VectorXd e = endpoint_inputs(z);
  const std::span<const double> es(e.data(), static_cast<size_t>(e.size()));
  const std::vector<Index> cols = endpoint_columns(problem_, decision_);
  for (int in : pattern_.objective.active_inputs()) {
    const double g = first_partial(problem_.objective, es, in, kernel_)[0];
    grad[cols[static_cast<size_t>(in)]] += g;
  }
  return grad;
}

Eigen::VectorXd Transcription::constraints(const Eigen::VectorXd& z) const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(constraint_.total);
  Eigen::VectorXd x;
  std::vector<double> a, c, g;
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pm = mesh_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    const auto& cl = constraint_.phases[static_cast<size_t>(p)];
    const auto& offsets = interval_offsets_[static_cast<size_t>(p)];
    const double beta = 0.5 * (z[pl.tf_col()] - z[pl.t0_col()]);

    Eigen::VectorXd quad = Eigen::VectorXd::Zero(ph.n_q);
    for (int k = 0; k < pm.interval_count(); ++k) {
      const auto& basis = lgr_basis(pm.degrees[static_cast<size_t>(k)]);
      const double width = pm.breakpoints[static_cast<size_t>(k) + 1] -
                           pm.breakpoints[static_cast<size_t>(k)];
      const double dscale = 2.0 / width;
      const Index off = offsets[static_cast<size_t>(k)];
      const int nk = basis.degree;

      for (Index i = 0; i < nk; ++i) {
        const Index point = off + i;
        point_inputs(z, p, point, x);
        const std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
        detail::eval_checked<double>(ph.dynamics, xs, a);
        for (int m = 0; m < ph.n_y; ++m) {
          double dy = 0.0;
          for (Index j = 0; j <= nk; ++j)
            dy += dscale * basis.diff(i, j) * z[pl.state_col(m, off + j)];
          h[cl.defect_row(m, point)] = dy - beta * a[static_cast<size_t>(m)];
        }
        if (ph.n_c > 0) {
          detail::eval_checked<double>(ph.path_fn, xs, c);
          for (int m = 0; m < ph.n_c; ++m) h[cl.path_row(m, point)] = c[static_cast<size_t>(m)];
        }
        if (ph.n_q > 0) {
          detail::eval_checked<double>(ph.integrand, xs, g);
          const double wi = 0.5 * width * basis.weights[i];
          for (int j = 0; j < ph.n_q; ++j) quad[j] += wi * g[static_cast<size_t>(j)];
        }
      }
    }
    for (int j = 0; j < ph.n_q; ++j)
      h[cl.integral_row(j)] = z[pl.integral_col(j)] - beta * quad[j];
  }
  if (problem_.n_b > 0) {
    const Eigen::VectorXd e = endpoint_inputs(z);
    const Eigen::VectorXd b = evaluate(problem_.events,
                                       std::span<const double>(e.data(),
                                                               static_cast<size_t>(e.size())));
    for (int i = 0; i < problem_.n_b; ++i) h[constraint_.event_row(i)] = b[i];
  }
  return h;
}

Eigen::VectorXd Transcription::jacobian_values(const Eigen::VectorXd& z) const {
  std::unordered_map<std::pair<Index, Index>, Index, PairHash> slot;
  slot.reserve(jac_pattern_.size() * 2);
  for (size_t k = 0; k < jac_pattern_.size(); ++k)
    slot.emplace(jac_pattern_[k], static_cast<Index>(k));
  Eigen::VectorXd vals = Eigen::VectorXd::Zero(static_cast<Index>(jac_pattern_.size()));
  auto add = [&](Index row, Index col, double v) {
    vals[slot.at({row, col})] += v;
  };

  Eigen::VectorXd x;
  std::vector<double> fval;
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pm = mesh_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    const auto& cl = constraint_.phases[static_cast<size_t>(p)];
    const auto& pat = pattern_.phases[static_cast<size_t>(p)];
    const auto& offsets = interval_offsets_[static_cast<size_t>(p)];
    const double beta = 0.5 * (z[pl.tf_col()] - z[pl.t0_col()]);

    for (int k = 0; k < pm.interval_count(); ++k) {
      const auto& basis = lgr_basis(pm.degrees[static_cast<size_t>(k)]);
      const double width = pm.breakpoints[static_cast<size_t>(k) + 1] -
                           pm.breakpoints[static_cast<size_t>(k)];
      const double dscale = 2.0 / width;
      const Index off = offsets[static_cast<size_t>(k)];
      const int nk = basis.degree;

      for (Index i = 0; i < nk; ++i) {
        const Index point = off + i;
        const double ti = tau_[static_cast<size_t>(p)][point];
        point_inputs(z, p, point, x);
        const std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));

        // Differentiation-matrix block.
        for (int m = 0; m < ph.n_y; ++m)
          for (Index j = 0; j <= nk; ++j)
            add(cl.defect_row(m, point), pl.state_col(m, off + j), dscale * basis.diff(i, j));

        // -beta * da/dv plus the +-a/2 time terms.
        detail::eval_checked<double>(ph.dynamics, xs, fval);
        for (int m = 0; m < ph.n_y; ++m) {
          add(cl.defect_row(m, point), pl.t0_col(), 0.5 * fval[static_cast<size_t>(m)]);
          add(cl.defect_row(m, point), pl.tf_col(), -0.5 * fval[static_cast<size_t>(m)]);
        }
        for (int in : pat.dynamics.active_inputs()) {
          const Eigen::VectorXd da = first_partial(ph.dynamics, xs, in, kernel_);
          for (int m = 0; m < ph.n_y; ++m) {
            if (!pat.dynamics.depends(m, in)) continue;
            for (const auto& [col, fac] : point_input_columns(pl, decision_, in, point, ti))
              add(cl.defect_row(m, point), col, -beta * fac * da[m]);
          }
        }
        if (ph.n_c > 0) {
          for (int in : pat.path.active_inputs()) {
            const Eigen::VectorXd dc = first_partial(ph.path_fn, xs, in, kernel_);
            for (int m = 0; m < ph.n_c; ++m) {
              if (!pat.path.depends(m, in)) continue;
              for (const auto& [col, fac] : point_input_columns(pl, decision_, in, point, ti))
                add(cl.path_row(m, point), col, fac * dc[m]);
            }
          }
        }
        if (ph.n_q > 0) {
          const double wi = 0.5 * width * basis.weights[i];
          detail::eval_checked<double>(ph.integrand, xs, fval);
          for (int j = 0; j < ph.n_q; ++j) {
            add(cl.integral_row(j), pl.t0_col(), 0.5 * wi * fval[static_cast<size_t>(j)]);
            add(cl.integral_row(j), pl.tf_col(), -0.5 * wi * fval[static_cast<size_t>(j)]);
          }
          for (int in : pat.integrand.active_inputs()) {
            const Eigen::VectorXd dg = first_partial(ph.integrand, xs, in, kernel_);
            for (int j = 0; j < ph.n_q; ++j) {
              if (!pat.integrand.depends(j, in)) continue;
              for (const auto& [col, fac] : point_input_columns(pl, decision_, in, point, ti))
                add(cl.integral_row(j), col, -beta * wi * fac * dg[j]);
            }
          }
        }
      }
    }
    for (int j = 0; j < ph.n_q; ++j) add(cl.integral_row(j), pl.integral_col(j), 1.0);
  }

  if (problem_.n_b > 0) {
    const Eigen::VectorXd e = endpoint_inputs(z);
    const std::span<const double> es(e.data(), static_cast<size_t>(e.size()));
    const std::vector<Index> cols = endpoint_columns(problem_, decision_);
    for (int in : pattern_.events.active_inputs()) {
      const Eigen::VectorXd db = first_partial(problem_.events, es, in, kernel_);
      for (int m = 0; m < problem_.n_b; ++m) {
        if (!pattern_.events.depends(m, in)) continue;
        add(constraint_.event_row(m), cols[static_cast<size_t>(in)], db[m]);
      }
    }
  }
  return vals;
}

Eigen::VectorXd Transcription::hessian_values(const Eigen::VectorXd& z,
                                              const Eigen::VectorXd& multipliers,
                                              double objective_factor) const {
  std::unordered_map<std::pair<Index, Index>, Index, PairHash> slot;
  slot.reserve(hess_pattern_.size() * 2);
  for (size_t k = 0; k < hess_pattern_.size(); ++k)
    slot.emplace(hess_pattern_[k], static_cast<Index>(k));
  Eigen::VectorXd vals = Eigen::VectorXd::Zero(static_cast<Index>(hess_pattern_.size()));
  auto add = [&](Index a, Index b, double v) { vals[slot.at(canon(a, b))] += v; };

  Eigen::VectorXd x;
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pm = mesh_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    const auto& cl = constraint_.phases[static_cast<size_t>(p)];
    const auto& pat = pattern_.phases[static_cast<size_t>(p)];
    const auto& offsets = interval_offsets_[static_cast<size_t>(p)];
    const double beta = 0.5 * (z[pl.tf_col()] - z[pl.t0_col()]);

    for (int k = 0; k < pm.interval_count(); ++k) {
      const auto& basis = lgr_basis(pm.degrees[static_cast<size_t>(k)]);
      const double width = pm.breakpoints[static_cast<size_t>(k) + 1] -
                           pm.breakpoints[static_cast<size_t>(k)];
      const Index off = offsets[static_cast<size_t>(k)];
      const int nk = basis.degree;

      for (Index i = 0; i < nk; ++i) {
        const Index point = off + i;
        const double ti = tau_[static_cast<size_t>(p)][point];
        point_inputs(z, p, point, x);
        const std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
        const double wi = 0.5 * width * basis.weights[i];

        // pure_scale multiplies the lambda-weighted second-derivative block;
        // cross_scale (nonzero for the beta-carrying defect and integral
        // rows) adds the terms from d beta/d t0 = -1/2, d beta/d tf = +1/2.
        auto accumulate = [&](const KernelFunction& fn, const FunctionSparsity& fs,
                              const Eigen::VectorXd& lam, double pure_scale,
                              double cross_scale) {
          if (lam.isZero(0.0)) return;
          for (const auto& [w1, w2] : fs.second) {
            const Eigen::VectorXd d2 = second_partial(fn, xs, w1, w2, kernel_);
            const double lv = pure_scale * lam.dot(d2);
            if (lv == 0.0) continue;
            const ColSet c1 = point_input_columns(pl, decision_, w1, point, ti);
            const ColSet c2 = point_input_columns(pl, decision_, w2, point, ti);
            if (w1 == w2) {
              for (size_t a = 0; a < c1.size(); ++a)
                for (size_t b = a; b < c1.size(); ++b)
                  add(c1[a].first, c1[b].first, lv * c1[a].second * c1[b].second);
            } else {
              for (const auto& [ca, fa] : c1)
                for (const auto& [cb, fb] : c2) add(ca, cb, lv * fa * fb);
            }
          }
          if (cross_scale == 0.0) return;
          for (int in : fs.active_inputs()) {
            const Eigen::VectorXd d1 = first_partial(fn, xs, in, kernel_);
            const double bare = cross_scale * lam.dot(d1);
            if (bare == 0.0) continue;
            for (const auto& [col, fac] : point_input_columns(pl, decision_, in, point, ti)) {
              const double vt0 = 0.5 * bare * fac;   // -dbeta/dt0 * bare
              const double vtf = -0.5 * bare * fac;  // -dbeta/dtf * bare
              add(pl.t0_col(), col, col == pl.t0_col() ? 2.0 * vt0 : vt0);
              add(pl.tf_col(), col, col == pl.tf_col() ? 2.0 * vtf : vtf);
            }
          }
        };

        Eigen::VectorXd lam_dyn(ph.n_y);
        for (int m = 0; m < ph.n_y; ++m) lam_dyn[m] = multipliers[cl.defect_row(m, point)];
        accumulate(ph.dynamics, pat.dynamics, lam_dyn, -beta, 1.0);

        if (ph.n_c > 0) {
          Eigen::VectorXd lam_path(ph.n_c);
          for (int m = 0; m < ph.n_c; ++m) lam_path[m] = multipliers[cl.path_row(m, point)];
          accumulate(ph.path_fn, pat.path, lam_path, 1.0, 0.0);
        }
        if (ph.n_q > 0) {
          Eigen::VectorXd lam_q(ph.n_q);
          for (int j = 0; j < ph.n_q; ++j) lam_q[j] = multipliers[cl.integral_row(j)];
          accumulate(ph.integrand, pat.integrand, lam_q, -beta * wi, wi);
        }
      }
    }
  }

  // Endpoint block: objective plus events.
  const Eigen::VectorXd e = endpoint_inputs(z);
  const std::span<const double> es(e.data(), static_cast<size_t>(e.size()));
  const std::vector<Index> cols = endpoint_columns(problem_, decision_);
  for (const auto& [l1, l2] : pattern_.objective.second) {
    const double v = objective_factor * second_partial(problem_.objective, es, l1, l2, kernel_)[0];
    if (v != 0.0) add(cols[static_cast<size_t>(l1)], cols[static_cast<size_t>(l2)], v);
  }
  if (problem_.n_b > 0) {
    Eigen::VectorXd lam_b(problem_.n_b);
    for (int m = 0; m < problem_.n_b; ++m) lam_b[m] = multipliers[constraint_.event_row(m)];
    if (!lam_b.isZero(0.0)) {
      for (const auto& [l1, l2] : pattern_.events.second) {
        const Eigen::VectorXd d2 = second_partial(problem_.events, es, l1, l2, kernel_);
        const double v = lam_b.dot(d2);
        if (v != 0.0) add(cols[static_cast<size_t>(l1)], cols[static_cast<size_t>(l2)], v);
      }
    }
  }
  return vals;
}

namespace {

double interp_table(const Eigen::VectorXd& times, const Eigen::VectorXd& values, double t) {
  const Index n = times.size();
  if (n == 0) return 0.0;
  if (t <= times[0]) return values[0];
  if (t >= times[n - 1]) return values[n - 1];
  Index hi = 1;
  while (times[hi] < t) ++hi;
  const double f = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
  return values[hi - 1] + f * (values[hi] - values[hi - 1]);
}

double clamp_into(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

Eigen::VectorXd Transcription::initial_guess() const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(decision_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    const auto& g = ph.guess;

    const double t0 = clamp_into(g.time[0], ph.t0.lower, ph.t0.upper);
    double tf = clamp_into(g.time[g.time.size() - 1], ph.tf.lower, ph.tf.upper);
    if (tf <= t0) tf = t0 + 1.0;
    z[pl.t0_col()] = t0;
    z[pl.tf_col()] = tf;

    const Eigen::VectorXd& tau = tau_[static_cast<size_t>(p)];
    for (Index gp = 0; gp < pl.n_grid; ++gp) {
      const double t = map_tau_to_time(tau[gp], t0, tf);
      for (int m = 0; m < ph.n_y; ++m)
        z[pl.state_col(m, gp)] = interp_table(g.time, g.state.col(m), t);
    }
    for (Index i = 0; i < pl.n_colloc; ++i) {
      const double t = map_tau_to_time(tau[i], t0, tf);
      for (int c = 0; c < ph.n_u; ++c)
        z[pl.control_col(c, i)] = interp_table(g.time, g.control.col(c), t);
    }
    // Integral guess: trapezoid of the integrand along the guess table.
    if (ph.n_q > 0) {
      Eigen::VectorXd q = Eigen::VectorXd::Zero(ph.n_q);
      try {
        Eigen::VectorXd x(ph.point_inputs(problem_.n_s));
        std::vector<double> gv, gv_prev;
        for (Index r = 0; r < g.time.size(); ++r) {
          x.setZero();
          for (int m = 0; m < ph.n_y; ++m) x[m] = g.state(r, m);
          for (int c = 0; c < ph.n_u; ++c) x[ph.n_y + c] = g.control(r, c);
          x[ph.n_y + ph.n_u] = g.time[r];
          if (problem_.n_s > 0 && problem_.static_guess.size() == problem_.n_s)
            x.tail(problem_.n_s) = problem_.static_guess;
          detail::eval_checked<double>(
              ph.integrand, std::span<const double>(x.data(), static_cast<size_t>(x.size())), gv);
          if (r > 0) {
            const double dt = g.time[r] - g.time[r - 1];
            for (int j = 0; j < ph.n_q; ++j)
              q[j] += 0.5 * dt * (gv[static_cast<size_t>(j)] + gv_prev[static_cast<size_t>(j)]);
          }
          gv_prev = gv;
        }
      } catch (const EvaluationError&) {
        q.setZero();
      }
      for (int j = 0; j < ph.n_q; ++j)
        z[pl.integral_col(j)] = clamp_into(q[j], ph.integrals.lower[j], ph.integrals.upper[j]);
    }
  }
  if (problem_.n_s > 0) {
    for (int i = 0; i < problem_.n_s; ++i) {
      const double v = problem_.static_guess.size() == problem_.n_s ? problem_.static_guess[i] : 0.0;
      z[decision_.static_col(i)] =
          clamp_into(v, problem_.static_params.lower[i], problem_.static_params.upper[i]);
    }
  }
  return z;
}

Eigen::VectorXd Transcription::pack_solution(const Solution& solution) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(decision_.total);
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    const auto& sol = solution.phases[static_cast<size_t>(p)];
    const auto& old_mesh = sol.mesh;
    const auto old_offsets = mesh_interval_offsets(old_mesh);
    z[pl.t0_col()] = sol.t0;
    z[pl.tf_col()] = sol.tf;

    auto old_interval = [&](double tau) {
      int k = 0;
      while (k + 1 < old_mesh.interval_count() &&
             tau > old_mesh.breakpoints[static_cast<size_t>(k) + 1])
        ++k;
      return k;
    };

    const Eigen::VectorXd& tau = tau_[static_cast<size_t>(p)];
    for (Index gp = 0; gp < pl.n_grid; ++gp) {
      const double t = tau[gp];
      const int k = old_interval(t);
      const int nk = old_mesh.degrees[static_cast<size_t>(k)];
      const Index off = old_offsets[static_cast<size_t>(k)];
      Eigen::VectorXd support(nk + 1);
      support = sol.tau.segment(off, nk + 1);
      const Eigen::VectorXd bw = barycentric_weights(support);
      const Eigen::VectorXd row =
          barycentric_interpolate(support, bw, sol.state.middleRows(off, nk + 1), t);
      for (int m = 0; m < ph.n_y; ++m) z[pl.state_col(m, gp)] = row[m];
    }
    if (ph.n_u > 0) {
      for (Index i = 0; i < pl.n_colloc; ++i) {
        const double t = tau[i];
        const int k = old_interval(t);
        const int nk = old_mesh.degrees[static_cast<size_t>(k)];
        const Index off = old_offsets[static_cast<size_t>(k)];
        const Eigen::VectorXd support = sol.tau.segment(off, nk);
        const Eigen::VectorXd bw = barycentric_weights(support);
        const Eigen::VectorXd row =
            barycentric_interpolate(support, bw, sol.control.middleRows(off, nk), t);
        for (int c = 0; c < ph.n_u; ++c) z[pl.control_col(c, i)] = row[c];
      }
    }
    for (int j = 0; j < ph.n_q; ++j) z[pl.integral_col(j)] = sol.integrals[j];
  }
  for (int i = 0; i < problem_.n_s; ++i)
    z[decision_.static_col(i)] = solution.static_params[i];
  return z;
}

Solution Transcription::extract_solution(const Eigen::VectorXd& z) const {
  Solution sol;
  sol.problem = problem_.name;
  sol.cost = objective(z);
  sol.static_params.resize(problem_.n_s);
  for (int i = 0; i < problem_.n_s; ++i) sol.static_params[i] = z[decision_.static_col(i)];
  for (int p = 0; p < problem_.phase_count(); ++p) {
    const auto& ph = problem_.phases[static_cast<size_t>(p)];
    const auto& pl = decision_.phases[static_cast<size_t>(p)];
    PhaseSolution ps;
    ps.mesh = mesh_.phases[static_cast<size_t>(p)];
    ps.tau = tau_[static_cast<size_t>(p)];
    ps.t0 = z[pl.t0_col()];
    ps.tf = z[pl.tf_col()];
    ps.state.resize(pl.n_grid, ph.n_y);
    for (int m = 0; m < ph.n_y; ++m)
      for (Index g = 0; g < pl.n_grid; ++g) ps.state(g, m) = z[pl.state_col(m, g)];
    ps.control.resize(pl.n_colloc, ph.n_u);
    for (int c = 0; c < ph.n_u; ++c)
      for (Index i = 0; i < pl.n_colloc; ++i) ps.control(i, c) = z[pl.control_col(c, i)];
    ps.integrals.resize(ph.n_q);
    for (int j = 0; j < ph.n_q; ++j) ps.integrals[j] = z[pl.integral_col(j)];
    sol.phases.push_back(std::move(ps));
  }
  return sol;
}

NLPInstance Transcription::make_nlp() const {
  NLPInstance nlp;
  nlp.n = decision_.total;
  nlp.m = constraint_.total;
  nlp.x_lower = variable_lower();
  nlp.x_upper = variable_upper();
  nlp.c_lower = constraint_lower();
  nlp.c_upper = constraint_upper();
  nlp.objective = [this](const Eigen::VectorXd& z) { return objective(z); };
  nlp.gradient = [this](const Eigen::VectorXd& z) { return objective_gradient(z); };
  nlp.constraints = [this](const Eigen::VectorXd& z) { return constraints(z); };
  nlp.jacobian_pattern = jac_pattern_;
  nlp.jacobian_values = [this](const Eigen::VectorXd& z) { return jacobian_values(z); };
  nlp.hessian_pattern = hess_pattern_;
  nlp.hessian_values = [this](const Eigen::VectorXd& z, const Eigen::VectorXd& lam,
                              double of) { return hessian_values(z, lam, of); };
  return nlp;
}

void expand_scales(const ProblemScales& scales, const ProblemDefinition& problem,
                   const DecisionLayout& decision, const ConstraintLayout& constraint,
                   Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::VectorXd& row_scale) {
  v = Eigen::VectorXd::Ones(decision.total);
  r = Eigen::VectorXd::Zero(decision.total);
  row_scale = Eigen::VectorXd::Ones(constraint.total);
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& pl = decision.phases[static_cast<size_t>(p)];
    const auto& cl = constraint.phases[static_cast<size_t>(p)];
    const auto& ps = scales.phases[static_cast<size_t>(p)];
    for (int m = 0; m < pl.n_y; ++m) {
      for (Index g = 0; g < pl.n_grid; ++g) {
        v[pl.state_col(m, g)] = ps.state_v[m];
        r[pl.state_col(m, g)] = ps.state_r[m];
      }
      for (Index i = 0; i < pl.n_colloc; ++i) row_scale[cl.defect_row(m, i)] = ps.defect_row[m];
    }
    for (int c = 0; c < pl.n_u; ++c) {
      for (Index i = 0; i < pl.n_colloc; ++i) {
        v[pl.control_col(c, i)] = ps.control_v[c];
        r[pl.control_col(c, i)] = ps.control_r[c];
      }
    }
    for (int j = 0; j < pl.n_q; ++j) {
      v[pl.integral_col(j)] = ps.integral_v[j];
      r[pl.integral_col(j)] = ps.integral_r[j];
      row_scale[cl.integral_row(j)] = ps.integral_row[j];
    }
    v[pl.t0_col()] = ps.t0_v;
    r[pl.t0_col()] = ps.t0_r;
    v[pl.tf_col()] = ps.tf_v;
    r[pl.tf_col()] = ps.tf_r;
    for (int m = 0; m < pl.n_c; ++m)
      for (Index i = 0; i < pl.n_colloc; ++i) row_scale[cl.path_row(m, i)] = ps.path_row[m];
  }
  for (int i = 0; i < problem.n_s; ++i) {
    v[decision.static_col(i)] = scales.static_v[i];
    r[decision.static_col(i)] = scales.static_r[i];
  }
  for (int i = 0; i < problem.n_b; ++i)
    row_scale[constraint.event_row(i)] = scales.event_row[i];
}

ScaledNLP make_scaled_nlp(const Transcription& transcription, const ProblemScales& scales) {
  ScaledNLP scaled;
  NLPInstance inner = transcription.make_nlp();
  expand_scales(scales, transcription.problem(), transcription.decision_layout(),
                transcription.constraint_layout(), scaled.v, scaled.r, scaled.row_scale);
  scaled.objective_scale = scales.objective_scale;

  const Eigen::VectorXd v = scaled.v, r = scaled.r, rs = scaled.row_scale;
  const double w = scaled.objective_scale;
  auto unscale = [v, r](const Eigen::VectorXd& zs) -> Eigen::VectorXd {
    return (zs - r).cwiseQuotient(v);
  };

  NLPInstance& nlp = scaled.nlp;
  nlp.n = inner.n;
  nlp.m = inner.m;
  nlp.x_lower = v.cwiseProduct(inner.x_lower) + r;
  nlp.x_upper = v.cwiseProduct(inner.x_upper) + r;
  nlp.c_lower = rs.cwiseProduct(inner.c_lower);
  nlp.c_upper = rs.cwiseProduct(inner.c_upper);
  nlp.objective = [inner, unscale, w](const Eigen::VectorXd& zs) {
    return w * inner.objective(unscale(zs));
  };
  nlp.gradient = [inner, unscale, v, w](const Eigen::VectorXd& zs) -> Eigen::VectorXd {
    return w * inner.gradient(unscale(zs)).cwiseQuotient(v);
  };
  nlp.constraints = [inner, unscale, rs](const Eigen::VectorXd& zs) -> Eigen::VectorXd {
    return rs.cwiseProduct(inner.constraints(unscale(zs)));
  };
  nlp.jacobian_pattern = inner.jacobian_pattern;
  Eigen::VectorXd jfac(static_cast<Index>(inner.jacobian_pattern.size()));
  for (size_t k = 0; k < inner.jacobian_pattern.size(); ++k) {
    const auto& [row, col] = inner.jacobian_pattern[k];
    jfac[static_cast<Index>(k)] = rs[row] / v[col];
  }
  nlp.jacobian_values = [inner, unscale, jfac](const Eigen::VectorXd& zs) -> Eigen::VectorXd {
    return jfac.cwiseProduct(inner.jacobian_values(unscale(zs)));
  };
  nlp.hessian_pattern = inner.hessian_pattern;
  Eigen::VectorXd hfac(static_cast<Index>(inner.hessian_pattern.size()));
  for (size_t k = 0; k < inner.hessian_pattern.size(); ++k) {
    const auto& [row, col] = inner.hessian_pattern[k];
    hfac[static_cast<Index>(k)] = 1.0 / (v[row] * v[col]);
  }
  nlp.hessian_values = [inner, unscale, rs, w, hfac](const Eigen::VectorXd& zs,
                                                     const Eigen::VectorXd& lam,
                                                     double of) -> Eigen::VectorXd {
    return hfac.cwiseProduct(
        inner.hessian_values(unscale(zs), rs.cwiseProduct(lam), of * w));
  };
  return scaled;
}

}  // namespace ocpkit
