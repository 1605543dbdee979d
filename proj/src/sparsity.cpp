#include "ocpkit/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace ocpkit {

bool FunctionSparsity::depends(int out, int in) const {
  return std::binary_search(first.begin(), first.end(), std::make_pair(out, in));
}

std::vector<int> FunctionSparsity::active_inputs() const {
  std::set<int> ins;
  for (const auto& [out, in] : first) ins.insert(in);
  return {ins.begin(), ins.end()};
}

namespace {

void box_component(double lo, double hi, double guess, double& out_lo, double& out_hi) {
  const bool lo_finite = std::isfinite(lo), hi_finite = std::isfinite(hi);
  if (lo_finite && hi_finite && hi > lo) {
    out_lo = lo;
    out_hi = hi;
  } else if (lo_finite && hi_finite) {  // pinned variable
    out_lo = lo - 0.5;
    out_hi = lo + 0.5;
  } else {
    out_lo = guess - 1.0;
    out_hi = guess + 1.0;
  }
}

double guess_mid(const Eigen::VectorXd& column) {
  if (column.size() == 0) return 0.0;
  return column[column.size() / 2];
}

}  // namespace

void point_sampling_box(const ProblemDefinition& problem, int phase, Eigen::VectorXd& lower,
                        Eigen::VectorXd& upper) {
  const auto& ph = problem.phases[static_cast<size_t>(phase)];
  const int n = ph.point_inputs(problem.n_s);
  lower.resize(n);
  upper.resize(n);
  for (int i = 0; i < ph.n_y; ++i)
    box_component(ph.state.lower[i], ph.state.upper[i],
                  ph.guess.state.rows() ? guess_mid(ph.guess.state.col(i)) : 0.0, lower[i],
                  upper[i]);
  for (int i = 0; i < ph.n_u; ++i)
    box_component(ph.control.lower[i], ph.control.upper[i],
                  ph.guess.control.rows() ? guess_mid(ph.guess.control.col(i)) : 0.0,
                  lower[ph.n_y + i], upper[ph.n_y + i]);
  const int ti = ph.n_y + ph.n_u;
  box_component(ph.t0.lower, ph.tf.upper, guess_mid(ph.guess.time), lower[ti], upper[ti]);
  for (int i = 0; i < problem.n_s; ++i)
    box_component(problem.static_params.lower[i], problem.static_params.upper[i],
                  problem.static_guess.size() ? problem.static_guess[i] : 0.0, lower[ti + 1 + i],
                  upper[ti + 1 + i]);
}

void endpoint_sampling_box(const ProblemDefinition& problem, Eigen::VectorXd& lower,
                           Eigen::VectorXd& upper) {
  const int n = problem.endpoint_inputs();
  lower.resize(n);
  upper.resize(n);
  Index at = 0;
  for (const auto& ph : problem.phases) {
    const auto& gi = ph.initial_state_bounds();
    const auto& gf = ph.final_state_bounds();
    for (int i = 0; i < ph.n_y; ++i) {
      const double guess = ph.guess.state.rows() ? ph.guess.state(0, i) : 0.0;
      box_component(gi.lower[i], gi.upper[i], guess, lower[at + i], upper[at + i]);
    }
    box_component(ph.t0.lower, ph.t0.upper, ph.guess.time.size() ? ph.guess.time[0] : 0.0,
                  lower[at + ph.n_y], upper[at + ph.n_y]);
    for (int i = 0; i < ph.n_y; ++i) {
      const double guess =
          ph.guess.state.rows() ? ph.guess.state(ph.guess.state.rows() - 1, i) : 0.0;
      box_component(gf.lower[i], gf.upper[i], guess, lower[at + ph.n_y + 1 + i],
                    upper[at + ph.n_y + 1 + i]);
    }
    box_component(ph.tf.lower, ph.tf.upper,
                  ph.guess.time.size() ? ph.guess.time[ph.guess.time.size() - 1] : 1.0,
                  lower[at + 2 * ph.n_y + 1], upper[at + 2 * ph.n_y + 1]);
    for (int i = 0; i < ph.n_q; ++i)
      box_component(ph.integrals.lower[i], ph.integrals.upper[i], 0.0,
                    lower[at + 2 * ph.n_y + 2 + i], upper[at + 2 * ph.n_y + 2 + i]);
    at += endpoint_vector_length(ph);
  }
  for (int i = 0; i < problem.n_s; ++i)
    box_component(problem.static_params.lower[i], problem.static_params.upper[i],
                  problem.static_guess.size() ? problem.static_guess[i] : 0.0, lower[at + i],
                  upper[at + i]);
}

FunctionSparsity detect_function(const KernelFunction& fn, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, int sample_count,
                                 std::uint64_t seed) {
  FunctionSparsity pattern;
  pattern.n_in = fn.n_in;
  pattern.n_out = fn.n_out;
  if (!fn.valid() || fn.n_out == 0) return pattern;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::set<std::pair<int, int>> first, second;

  std::vector<HyperDual> x(static_cast<size_t>(fn.n_in));
  std::vector<HyperDual> out;
  const int max_draws = 3 * sample_count;
  int accepted = 0;
  for (int draw = 0; draw < max_draws && accepted < sample_count; ++draw) {
    Eigen::VectorXd sample(fn.n_in);
    for (int i = 0; i < fn.n_in; ++i) sample[i] = lower[i] + (upper[i] - lower[i]) * unit(rng);
    try {
      // One hyper-dual pass per unordered input pair: e1 on i and e2 on j
      // yields both first partials and the mixed second partial.
      for (int i = 0; i < fn.n_in; ++i) {
        for (int j = i; j < fn.n_in; ++j) {
          for (int k = 0; k < fn.n_in; ++k) x[static_cast<size_t>(k)] = HyperDual(sample[k]);
          x[static_cast<size_t>(i)].e1 = 1.0;
          x[static_cast<size_t>(j)].e2 = 1.0;
          detail::eval_checked<HyperDual>(fn, x, out);
          for (int m = 0; m < fn.n_out; ++m) {
            const auto& v = out[static_cast<size_t>(m)];
            if (v.e1 != 0.0) first.insert({m, i});
            if (v.e2 != 0.0) first.insert({m, j});
            if (v.e12 != 0.0) second.insert({i, j});
          }
        }
      }
      ++accepted;
    } catch (const EvaluationError&) {
      // retry at a fresh sample
    }
  }
  if (accepted < sample_count)
    throw EvaluationError(fn.name + ": dependency probing kept failing after " +
                          std::to_string(max_draws) + " sample draws");

  pattern.first.assign(first.begin(), first.end());
  pattern.second.assign(second.begin(), second.end());
  return pattern;
}

SparsityPattern detect(const ProblemDefinition& problem, const SparsityOptions& options) {
  SparsityPattern pattern;
  pattern.phases.resize(problem.phases.size());
  std::uint64_t salt = options.seed;
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    Eigen::VectorXd lower, upper;
    point_sampling_box(problem, p, lower, upper);
    auto& slot = pattern.phases[static_cast<size_t>(p)];
    slot.dynamics = detect_function(ph.dynamics, lower, upper, options.sample_count, salt + 1);
    if (ph.n_c > 0)
      slot.path = detect_function(ph.path_fn, lower, upper, options.sample_count, salt + 2);
    if (ph.n_q > 0)
      slot.integrand = detect_function(ph.integrand, lower, upper, options.sample_count, salt + 3);
    salt += 16;
  }
  Eigen::VectorXd lower, upper;
  endpoint_sampling_box(problem, lower, upper);
  pattern.objective =
      detect_function(problem.objective, lower, upper, options.sample_count, options.seed + 4096);
  if (problem.n_b > 0)
    pattern.events =
        detect_function(problem.events, lower, upper, options.sample_count, options.seed + 8192);
  return pattern;
}

std::string format_pattern(const std::vector<std::pair<Index, Index>>& entries) {
  std::ostringstream os;
  for (const auto& [row, col] : entries) os << row + 1 << ' ' << col + 1 << '\n';
  return os.str();
}

}  // namespace ocpkit
