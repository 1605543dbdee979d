#include <cmath>
#include <random>

#include "ocpkit/transcription.hpp"

namespace ocpkit {

std::pair<double, double> variable_scale_shift(double lower, double upper) {
  if (std::isfinite(lower) && std::isfinite(upper)) {
    if (upper > lower) {
      const double v = 1.0 / (upper - lower);
      return {v, 0.5 - upper / (upper - lower)};
    }
    // Zero-width bound: unit scale, shift centers the pinned value.
    return {1.0, -lower};
  }
  return {1.0, 0.0};
}

namespace {

constexpr double kRowScaleFloor = 1e-8;
constexpr double kRowScaleCeil = 1e8;

void fill_variable_scales(const Bounds& bounds, Eigen::VectorXd& v, Eigen::VectorXd& r,
                          std::vector<std::string>* warnings, const std::string& what) {
  const Index n = bounds.size();
  v.resize(n);
  r.resize(n);
  for (Index i = 0; i < n; ++i) {
    std::tie(v[i], r[i]) = variable_scale_shift(bounds.lower[i], bounds.upper[i]);
    if (warnings && !(std::isfinite(bounds.lower[i]) && std::isfinite(bounds.upper[i])))
      warnings->push_back(what + " component " + std::to_string(i) +
                          " is unbounded; scaling falls back to identity");
  }
}

double clamp_row_scale(double avg_norm) {
  if (!(avg_norm > 0.0)) return kRowScaleCeil;
  return std::min(std::max(1.0 / avg_norm, kRowScaleFloor), kRowScaleCeil);
}

// Average norm over samples of the gradient taken with respect to the
// scaled inputs (component l divided by its variable scale).
Eigen::VectorXd sampled_row_scales(const KernelFunction& fn, const FunctionSparsity& pattern,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   const Eigen::VectorXd& input_v, int sample_count,
                                   std::uint64_t seed) {
  Eigen::MatrixXd norm_acc = Eigen::MatrixXd::Zero(fn.n_out, 1);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(fn.n_out);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto active = pattern.active_inputs();
  int accepted = 0;
  const int max_draws = 3 * sample_count;
  for (int draw = 0; draw < max_draws && accepted < sample_count; ++draw) {
    Eigen::VectorXd x(fn.n_in);
    for (int i = 0; i < fn.n_in; ++i) x[i] = lower[i] + (upper[i] - lower[i]) * unit(rng);
    const std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
    try {
      Eigen::MatrixXd grad2 = Eigen::MatrixXd::Zero(fn.n_out, 1);
      for (int in : active) {
        const Eigen::VectorXd g = hd_first(fn, xs, in);
        for (int m = 0; m < fn.n_out; ++m) {
          const double scaled = g[m] / input_v[in];
          grad2(m, 0) += scaled * scaled;
        }
      }
      for (int m = 0; m < fn.n_out; ++m) sums[m] += std::sqrt(grad2(m, 0));
      ++accepted;
    } catch (const EvaluationError&) {
    }
  }
  Eigen::VectorXd scales(fn.n_out);
  for (int m = 0; m < fn.n_out; ++m)
    scales[m] = accepted > 0 ? clamp_row_scale(sums[m] / accepted) : 1.0;
  return scales;
}

}  // namespace

ProblemScales identity_scales(const ProblemDefinition& problem) {
  ProblemScales scales;
  for (const auto& ph : problem.phases) {
    ProblemScales::PhaseScales ps;
    ps.state_v = Eigen::VectorXd::Ones(ph.n_y);
    ps.state_r = Eigen::VectorXd::Zero(ph.n_y);
    ps.control_v = Eigen::VectorXd::Ones(ph.n_u);
    ps.control_r = Eigen::VectorXd::Zero(ph.n_u);
    ps.integral_v = Eigen::VectorXd::Ones(ph.n_q);
    ps.integral_r = Eigen::VectorXd::Zero(ph.n_q);
    ps.defect_row = ps.state_v;
    ps.path_row = Eigen::VectorXd::Ones(ph.n_c);
    ps.integral_row = ps.integral_v;
    scales.phases.push_back(std::move(ps));
  }
  scales.static_v = Eigen::VectorXd::Ones(problem.n_s);
  scales.static_r = Eigen::VectorXd::Zero(problem.n_s);
  scales.event_row = Eigen::VectorXd::Ones(problem.n_b);
  return scales;
}

ProblemScales compute_scales(const ProblemDefinition& problem, const SparsityPattern& pattern,
                             const ScalingOptions& options) {
  ProblemScales scales = identity_scales(problem);
  fill_variable_scales(problem.static_params, scales.static_v, scales.static_r, &scales.warnings,
                       "static parameter");

  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    auto& ps = scales.phases[static_cast<size_t>(p)];
    fill_variable_scales(ph.state, ps.state_v, ps.state_r, &scales.warnings,
                         "phase " + std::to_string(p + 1) + " state");
    fill_variable_scales(ph.control, ps.control_v, ps.control_r, &scales.warnings,
                         "phase " + std::to_string(p + 1) + " control");
    fill_variable_scales(ph.integrals, ps.integral_v, ps.integral_r, nullptr, "");
    std::tie(ps.t0_v, ps.t0_r) = variable_scale_shift(ph.t0.lower, ph.t0.upper);
    std::tie(ps.tf_v, ps.tf_r) = variable_scale_shift(ph.tf.lower, ph.tf.upper);
    ps.defect_row = ps.state_v;
    ps.integral_row = ps.integral_v;

    if (ph.n_c > 0) {
      Eigen::VectorXd lower, upper;
      point_sampling_box(problem, p, lower, upper);
      Eigen::VectorXd input_v(ph.point_inputs(problem.n_s));
      for (int i = 0; i < ph.n_y; ++i) input_v[i] = ps.state_v[i];
      for (int i = 0; i < ph.n_u; ++i) input_v[ph.n_y + i] = ps.control_v[i];
      input_v[ph.n_y + ph.n_u] =
          variable_scale_shift(lower[ph.n_y + ph.n_u], upper[ph.n_y + ph.n_u]).first;
      for (int i = 0; i < problem.n_s; ++i)
        input_v[ph.n_y + ph.n_u + 1 + i] = scales.static_v[i];
      ps.path_row =
          sampled_row_scales(ph.path_fn, pattern.phases[static_cast<size_t>(p)].path, lower,
                             upper, input_v, options.sample_count, options.seed + 31 * p);
    }
  }

  // Endpoint-input scales for the objective and event sampling.
  Eigen::VectorXd lower, upper;
  endpoint_sampling_box(problem, lower, upper);
  Eigen::VectorXd input_v(problem.endpoint_inputs());
  Index at = 0;
  for (int p = 0; p < problem.phase_count(); ++p) {
    const auto& ph = problem.phases[static_cast<size_t>(p)];
    const auto& ps = scales.phases[static_cast<size_t>(p)];
    for (int i = 0; i < ph.n_y; ++i) input_v[at + i] = ps.state_v[i];
    input_v[at + ph.n_y] = ps.t0_v;
    for (int i = 0; i < ph.n_y; ++i) input_v[at + ph.n_y + 1 + i] = ps.state_v[i];
    input_v[at + 2 * ph.n_y + 1] = ps.tf_v;
    for (int i = 0; i < ph.n_q; ++i) input_v[at + 2 * ph.n_y + 2 + i] = ps.integral_v[i];
    at += endpoint_vector_length(ph);
  }
  for (int i = 0; i < problem.n_s; ++i) input_v[at + i] = scales.static_v[i];

  scales.objective_scale = sampled_row_scales(problem.objective, pattern.objective, lower, upper,
                                              input_v, options.sample_count,
                                              options.seed + 1001)[0];
  if (problem.n_b > 0)
    scales.event_row = sampled_row_scales(problem.events, pattern.events, lower, upper, input_v,
                                          options.sample_count, options.seed + 2002);
  return scales;
}

}  // namespace ocpkit
