#pragma once

// Uniform first/second partial-derivative extraction over the three
// arithmetic kernels. Hyper-dual derivatives are exact for smooth functions
// (unit step), bicomplex uses a tiny step with no subtractive cancellation,
// and central finite differences work on plain real evaluations.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ocpkit/errors.hpp"
#include "ocpkit/kernels.hpp"

namespace ocpkit {

using Index = Eigen::Index;

enum class Kernel { hyper_dual, bicomplex, central_fd };

/// A problem function f: R^n -> R^m evaluable under every arithmetic kernel.
/// The output vector is pre-sized by the caller; validate() flags functions
/// that resize it.
struct KernelFunction {
  int n_in = 0;
  int n_out = 0;
  std::string name;
  std::function<void(std::span<const double>, std::vector<double>&)> real;
  std::function<void(std::span<const HyperDual>, std::vector<HyperDual>&)> hyper_dual;
  std::function<void(std::span<const BiComplex>, std::vector<BiComplex>&)> bicomplex;

  bool valid() const { return static_cast<bool>(real); }
};

/// Wraps a kernel-generic callable f(span<const T>, vector<T>&) into a
/// KernelFunction usable with all three derivative methods.
template <class F>
KernelFunction make_kernel_function(int n_in, int n_out, std::string name, F f) {
  KernelFunction kf;
  kf.n_in = n_in;
  kf.n_out = n_out;
  kf.name = std::move(name);
  kf.real = [f](std::span<const double> x, std::vector<double>& out) { f(x, out); };
  kf.hyper_dual = [f](std::span<const HyperDual> x, std::vector<HyperDual>& out) { f(x, out); };
  kf.bicomplex = [f](std::span<const BiComplex> x, std::vector<BiComplex>& out) { f(x, out); };
  return kf;
}

namespace detail {

template <class T>
void eval_checked(const KernelFunction& f, std::span<const T> x, std::vector<T>& out) {
  out.assign(static_cast<size_t>(f.n_out), T(0.0));
  if constexpr (std::is_same_v<T, double>) {
    f.real(x, out);
  } else if constexpr (std::is_same_v<T, HyperDual>) {
    f.hyper_dual(x, out);
  } else {
    f.bicomplex(x, out);
  }
  if (out.size() != static_cast<size_t>(f.n_out))
    throw EvaluationError(f.name + ": output length " + std::to_string(out.size()) +
                          " does not match declared " + std::to_string(f.n_out));
  for (size_t k = 0; k < out.size(); ++k) {
    if (!is_finite(out[k]))
      throw EvaluationError(f.name + ": non-finite output component " + std::to_string(k));
  }
}

inline std::vector<HyperDual> hd_point(std::span<const double> x) {
  return {x.begin(), x.end()};
}
inline std::vector<BiComplex> bc_point(std::span<const double> x) {
  return {x.begin(), x.end()};
}

}  // namespace detail

inline constexpr double kHyperDualStep = 1.0;
inline constexpr double kBiComplexStep = 1e-20;
/// Classical optimal base steps for O(1) functions: cbrt(eps) for first
/// order, eps^(1/4) for second order.
inline const double kCentralFdStep1 = std::cbrt(std::numeric_limits<double>::epsilon());
inline const double kCentralFdStep2 = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));

/// d f / d x_i via hyper-dual perturbation, exact for smooth f.
inline Eigen::VectorXd hd_first(const KernelFunction& f, std::span<const double> x, int i) {
  auto xs = detail::hd_point(x);
  xs[static_cast<size_t>(i)].e1 = kHyperDualStep;
  std::vector<HyperDual> out;
  detail::eval_checked<HyperDual>(f, xs, out);
  Eigen::VectorXd g(f.n_out);
  for (int k = 0; k < f.n_out; ++k) g[k] = out[static_cast<size_t>(k)].e1 / kHyperDualStep;
  return g;
}

/// d^2 f / d x_i d x_j via hyper-dual perturbation; symmetric in (i, j).
inline Eigen::VectorXd hd_second(const KernelFunction& f, std::span<const double> x, int i, int j) {
  auto xs = detail::hd_point(x);
  xs[static_cast<size_t>(i)].e1 = kHyperDualStep;
  xs[static_cast<size_t>(j)].e2 = kHyperDualStep;
  std::vector<HyperDual> out;
  detail::eval_checked<HyperDual>(f, xs, out);
  Eigen::VectorXd g(f.n_out);
  const double h2 = kHyperDualStep * kHyperDualStep;
  for (int k = 0; k < f.n_out; ++k) g[k] = out[static_cast<size_t>(k)].e12 / h2;
  return g;
}

inline Eigen::VectorXd bc_first(const KernelFunction& f, std::span<const double> x, int i) {
  auto xs = detail::bc_point(x);
  xs[static_cast<size_t>(i)].z1.imag(kBiComplexStep);
  std::vector<BiComplex> out;
  detail::eval_checked<BiComplex>(f, xs, out);
  Eigen::VectorXd g(f.n_out);
  for (int k = 0; k < f.n_out; ++k) g[k] = out[static_cast<size_t>(k)].im1() / kBiComplexStep;
  return g;
}

inline Eigen::VectorXd bc_second(const KernelFunction& f, std::span<const double> x, int i, int j) {
  auto xs = detail::bc_point(x);
  xs[static_cast<size_t>(i)].z1 += std::complex<double>(0.0, kBiComplexStep);
  xs[static_cast<size_t>(j)].z2 += std::complex<double>(kBiComplexStep, 0.0);
  std::vector<BiComplex> out;
  detail::eval_checked<BiComplex>(f, xs, out);
  Eigen::VectorXd g(f.n_out);
  const double h2 = kBiComplexStep * kBiComplexStep;
  for (int k = 0; k < f.n_out; ++k) g[k] = out[static_cast<size_t>(k)].im12() / h2;
  return g;
}

namespace detail {

inline Eigen::VectorXd fd_eval(const KernelFunction& f, std::vector<double>& x) {
  std::vector<double> out;
  eval_checked<double>(f, x, out);
  return Eigen::Map<Eigen::VectorXd>(out.data(), f.n_out);
}

}  // namespace detail

/// Central difference (f(x+h_i) - f(x-h_i)) / (2 h_i) with h_i = h (1 + |x_i|).
inline Eigen::VectorXd fd_first(const KernelFunction& f, std::span<const double> x, int i) {
  const double hi = kCentralFdStep1 * (1.0 + std::fabs(x[static_cast<size_t>(i)]));
  std::vector<double> xp(x.begin(), x.end());
  xp[static_cast<size_t>(i)] += hi;
  Eigen::VectorXd fp = detail::fd_eval(f, xp);
  xp[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] - hi;
  Eigen::VectorXd fm = detail::fd_eval(f, xp);
  return (fp - fm) / (2.0 * hi);
}

/// Four-point central stencil with denominator 4 h_i h_j.
inline Eigen::VectorXd fd_second(const KernelFunction& f, std::span<const double> x, int i, int j) {
  const auto si = static_cast<size_t>(i), sj = static_cast<size_t>(j);
  const double hi = kCentralFdStep2 * (1.0 + std::fabs(x[si]));
  const double hj = kCentralFdStep2 * (1.0 + std::fabs(x[sj]));
  std::vector<double> xp(x.begin(), x.end());
  auto at = [&](double di, double dj) {
    xp.assign(x.begin(), x.end());
    xp[si] += di;
    xp[sj] += dj;
    return detail::fd_eval(f, xp);
  };
  Eigen::VectorXd v = at(hi, hj) - at(hi, -hj) - at(-hi, hj) + at(-hi, -hj);
  return v / (4.0 * hi * hj);
}

inline Eigen::VectorXd first_partial(const KernelFunction& f, std::span<const double> x, int i,
                                     Kernel k) {
  switch (k) {
    case Kernel::hyper_dual: return hd_first(f, x, i);
    case Kernel::bicomplex: return bc_first(f, x, i);
    default: return fd_first(f, x, i);
  }
}

inline Eigen::VectorXd second_partial(const KernelFunction& f, std::span<const double> x, int i,
                                      int j, Kernel k) {
  switch (k) {
    case Kernel::hyper_dual: return hd_second(f, x, i, j);
    case Kernel::bicomplex: return bc_second(f, x, i, j);
    default: return fd_second(f, x, i, j);
  }
}

/// Plain evaluation with the real kernel.
inline Eigen::VectorXd evaluate(const KernelFunction& f, std::span<const double> x) {
  std::vector<double> out;
  detail::eval_checked<double>(f, x, out);
  return Eigen::Map<Eigen::VectorXd>(out.data(), f.n_out);
}

}  // namespace ocpkit
