#pragma once

// Perturbation arithmetic used to extract exact first and second partial
// derivatives from problem functions: hyper-dual numbers (nilpotent units)
// and bicomplex numbers (two commuting imaginary units). Plain doubles
// satisfy the same contract, so any function written against these types
// also evaluates in ordinary real arithmetic.

#include <cmath>
#include <complex>
#include <concepts>
#include <type_traits>

#include "ocpkit/errors.hpp"

namespace ocpkit {

// ---------------------------------------------------------------------------
// HyperDual: a + b e1 + c e2 + d e1e2 with e1^2 = e2^2 = 0, e1e2 = e2e1 != 0.
// ---------------------------------------------------------------------------

struct HyperDual {
  double re{0.0};
  double e1{0.0};
  double e2{0.0};
  double e12{0.0};

  constexpr HyperDual() = default;
  constexpr HyperDual(double real) : re(real) {}  // NOLINT: implicit by design
  constexpr HyperDual(double real, double de1, double de2, double de12)
      : re(real), e1(de1), e2(de2), e12(de12) {}

  constexpr HyperDual operator-() const { return {-re, -e1, -e2, -e12}; }

  constexpr HyperDual& operator+=(const HyperDual& o) {
    re += o.re; e1 += o.e1; e2 += o.e2; e12 += o.e12;
    return *this;
  }
  constexpr HyperDual& operator-=(const HyperDual& o) {
    re -= o.re; e1 -= o.e1; e2 -= o.e2; e12 -= o.e12;
    return *this;
  }
  constexpr HyperDual& operator*=(const HyperDual& o) {
    const double a = re, b = e1, c = e2, d = e12;
    re = a * o.re;
    e1 = a * o.e1 + b * o.re;
    e2 = a * o.e2 + c * o.re;
    e12 = a * o.e12 + d * o.re + b * o.e2 + c * o.e1;
    return *this;
  }
  HyperDual& operator/=(const HyperDual& o);
};

constexpr HyperDual operator+(HyperDual a, const HyperDual& b) { return a += b; }
constexpr HyperDual operator-(HyperDual a, const HyperDual& b) { return a -= b; }
constexpr HyperDual operator*(HyperDual a, const HyperDual& b) { return a *= b; }

// Comparisons act on the real part.
constexpr bool operator<(const HyperDual& a, const HyperDual& b) { return a.re < b.re; }
constexpr bool operator>(const HyperDual& a, const HyperDual& b) { return a.re > b.re; }
constexpr bool operator<=(const HyperDual& a, const HyperDual& b) { return a.re <= b.re; }
constexpr bool operator>=(const HyperDual& a, const HyperDual& b) { return a.re >= b.re; }

/// Chain rule for a smooth unary primitive: given f(a), f'(a), f''(a) at the
/// real part, lifts f to the hyper-dual argument.
inline HyperDual hd_chain(const HyperDual& x, double f0, double f1, double f2) {
  return {f0, f1 * x.e1, f1 * x.e2, f1 * x.e12 + f2 * x.e1 * x.e2};
}

inline HyperDual& HyperDual::operator/=(const HyperDual& o) {
  // Componentwise solve of q * o = *this; keeps the real part equal to plain
  // double division bit for bit.
  if (o.re == 0.0) throw SingularEvaluation();
  const double q0 = re / o.re;
  const double q1 = (e1 - q0 * o.e1) / o.re;
  const double q2 = (e2 - q0 * o.e2) / o.re;
  const double q3 = (e12 - q0 * o.e12 - q1 * o.e2 - q2 * o.e1) / o.re;
  re = q0; e1 = q1; e2 = q2; e12 = q3;
  return *this;
}
inline HyperDual operator/(HyperDual a, const HyperDual& b) { return a /= b; }

inline HyperDual sin(const HyperDual& x) {
  const double s = std::sin(x.re), c = std::cos(x.re);
  return hd_chain(x, s, c, -s);
}
inline HyperDual cos(const HyperDual& x) {
  const double s = std::sin(x.re), c = std::cos(x.re);
  return hd_chain(x, c, -s, -c);
}
inline HyperDual tan(const HyperDual& x) {
  const double t = std::tan(x.re), sec2 = 1.0 + t * t;
  return hd_chain(x, t, sec2, 2.0 * t * sec2);
}
inline HyperDual exp(const HyperDual& x) {
  const double e = std::exp(x.re);
  return hd_chain(x, e, e, e);
}
inline HyperDual log(const HyperDual& x) {
  const double inv = 1.0 / x.re;
  return hd_chain(x, std::log(x.re), inv, -inv * inv);
}
inline HyperDual sqrt(const HyperDual& x) {
  const double r = std::sqrt(x.re);
  return hd_chain(x, r, 0.5 / r, -0.25 / (r * x.re));
}
inline HyperDual pow(const HyperDual& x, double p) {
  const double f0 = std::pow(x.re, p);
  const double f1 = p * std::pow(x.re, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(x.re, p - 2.0);
  return hd_chain(x, f0, f1, f2);
}
inline HyperDual pow(const HyperDual& x, const HyperDual& y) { return exp(y * log(x)); }
inline HyperDual atan(const HyperDual& x) {
  const double d = 1.0 + x.re * x.re;
  return hd_chain(x, std::atan(x.re), 1.0 / d, -2.0 * x.re / (d * d));
}
inline HyperDual asin(const HyperDual& x) {
  const double d = 1.0 - x.re * x.re, s = std::sqrt(d);
  return hd_chain(x, std::asin(x.re), 1.0 / s, x.re / (d * s));
}
inline HyperDual acos(const HyperDual& x) {
  const double d = 1.0 - x.re * x.re, s = std::sqrt(d);
  return hd_chain(x, std::acos(x.re), -1.0 / s, -x.re / (d * s));
}

/// Kinks differentiate by the sign of the real part; ties take the left branch.
inline HyperDual abs(const HyperDual& x) { return x.re < 0.0 ? -x : x; }
inline HyperDual min(const HyperDual& a, const HyperDual& b) { return a.re <= b.re ? a : b; }
inline HyperDual max(const HyperDual& a, const HyperDual& b) { return a.re >= b.re ? a : b; }

// ---------------------------------------------------------------------------
// BiComplex: a + b i1 + c i2 + d i1i2 with i1^2 = i2^2 = -1, i1i2 = i2i1.
// Stored as two complex numbers in i1: value = z1 + z2 i2.
// ---------------------------------------------------------------------------

struct BiComplex {
  std::complex<double> z1{0.0, 0.0};  // a + b i1
  std::complex<double> z2{0.0, 0.0};  // c + d i1

  constexpr BiComplex() = default;
  constexpr BiComplex(double real) : z1(real) {}  // NOLINT: implicit by design
  constexpr BiComplex(double a, double b, double c, double d) : z1(a, b), z2(c, d) {}
  constexpr BiComplex(std::complex<double> w1, std::complex<double> w2) : z1(w1), z2(w2) {}

  double re() const { return z1.real(); }
  double im1() const { return z1.imag(); }
  double im2() const { return z2.real(); }
  double im12() const { return z2.imag(); }

  BiComplex operator-() const { return {-z1, -z2}; }

  BiComplex& operator+=(const BiComplex& o) { z1 += o.z1; z2 += o.z2; return *this; }
  BiComplex& operator-=(const BiComplex& o) { z1 -= o.z1; z2 -= o.z2; return *this; }
  BiComplex& operator*=(const BiComplex& o) {
    const std::complex<double> a = z1, b = z2;
    z1 = a * o.z1 - b * o.z2;
    z2 = a * o.z2 + b * o.z1;
    return *this;
  }
  BiComplex& operator/=(const BiComplex& o);
};

inline BiComplex operator+(BiComplex a, const BiComplex& b) { return a += b; }
inline BiComplex operator-(BiComplex a, const BiComplex& b) { return a -= b; }
inline BiComplex operator*(BiComplex a, const BiComplex& b) { return a *= b; }

inline bool operator<(const BiComplex& a, const BiComplex& b) { return a.re() < b.re(); }
inline bool operator>(const BiComplex& a, const BiComplex& b) { return a.re() > b.re(); }
inline bool operator<=(const BiComplex& a, const BiComplex& b) { return a.re() <= b.re(); }
inline bool operator>=(const BiComplex& a, const BiComplex& b) { return a.re() >= b.re(); }

/// Lifts a holomorphic f through the idempotent decomposition
/// zeta = (z1 - i z2) e+ + (z1 + i z2) e-, on which f acts componentwise.
template <class F>
inline BiComplex bc_map(const BiComplex& x, F f) {
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> u = f(x.z1 - i * x.z2);
  const std::complex<double> v = f(x.z1 + i * x.z2);
  return {0.5 * (u + v), 0.5 * i * (u - v)};
}

inline BiComplex& BiComplex::operator/=(const BiComplex& o) {
  if (o.re() == 0.0) throw SingularEvaluation();
  if (o.z1.imag() == 0.0 && o.z2 == std::complex<double>(0.0, 0.0)) {
    z1 /= o.z1.real();
    z2 /= o.z1.real();
    return *this;
  }
  // 2x2 complex solve of q1 o1 - q2 o2 = z1, q1 o2 + q2 o1 = z2.
  const std::complex<double> det = o.z1 * o.z1 + o.z2 * o.z2;
  const std::complex<double> q1 = (z1 * o.z1 + z2 * o.z2) / det;
  const std::complex<double> q2 = (z2 * o.z1 - z1 * o.z2) / det;
  z1 = q1;
  z2 = q2;
  return *this;
}
inline BiComplex operator/(BiComplex a, const BiComplex& b) { return a /= b; }

inline BiComplex sin(const BiComplex& x) { return bc_map(x, [](auto w) { return std::sin(w); }); }
inline BiComplex cos(const BiComplex& x) { return bc_map(x, [](auto w) { return std::cos(w); }); }
inline BiComplex tan(const BiComplex& x) { return bc_map(x, [](auto w) { return std::tan(w); }); }
inline BiComplex exp(const BiComplex& x) { return bc_map(x, [](auto w) { return std::exp(w); }); }
inline BiComplex log(const BiComplex& x) { return bc_map(x, [](auto w) { return std::log(w); }); }
inline BiComplex sqrt(const BiComplex& x) { return bc_map(x, [](auto w) { return std::sqrt(w); }); }
inline BiComplex pow(const BiComplex& x, double p) {
  return bc_map(x, [p](auto w) { return std::pow(w, p); });
}
inline BiComplex pow(const BiComplex& x, const BiComplex& y) { return exp(y * log(x)); }
inline BiComplex atan(const BiComplex& x) { return bc_map(x, [](auto w) { return std::atan(w); }); }
inline BiComplex asin(const BiComplex& x) { return bc_map(x, [](auto w) { return std::asin(w); }); }
inline BiComplex acos(const BiComplex& x) { return bc_map(x, [](auto w) { return std::acos(w); }); }

inline BiComplex abs(const BiComplex& x) { return x.re() < 0.0 ? -x : x; }
inline BiComplex min(const BiComplex& a, const BiComplex& b) { return a.re() <= b.re() ? a : b; }
inline BiComplex max(const BiComplex& a, const BiComplex& b) { return a.re() >= b.re() ? a : b; }

// ---------------------------------------------------------------------------
// atan2 for perturbation kernels: quadrant fixed from real parts (a constant
// shift, so derivatives are untouched), slope from the one-argument atan on
// whichever ratio stays well conditioned.
// ---------------------------------------------------------------------------

template <class T>
inline T kernel_atan2(const T& y, const T& x, double yre, double xre) {
  constexpr double pi = 3.14159265358979323846;
  if (std::abs(xre) >= std::abs(yre)) {
    T base = atan(y / x);
    if (xre >= 0.0) return base;
    return yre >= 0.0 ? base + T(pi) : base - T(pi);
  }
  T base = atan(x / y) * T(-1.0);
  return yre >= 0.0 ? base + T(0.5 * pi) : base - T(0.5 * pi);
}

inline HyperDual atan2(const HyperDual& y, const HyperDual& x) {
  return kernel_atan2(y, x, y.re, x.re);
}
inline BiComplex atan2(const BiComplex& y, const BiComplex& x) {
  return kernel_atan2(y, x, y.re(), x.re());
}

// ---------------------------------------------------------------------------
// Bring the std scalar functions into this namespace so unqualified calls in
// generic problem functions resolve for plain double as well.
// ---------------------------------------------------------------------------

using std::abs;
using std::acos;
using std::asin;
using std::atan;
using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::max;
using std::min;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

// ---------------------------------------------------------------------------
// Uniform real-part access and the kernel-scalar concept.
// ---------------------------------------------------------------------------

inline double real_part(double x) { return x; }
inline double real_part(const HyperDual& x) { return x.re; }
inline double real_part(const BiComplex& x) { return x.re(); }

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const HyperDual& x) {
  return std::isfinite(x.re) && std::isfinite(x.e1) && std::isfinite(x.e2) && std::isfinite(x.e12);
}
inline bool is_finite(const BiComplex& x) {
  return std::isfinite(x.z1.real()) && std::isfinite(x.z1.imag()) &&
         std::isfinite(x.z2.real()) && std::isfinite(x.z2.imag());
}

/// A scalar family problem functions can be written against: arithmetic,
/// elementary functions, comparison on the real part, construction from a
/// real constant. double, HyperDual and BiComplex all model it.
template <class T>
concept KernelScalar = requires(T a, T b) {
  { a + b } -> std::convertible_to<T>;
  { a - b } -> std::convertible_to<T>;
  { a * b } -> std::convertible_to<T>;
  { a / b } -> std::convertible_to<T>;
  { -a } -> std::convertible_to<T>;
  { a < b } -> std::convertible_to<bool>;
  { T(1.0) };
  { sin(a) } -> std::convertible_to<T>;
  { cos(a) } -> std::convertible_to<T>;
  { exp(a) } -> std::convertible_to<T>;
  { sqrt(a) } -> std::convertible_to<T>;
  { real_part(a) } -> std::convertible_to<double>;
};

}  // namespace ocpkit
