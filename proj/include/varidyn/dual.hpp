#pragma once

#include <cmath>
#include <type_traits>

#include "varidyn/errors.hpp"

namespace varidyn {

/// Forward-mode dual number: `a` is the value, `b` the tangent slot of the
/// active derivative direction. Nesting (Dual<Dual<double>>, ...) yields
/// higher-order directional derivatives; one tangent slot per independent
/// variable of the active query, one nesting level per derivative order.
template <typename T>
struct Dual {
  T a{};
  T b{};

  Dual() = default;
  Dual(double x) : a(x), b() {}  // value promotion, tangent zero
  Dual(const T& value, const T& tangent) : a(value), b(tangent) {}
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;

template <typename T>
struct dual_order : std::integral_constant<int, 0> {};
template <typename T>
struct dual_order<Dual<T>>
    : std::integral_constant<int, dual_order<T>::value + 1> {};
template <typename T>
inline constexpr int dual_order_v = dual_order<T>::value;

/// Deepest nesting level supported by the virtual evaluation interfaces.
inline constexpr int kMaxDualOrder = 4;

inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
  return primal(x.a);
}

// ---------------------------------------------------------------- arithmetic

template <typename T>
Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
  return {x.a + y.a, x.b + y.b};
}
template <typename T>
Dual<T> operator+(const Dual<T>& x, double y) {
  return {x.a + y, x.b};
}
template <typename T>
Dual<T> operator+(double x, const Dual<T>& y) {
  return {x + y.a, y.b};
}

template <typename T>
Dual<T> operator-(const Dual<T>& x) {
  return {-x.a, -x.b};
}
template <typename T>
Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
  return {x.a - y.a, x.b - y.b};
}
template <typename T>
Dual<T> operator-(const Dual<T>& x, double y) {
  return {x.a - y, x.b};
}
template <typename T>
Dual<T> operator-(double x, const Dual<T>& y) {
  return {x - y.a, -y.b};
}

template <typename T>
Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a};
}
template <typename T>
Dual<T> operator*(const Dual<T>& x, double y) {
  return {x.a * y, x.b * y};
}
template <typename T>
Dual<T> operator*(double x, const Dual<T>& y) {
  return {x * y.a, x * y.b};
}

template <typename T>
Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  T q = x.a / y.a;
  return {q, (x.b - q * y.b) / y.a};
}
template <typename T>
Dual<T> operator/(const Dual<T>& x, double y) {
  return {x.a / y, x.b / y};
}
template <typename T>
Dual<T> operator/(double x, const Dual<T>& y) {
  T q = x / y.a;
  return {q, -(q * y.b) / y.a};
}

// ------------------------------------------------------------ math functions
//
// The double overloads live here too so that unqualified calls inside
// templated code resolve for every scalar in the tower. Domain violations
// throw DomainError instead of propagating NaN.

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }

inline double sqrt(double x) {
  if (!(x > 0.0)) throw DomainError("sqrt of nonpositive value");
  return std::sqrt(x);
}

inline double log(double x) {
  if (!(x > 0.0)) throw DomainError("log of nonpositive value");
  return std::log(x);
}

inline double abs(double x) { return std::fabs(x); }

template <typename T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.a), cos(x.a) * x.b};
}
template <typename T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.a), -(sin(x.a) * x.b)};
}
template <typename T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.a);
  return {e, e * x.b};
}
template <typename T>
Dual<T> log(const Dual<T>& x) {
  return {log(x.a), x.b / x.a};
}
template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.a);
  return {s, x.b / (s * 2.0)};
}
template <typename T>
Dual<T> abs(const Dual<T>& x) {
  // Tangent convention at 0: the + branch.
  return primal(x.a) < 0.0 ? -x : x;
}

/// x^n for integer n; valid for any base (negative exponent needs base != 0).
template <typename T>
T powi(const T& x, long n) {
  if (n < 0) {
    if (primal(x) == 0.0) throw DomainError("zero raised to a negative power");
    return 1.0 / powi(x, -n);
  }
  T r{1.0};
  T base = x;
  while (n > 0) {
    if (n & 1) r = r * base;
    base = base * base;
    n >>= 1;
  }
  return r;
}

inline bool is_integral_exponent(double p) {
  return std::nearbyint(p) == p && std::fabs(p) <= 512.0;
}

inline double pow(double x, double p) {
  if (is_integral_exponent(p)) return powi(x, static_cast<long>(p));
  if (!(x > 0.0)) throw DomainError("non-integer power of a nonpositive base");
  return std::pow(x, p);
}

template <typename T>
Dual<T> pow(const Dual<T>& x, double p) {
  if (is_integral_exponent(p)) return powi(x, static_cast<long>(p));
  if (!(primal(x.a) > 0.0))
    throw DomainError("non-integer power of a nonpositive base");
  return exp(log(x) * p);
}

template <typename T>
Dual<T> pow(const Dual<T>& x, const Dual<T>& p) {
  if (!(primal(x.a) > 0.0))
    throw DomainError("variable power of a nonpositive base");
  return exp(log(x) * p);
}

}  // namespace varidyn
