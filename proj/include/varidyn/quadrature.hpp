#pragma once

#include <cmath>
#include <utility>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"

namespace varidyn {

struct QuadratureOptions {
  double abs_tol = 1e-11;
  int max_depth = 20;  ///< up to 2^max_depth sub-intervals
};

namespace detail {

/// Error control runs on the primal value; the Richardson-corrected panel is
/// returned in full dual arithmetic, so tangents converge along with values.
template <typename T, typename F>
T simpson_panel(F& f, double a, double m, double b, const T& fa, const T& fm,
                const T& fb, const T& whole, double tol, int depth,
                int max_depth) {
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  T flm = f(lm);
  T frm = f(rm);
  T left = ((m - a) / 6.0) * (fa + 4.0 * flm + fm);
  T right = ((b - m) / 6.0) * (fm + 4.0 * frm + fb);
  T refined = left + right;
  T delta = refined - whole;
  if (std::fabs(primal(delta)) <= 15.0 * tol)
    return refined + delta / 15.0;
  if (depth >= max_depth)
    throw QuadratureError("adaptive quadrature hit the subdivision cap");
  T l = simpson_panel(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1,
                      max_depth);
  T r = simpson_panel(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1,
                      max_depth);
  return l + r;
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b], templated over the scalar so
/// integrals of dual-valued integrands carry exact derivative information.
/// Reversed limits flip the sign; DomainError from the integrand propagates.
template <typename T, typename F>
T adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return T{0.0};
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }
  T fa = f(a);
  T fb = f(b);
  double m = 0.5 * (a + b);
  T fm = f(m);
  T whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
  T result = detail::simpson_panel(f, a, m, b, fa, fm, fb, whole, opt.abs_tol,
                                   0, opt.max_depth);
  return sign * result;
}

}  // namespace varidyn
