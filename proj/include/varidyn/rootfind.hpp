#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"

namespace varidyn {

struct RootOptions {
  double seed = 1.0;        ///< starting guess / branch selector
  double abs_tol = 1e-13;   ///< residual target |f(x)|
  int max_iterations = 100;
  bool positive_only = false;  ///< restrict the search to x > 0
};

struct ScalarRoot {
  double x = 0.0;
  double slope = 0.0;  ///< exact f'(x) at the root, used to lift to duals
};

namespace detail {

template <typename F>
std::optional<double> try_eval(F& f, double x) {
  try {
    double v = f(x);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

template <typename DF>
ScalarRoot finish_root(double x, DF& df) {
  double slope = df(x);
  if (!std::isfinite(slope) || slope == 0.0)
    throw SolverError("root has vanishing or non-finite slope");
  return {x, slope};
}

}  // namespace detail

/// Solve f(x) = 0 for a scalar x. `f` may throw DomainError where it is not
/// defined (the admissible set is assumed to be an interval); `df` is the
/// exact derivative. Strategy: damped Newton from the seed; on stall, a
/// deterministic geometric ladder around the best point located so far finds
/// a sign change, refined by bisection and re-polished by Newton. The bracket
/// closest to the seed wins, which is how the caller selects a branch.
template <typename F, typename DF>
ScalarRoot solve_scalar_root(F&& f, DF&& df, const RootOptions& opt = {}) {
  auto feval = [&](double x) { return detail::try_eval(f, x); };

  if (opt.positive_only && !(opt.seed > 0.0))
    throw PreconditionError("positive root requested with nonpositive seed");

  double x = opt.seed;
  std::optional<double> fx = feval(x);
  double best_x = x;
  double best_f = fx ? std::fabs(*fx) : std::numeric_limits<double>::infinity();

  auto note = [&](double xx, double fxx) {
    if (std::fabs(fxx) < best_f) {
      best_f = std::fabs(fxx);
      best_x = xx;
    }
  };
  if (fx) note(x, *fx);

  // Phase 1: damped Newton.
  if (fx) {
    for (int it = 0; it < opt.max_iterations; ++it) {
      if (std::fabs(*fx) <= opt.abs_tol) return detail::finish_root(x, df);
      double d;
      try {
        d = df(x);
      } catch (const DomainError&) {
        break;
      }
      if (!std::isfinite(d) || d == 0.0) break;
      double step = *fx / d;
      double lambda = 1.0;
      double xn = x;
      std::optional<double> fn;
      bool improved = false;
      for (int h = 0; h < 40; ++h) {
        xn = x - lambda * step;
        if (!opt.positive_only || xn > 0.0) {
          fn = feval(xn);
          if (fn && std::fabs(*fn) < std::fabs(*fx)) {
            improved = true;
            break;
          }
        }
        lambda *= 0.5;
      }
      if (!improved) break;
      note(xn, *fn);
      bool machine_step = std::fabs(xn - x) <= 4e-16 * (1.0 + std::fabs(xn));
      x = xn;
      fx = fn;
      if (machine_step) break;  // x converged to machine precision
    }
    if (fx && std::fabs(*fx) <= opt.abs_tol) return detail::finish_root(x, df);
  }

  // Phase 2: geometric ladder around the best point, hunting a sign change.
  double center = std::isfinite(best_f) ? best_x : opt.seed;
  std::vector<double> ladder;
  if (opt.positive_only) {
    if (!(center > 0.0)) center = opt.seed;
    for (int j = -60; j <= 60; ++j)
      ladder.push_back(center * std::ldexp(1.0, j));
  } else {
    double span = std::max(1.0, std::fabs(center));
    ladder.push_back(center);
    for (int j = 0; j <= 52 && span * std::ldexp(1.0, j) < 1e300; ++j) {
      double off = span * std::ldexp(1.0, j);
      ladder.push_back(center - off);
      ladder.push_back(center + off);
    }
    std::sort(ladder.begin(), ladder.end());
  }

  std::vector<std::pair<double, double>> evaluated;  // (x, f(x))
  for (double pt : ladder) {
    auto v = feval(pt);
    if (!v) continue;
    if (std::fabs(*v) <= opt.abs_tol) return detail::finish_root(pt, df);
    evaluated.emplace_back(pt, *v);
  }

  double a = 0.0, b = 0.0, fa = 0.0, fb = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i + 1 < evaluated.size(); ++i) {
    auto [x0, f0] = evaluated[i];
    auto [x1, f1] = evaluated[i + 1];
    if ((f0 > 0.0) == (f1 > 0.0)) continue;
    double dist = std::min(std::fabs(x0 - opt.seed), std::fabs(x1 - opt.seed));
    if (dist < best_dist) {
      best_dist = dist;
      a = x0;
      b = x1;
      fa = f0;
      fb = f1;
      found = true;
    }
  }
  if (!found)
    throw NoBracketError("no sign change found on the search ladder");

  // Phase 3: bisection to a machine-tight bracket.
  for (int it = 0; it < 200; ++it) {
    double m = 0.5 * (a + b);
    if (!(m > a && m < b)) break;  // bracket exhausted at machine precision
    auto fm = feval(m);
    if (!fm)
      throw SolverError("function not evaluable inside a root bracket");
    if (std::fabs(*fm) <= opt.abs_tol) return detail::finish_root(m, df);
    if ((*fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = *fm;
    } else {
      b = m;
      fb = *fm;
    }
  }

  // Phase 4: the bracket is tight; polish with plain Newton and accept the
  // x-converged point even if the residual tolerance is unattainable
  // (steep slope): positional accuracy is what downstream lifting needs.
  x = std::fabs(fa) < std::fabs(fb) ? a : b;
  for (int it = 0; it < 8; ++it) {
    auto fv = feval(x);
    if (!fv) break;
    if (std::fabs(*fv) <= opt.abs_tol) return detail::finish_root(x, df);
    double d;
    try {
      d = df(x);
    } catch (const DomainError&) {
      break;
    }
    if (!std::isfinite(d) || d == 0.0) break;
    double xn = x - *fv / d;
    if (!(xn > a && xn < b)) break;
    if (xn == x) break;
    x = xn;
  }
  auto fv = feval(x);
  if (fv && std::fabs(*fv) <= 1e3 * opt.abs_tol)
    return detail::finish_root(x, df);
  if (b - a <= 4e-16 * (1.0 + std::min(std::fabs(a), std::fabs(b))))
    return detail::finish_root(0.5 * (a + b), df);
  throw NonConvergenceError("root refinement stalled before tolerance");
}

/// Promote a converged scalar root to dual level. With the exact primal
/// slope s, each chord iteration x <- x - f(x)/s increases by one the
/// derivative order through which x matches the exact implicit root, so
/// dual_order_v<T> iterations make every tangent slot of a T-valued x exact.
template <typename T, typename F>
T lift_root(F&& f, const ScalarRoot& root) {
  T x{root.x};
  for (int i = 0; i < dual_order_v<T>; ++i) x = x - f(x) / root.slope;
  return x;
}

}  // namespace varidyn
