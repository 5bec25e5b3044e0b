#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"
#include "varidyn/fields.hpp"
#include "varidyn/integrate.hpp"
#include "varidyn/lagrangian.hpp"
#include "varidyn/orbit.hpp"
#include "varidyn/quadrature.hpp"
#include "varidyn/rootfind.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

struct JacobiOptions {
  /// Starting guess for the rescale-factor solve; selects the branch closest
  /// to it when several positive roots exist.
  double seed = 1.0;
  /// Residual target of the rescale solve: |G(x, x'/s) - E| <= tol * (1+|E|).
  double energy_tol = 1e-12;
  /// Admissible construction-time samples probed by the factory functions.
  int spot_checks = 20;
  /// Anchor of the ray antiderivative used by the inverse lift. The lift is
  /// a difference of two antiderivative values, so the anchor cancels; 0
  /// anchors at the per-point velocity norm, which drops the constant before
  /// any quadrature is done at all.
  double rho0 = 0.0;
};

/// Solve G(x, x'/s) = E for the positive rescale factor s. Throws
/// DegenerateInputError for a zero direction x' and DomainError when the
/// energy level is unreachable along the ray (kinetically forbidden region).
double solve_theta_prime(const EnergyFn& energy, double E, ConstSpan x,
                         ConstSpan xp, double seed = 1.0,
                         double energy_tol = 1e-12);

/// Fixed-energy path Lagrangian of a conservative system,
///
///   L_E(x, x') = [ L(x, x'/phi) + E ] * phi,   G(x, x'/phi) = E,  phi > 0,
///
/// where G is the energy function of L. The result is positively homogeneous
/// of degree one in x' (its own energy function vanishes identically), so it
/// determines unparametrized paths rather than motions.
class JacobiReducedLagrangian final
    : public LagrangianEval<JacobiReducedLagrangian> {
 public:
  JacobiReducedLagrangian(LagrangianPtr original, double E,
                          JacobiOptions opt = {});

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> xp, const T& t) const {
    (void)t;  // time-independent by construction
    T phi = theta_prime_t<T>(x, xp);
    std::vector<T> w(xp.size());
    for (std::size_t i = 0; i < xp.size(); ++i) w[i] = xp[i] / phi;
    return (original_->eval(x, w, T{0.0}) + T{E_}) * phi;
  }

  /// The rescale factor phi_E(x, x'), homogeneous of degree one in x'.
  template <typename T>
  T theta_prime_t(std::span<const T> x, std::span<const T> xp) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded inside a fixed-energy reduction");
    } else {
      ScalarRoot root = solve_primal(primal_vec(x), primal_vec(xp));
      auto residual = [&](const T& s) {
        std::vector<T> w(xp.size());
        for (std::size_t i = 0; i < xp.size(); ++i) w[i] = xp[i] / s;
        return energy_->eval(std::span<const T>(x), std::span<const T>(w),
                             T{0.0}) -
               T{E_};
      };
      return lift_root<T>(residual, root);
    }
  }

  double theta_prime(ConstSpan x, ConstSpan xp) const;

  const LagrangianPtr& original() const { return original_; }
  const EnergyPtr& energy() const { return energy_; }
  double energy_value() const { return E_; }

 private:
  ScalarRoot solve_primal(const Vec& x, const Vec& xp) const;

  LagrangianPtr original_;
  EnergyPtr energy_;
  double E_;
  JacobiOptions opt_;
};

struct JacobiReduction {
  LagrangianPtr original;
  double E = 0.0;
  std::shared_ptr<const JacobiReducedLagrangian> reduced;
};

/// Reduce a time-independent, non-homogeneous Lagrangian to its fixed-energy
/// path Lagrangian. Probes a few admissible sample states so unreachable
/// energy levels fail at construction rather than deep inside a caller.
JacobiReduction jacobi_reduce(LagrangianPtr original, double E,
                              const JacobiOptions& opt = {});

/// Evaluator for the ray antiderivative of an energy profile,
///
///   I(rho) = integral from rho0 to rho of G(x, c sigma) / sigma^2 dsigma,
///
/// at a fixed configuration point x and ray direction c, anchored so that
/// I(rho0) = 0. Both rho0 and every queried rho must be positive.
class AntiderivativeI {
 public:
  AntiderivativeI(EnergyPtr energy, Vec x, Vec c, double rho0,
                  QuadratureOptions quad = {});

  double operator()(double rho) const;

  double rho0() const { return rho0_; }
  const Vec& direction() const { return c_; }
  const Vec& point() const { return x_; }

 private:
  EnergyPtr energy_;
  Vec x_;
  Vec c_;
  double rho0_;
  QuadratureOptions quad_;
};

inline AntiderivativeI antiderivative_I(EnergyPtr energy, Vec x, Vec c,
                                        double rho0,
                                        QuadratureOptions quad = {}) {
  return AntiderivativeI(std::move(energy), std::move(x), std::move(c), rho0,
                         quad);
}

/// Lift of a homogeneous path Lagrangian to a time-parametrized one with an
/// assigned conserved energy profile:
///
///   L(x, v) = r [ I(c, r) - I(c, r/phi_E) ] + L_h(x, v) - E phi_E,
///
/// with r = sqrt(|g_ij v^i v^j|), c = v/r, I the ray antiderivative of G,
/// and phi_E > 0 solving G(x, v/phi_E) = E. The reference metric g defaults
/// to the identity; for an indefinite g the absolute value keeps r real away
/// from the null cone, where the lift is undefined. The anchor of I cancels
/// in the difference, so the result is anchor-independent.
class InverseJacobiLagrangian final
    : public LagrangianEval<InverseJacobiLagrangian> {
 public:
  InverseJacobiLagrangian(LagrangianPtr path, EnergyPtr energy, double E,
                          std::optional<SymTensorField> metric = std::nullopt,
                          JacobiOptions opt = {});

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> v, const T& t) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded inside a fixed-energy lift");
    } else {
      T r = velocity_norm_t<T>(x, v);
      T phi = theta_prime_t<T>(x, v);
      T tail;
      if (opt_.rho0 > 0.0) {
        // Anchored form: difference of two antiderivative values along the
        // unit ray c = v/r, each reparametrized onto [0, 1] so dual-valued
        // limits feed their tangents through the chain rule.
        std::vector<T> c(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i] / r;
        tail = r * (ray_integral<T>(x, c, r) - ray_integral<T>(x, c, r / phi));
      } else {
        // Anchor placed at r itself: the difference collapses to a single
        // integral of G(x, lambda v)/lambda^2 over lambda in [1/phi, 1].
        T lo = T{1.0} / phi;
        T range = T{1.0} - lo;
        auto f = [&](double s) {
          T lam = lo + range * s;
          std::vector<T> w(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] * lam;
          return energy_->eval(std::span<const T>(x), std::span<const T>(w),
                               T{0.0}) /
                 (lam * lam) * range;
        };
        tail = adaptive_simpson<T>(f, 0.0, 1.0, quad_);
      }
      return path_->eval(x, v, t) + tail - phi * T{E_};
    }
  }

  /// The rescale factor phi_E(x, v) of the assigned energy profile.
  template <typename T>
  T theta_prime_t(std::span<const T> x, std::span<const T> v) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded inside a fixed-energy lift");
    } else {
      ScalarRoot root = solve_primal(primal_vec(x), primal_vec(v));
      auto residual = [&](const T& s) {
        std::vector<T> w(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) w[i] = v[i] / s;
        return energy_->eval(std::span<const T>(x), std::span<const T>(w),
                             T{0.0}) -
               T{E_};
      };
      return lift_root<T>(residual, root);
    }
  }

  double theta_prime(ConstSpan x, ConstSpan v) const;

  const LagrangianPtr& path() const { return path_; }
  const EnergyPtr& energy() const { return energy_; }
  double energy_value() const { return E_; }
  const std::optional<SymTensorField>& metric() const { return metric_; }

 private:
  /// sqrt(|g_ij v^i v^j|); DegenerateInputError for zero velocity or a
  /// direction on the null cone of the reference metric.
  template <typename T>
  T velocity_norm_t(std::span<const T> x, std::span<const T> v) const {
    T gvv;
    double scale = 0.0;
    if (metric_) {
      MatT<T> g = metric_->eval<T>(x);
      gvv = quad_form(g, v, v);
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
          scale += std::fabs(primal(g(i, j)) * primal(v[i]) * primal(v[j]));
    } else {
      gvv = dot_product(v, v);
      scale = primal(gvv);
    }
    if (scale <= 0.0)
      throw DegenerateInputError(
          "fixed-energy lift is undefined at zero velocity");
    if (std::fabs(primal(gvv)) <= 1e-12 * scale)
      throw DegenerateInputError(
          "fixed-energy lift is undefined on the null cone of the reference "
          "metric");
    double sgn = primal(gvv) > 0.0 ? 1.0 : -1.0;
    return sqrt(T{sgn} * gvv);
  }

  /// I(c, R) with a dual-valued upper limit, anchored at opt_.rho0.
  template <typename T>
  T ray_integral(std::span<const T> x, const std::vector<T>& c,
                 const T& upper) const {
    T range = upper - T{opt_.rho0};
    auto f = [&](double s) {
      T sigma = T{opt_.rho0} + range * s;
      std::vector<T> w(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) w[i] = c[i] * sigma;
      return energy_->eval(std::span<const T>(x), std::span<const T>(w),
                           T{0.0}) /
             (sigma * sigma) * range;
    };
    return adaptive_simpson<T>(f, 0.0, 1.0, quad_);
  }

  ScalarRoot solve_primal(const Vec& x, const Vec& v) const;

  LagrangianPtr path_;
  EnergyPtr energy_;
  double E_;
  std::optional<SymTensorField> metric_;
  JacobiOptions opt_;
  QuadratureOptions quad_;
};

/// Build the fixed-energy lift and probe a few admissible sample states.
std::shared_ptr<const InverseJacobiLagrangian> inverse_jacobi(
    LagrangianPtr path, EnergyPtr energy, double E,
    std::optional<SymTensorField> metric = std::nullopt,
    const JacobiOptions& opt = {});

struct TimeReconstructOptions {
  /// Bound on the step-halving consistency estimate of the reconstructed
  /// times; a larger discrepancy raises UndersampledError.
  double time_check_tol = 1e-8;
  /// Bound on |G(q, v) - E| along the reconstructed motion.
  double energy_check_tol = 1e-8;
  /// Seed for the per-sample rescale solves.
  double seed = 1.0;
};

/// Rebuild the time parametrization along a fixed-energy path. The orbit must
/// sample the path uniformly in its parameter; velocities come from fourth-
/// order finite differences of the samples, the rescale factor is solved at
/// every sample, and time is its cumulative integral from t0. For a closed
/// orbit the result wraps around to the starting point, so its final node
/// time minus t0 is the full period.
Trajectory reconstruct_time(const JacobiReduction& red, const Orbit& orbit,
                            double t0, const TimeReconstructOptions& opt = {});

}  // namespace varidyn
