#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "varidyn/integrate.hpp"
#include "varidyn/lagrangian.hpp"
#include "varidyn/quadrature.hpp"
#include "varidyn/rootfind.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// Controls for eliminating a cyclic coordinate and for the inverse lift.
struct RouthOptions {
  double seed = 1.0;            ///< starting guess for the eliminated velocity
  double momentum_tol = 1e-11;  ///< residual bound on the matched momentum
  int spot_checks = 20;         ///< sampled states for construction checks
  bool verify_cyclic = true;    ///< spot-check dL/dq at the eliminated slot
  double cyclic_tol = 1e-9;     ///< relative bound for the cyclicity check
  double cyclic_lo = -100.0;    ///< domain of a re-introduced coordinate
  double cyclic_hi = 100.0;
};

/// A Lagrangian with one cyclic coordinate eliminated at a fixed value p0 of
/// its conjugate momentum:
///
///   R(q, v, t) = L(q, v; w) - w p0,  where w solves dL/dw = p0.
///
/// The defining equation is solved once at the primal level; dual levels are
/// recovered by chord iterations against the exact primal slope, so the
/// derivatives of R stay exact through the supported depth.
class RouthReducedLagrangian final
    : public LagrangianEval<RouthReducedLagrangian> {
 public:
  RouthReducedLagrangian(LagrangianPtr original, std::size_t cyclic_index,
                         double p0, RouthOptions opt = {});

  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T& t) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded inside a cyclic reduction");
    } else {
      T w = cyclic_velocity_t<T>(q, v, t);
      std::vector<T> qf = prepend_coordinate(q, cyclic_index_, T{cyclic_ref_});
      std::vector<T> vf = prepend_coordinate(v, cyclic_index_, w);
      return original_->eval(qf, vf, t) - w * p0_;
    }
  }

  /// The eliminated velocity as a function of the remaining state.
  template <typename T>
  T cyclic_velocity_t(std::span<const T> q, std::span<const T> v,
                      const T& t) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded inside a cyclic reduction");
    } else {
      ScalarRoot root = solve_primal(primal_vec(q), primal_vec(v), primal(t));
      auto residual = [&](const T& w) {
        return momentum_->eval(q, w, v, t) - p0_;
      };
      return lift_root<T>(residual, root);
    }
  }

  double cyclic_velocity(ConstSpan q, ConstSpan v, double t) const {
    return solve_primal(Vec(q.begin(), q.end()), Vec(v.begin(), v.end()), t).x;
  }

  const LagrangianPtr& original() const { return original_; }
  const MomentumPtr& momentum() const { return momentum_; }
  std::size_t cyclic_index() const { return cyclic_index_; }
  double momentum_value() const { return p0_; }

 private:
  ScalarRoot solve_primal(Vec q, Vec v, double t) const;

  LagrangianPtr original_;
  MomentumPtr momentum_;
  std::size_t cyclic_index_;
  double p0_;
  RouthOptions opt_;
  double cyclic_ref_ = 0.0;
};

/// Bundle returned by routh_reduce.
struct RouthReduction {
  LagrangianPtr original;
  std::size_t cyclic_index = 0;
  double p0 = 0.0;
  std::shared_ptr<const RouthReducedLagrangian> reduced;
};

/// Eliminate coordinate `cyclic_index` of `lag` at fixed conjugate momentum
/// p0. The coordinate is spot-checked to actually be cyclic, and the momentum
/// equation is spot-checked to be solvable somewhere on the reduced domain.
RouthReduction routh_reduce(LagrangianPtr lag, std::size_t cyclic_index,
                            double p0, const RouthOptions& opt = {});

/// The velocity w of a cyclic coordinate that matches dL/dw = p0 at the given
/// remaining state (q and v exclude the cyclic slot).
double solve_cyclic_velocity(const LagrangianFn& lag, std::size_t cyclic_index,
                             double p0, ConstSpan q, ConstSpan v,
                             double t = 0.0, const RouthOptions& opt = {});

/// A Lagrangian rebuilt around a reduced one from momentum data: given
/// R(q, v, t), a momentum profile P0(q, w, v, t) for the reinstated velocity
/// w, and the reduction value p0,
///
///   L(q, v, w, t) = R(q, v, t) + phi p0 + integral_phi^w P0 dk,
///
/// with phi solving P0 = p0. The new coordinate is cyclic by construction and
/// dL/dw = P0, so reducing L again at p0 returns R.
class CyclicLiftLagrangian final : public LagrangianEval<CyclicLiftLagrangian> {
 public:
  CyclicLiftLagrangian(LagrangianPtr reduced, MomentumPtr momentum,
                       std::size_t cyclic_index, double p0,
                       RouthOptions opt = {});

  template <typename T>
  T eval_t(std::span<const T> q_full, std::span<const T> v_full,
           const T& t) const {
    std::vector<T> q = drop_coordinate(q_full, cyclic_index_);
    std::vector<T> v = drop_coordinate(v_full, cyclic_index_);
    const T& w = v_full[cyclic_index_];
    ScalarRoot root = solve_primal(primal_vec<T>(q), primal_vec<T>(v),
                                   primal(t));
    auto residual = [&](const T& k) {
      return momentum_->eval(q, k, v, t) - p0_;
    };
    T phi = lift_root<T>(residual, root);
    // integral of P0 over [phi, w], parametrized so dual-valued limits feed
    // their tangents through the chain rule
    T range = w - phi;
    auto rate = [&](double s) {
      T k = phi + range * s;
      return momentum_->eval(q, k, v, t) * range;
    };
    T tail = adaptive_simpson<T>(rate, 0.0, 1.0, quad_opt_);
    return reduced_->eval(q, v, t) + phi * p0_ + tail;
  }

  const LagrangianPtr& reduced() const { return reduced_; }
  const MomentumPtr& momentum() const { return momentum_; }
  std::size_t cyclic_index() const { return cyclic_index_; }
  double momentum_value() const { return p0_; }

 private:
  ScalarRoot solve_primal(Vec q, Vec v, double t) const;

  LagrangianPtr reduced_;
  MomentumPtr momentum_;
  std::size_t cyclic_index_;
  double p0_;
  RouthOptions opt_;
  QuadratureOptions quad_opt_;
};

/// Rebuild a full Lagrangian from a reduced one plus momentum data; inverse
/// of routh_reduce in both directions (see CyclicLiftLagrangian).
LagrangianPtr inverse_routh(LagrangianPtr reduced, MomentumPtr momentum,
                            double p0, std::size_t cyclic_index = 0,
                            const RouthOptions& opt = {});

/// Integrate the reduced system and reconstruct the eliminated coordinate's
/// history q_c(t) = cyclic_initial + integral of w, returning a trajectory in
/// the full coordinate space. `cyclic_initial` is the value at t0 (the start
/// of the run, also for backward windows).
Trajectory drift_reconstruct(const RouthReduction& red, double cyclic_initial,
                             ConstSpan q_reduced, ConstSpan v_reduced,
                             double t0, double t1,
                             const IntegrateOptions& opt = {});

}  // namespace varidyn
