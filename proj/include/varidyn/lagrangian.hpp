#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varidyn/dual.hpp"
#include "varidyn/errors.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// A Lagrangian L(q, v, t). Evaluation is virtual at every supported dual
/// level, so composites built at runtime (reductions, lifts, chains of both)
/// expose exact derivatives to the same depth as closed-form definitions.
class LagrangianFn {
 public:
  virtual ~LagrangianFn() = default;

  std::size_t dof() const { return dof_; }
  bool time_independent() const { return time_independent_; }
  /// Declared positively-homogeneous of degree one in the velocities
  /// (reparametrization-invariant arc functionals).
  bool homogeneous_deg1() const { return homogeneous_deg1_; }
  const Box& domain() const { return domain_; }
  const std::string& label() const { return label_; }

  virtual double eval(ConstSpan q, ConstSpan v, double t) const = 0;
  virtual D1 eval(std::span<const D1> q, std::span<const D1> v,
                  const D1& t) const = 0;
  virtual D2 eval(std::span<const D2> q, std::span<const D2> v,
                  const D2& t) const = 0;
  virtual D3 eval(std::span<const D3> q, std::span<const D3> v,
                  const D3& t) const = 0;
  virtual D4 eval(std::span<const D4> q, std::span<const D4> v,
                  const D4& t) const = 0;

 protected:
  LagrangianFn(std::size_t dof, bool time_independent, bool homogeneous_deg1,
               Box domain, std::string label)
      : dof_(dof),
        time_independent_(time_independent),
        homogeneous_deg1_(homogeneous_deg1),
        domain_(std::move(domain)),
        label_(std::move(label)) {
    domain_.validate();
    if (domain_.dim() != dof_)
      throw DimensionError(
          "domain box dimension differs from the degree-of-freedom count");
  }

 private:
  std::size_t dof_;
  bool time_independent_;
  bool homogeneous_deg1_;
  Box domain_;
  std::string label_;
};

using LagrangianPtr = std::shared_ptr<const LagrangianFn>;

/// CRTP forwarder: an implementation provides a single
///   template <typename T> T eval_t(span<const T> q, span<const T> v, T t)
/// and this base instantiates it for every supported dual level.
template <typename Derived>
class LagrangianEval : public LagrangianFn {
 public:
  double eval(ConstSpan q, ConstSpan v, double t) const final {
    check(q.size(), v.size());
    return self().template eval_t<double>(q, v, t);
  }
  D1 eval(std::span<const D1> q, std::span<const D1> v,
          const D1& t) const final {
    check(q.size(), v.size());
    return self().template eval_t<D1>(q, v, t);
  }
  D2 eval(std::span<const D2> q, std::span<const D2> v,
          const D2& t) const final {
    check(q.size(), v.size());
    return self().template eval_t<D2>(q, v, t);
  }
  D3 eval(std::span<const D3> q, std::span<const D3> v,
          const D3& t) const final {
    check(q.size(), v.size());
    return self().template eval_t<D3>(q, v, t);
  }
  D4 eval(std::span<const D4> q, std::span<const D4> v,
          const D4& t) const final {
    check(q.size(), v.size());
    return self().template eval_t<D4>(q, v, t);
  }

 protected:
  using LagrangianFn::LagrangianFn;

 private:
  void check(std::size_t nq, std::size_t nv) const {
    if (nq != dof() || nv != dof())
      throw DimensionError(
          "state dimension differs from the Lagrangian's degree-of-freedom "
          "count");
  }
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// An energy-like scalar G(q, v, t) associated with a Lagrangian.
class EnergyFn {
 public:
  virtual ~EnergyFn() = default;

  std::size_t dof() const { return dof_; }
  const std::string& label() const { return label_; }

  virtual double eval(ConstSpan q, ConstSpan v, double t) const = 0;
  virtual D1 eval(std::span<const D1> q, std::span<const D1> v,
                  const D1& t) const = 0;
  virtual D2 eval(std::span<const D2> q, std::span<const D2> v,
                  const D2& t) const = 0;
  virtual D3 eval(std::span<const D3> q, std::span<const D3> v,
                  const D3& t) const = 0;
  virtual D4 eval(std::span<const D4> q, std::span<const D4> v,
                  const D4& t) const = 0;

 protected:
  EnergyFn(std::size_t dof, std::string label)
      : dof_(dof), label_(std::move(label)) {}

 private:
  std::size_t dof_;
  std::string label_;
};

using EnergyPtr = std::shared_ptr<const EnergyFn>;

template <typename Derived>
class EnergyEval : public EnergyFn {
 public:
  double eval(ConstSpan q, ConstSpan v, double t) const final {
    return self().template eval_t<double>(q, v, t);
  }
  D1 eval(std::span<const D1> q, std::span<const D1> v,
          const D1& t) const final {
    return self().template eval_t<D1>(q, v, t);
  }
  D2 eval(std::span<const D2> q, std::span<const D2> v,
          const D2& t) const final {
    return self().template eval_t<D2>(q, v, t);
  }
  D3 eval(std::span<const D3> q, std::span<const D3> v,
          const D3& t) const final {
    return self().template eval_t<D3>(q, v, t);
  }
  D4 eval(std::span<const D4> q, std::span<const D4> v,
          const D4& t) const final {
    return self().template eval_t<D4>(q, v, t);
  }

 protected:
  using EnergyFn::EnergyFn;

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// The momentum conjugate to an eliminated cyclic coordinate, as a function
/// P0(q, w, v, t) of the remaining state and the cyclic velocity w.
class MomentumFn {
 public:
  virtual ~MomentumFn() = default;

  /// Number of remaining (non-cyclic) coordinates.
  std::size_t dof() const { return dof_; }
  const std::string& label() const { return label_; }

  virtual double eval(ConstSpan q, double w, ConstSpan v, double t) const = 0;
  virtual D1 eval(std::span<const D1> q, const D1& w, std::span<const D1> v,
                  const D1& t) const = 0;
  virtual D2 eval(std::span<const D2> q, const D2& w, std::span<const D2> v,
                  const D2& t) const = 0;
  virtual D3 eval(std::span<const D3> q, const D3& w, std::span<const D3> v,
                  const D3& t) const = 0;
  virtual D4 eval(std::span<const D4> q, const D4& w, std::span<const D4> v,
                  const D4& t) const = 0;

 protected:
  MomentumFn(std::size_t dof, std::string label)
      : dof_(dof), label_(std::move(label)) {}

 private:
  std::size_t dof_;
  std::string label_;
};

using MomentumPtr = std::shared_ptr<const MomentumFn>;

template <typename Derived>
class MomentumEval : public MomentumFn {
 public:
  double eval(ConstSpan q, double w, ConstSpan v, double t) const final {
    return self().template eval_t<double>(q, w, v, t);
  }
  D1 eval(std::span<const D1> q, const D1& w, std::span<const D1> v,
          const D1& t) const final {
    return self().template eval_t<D1>(q, w, v, t);
  }
  D2 eval(std::span<const D2> q, const D2& w, std::span<const D2> v,
          const D2& t) const final {
    return self().template eval_t<D2>(q, w, v, t);
  }
  D3 eval(std::span<const D3> q, const D3& w, std::span<const D3> v,
          const D3& t) const final {
    return self().template eval_t<D3>(q, w, v, t);
  }
  D4 eval(std::span<const D4> q, const D4& w, std::span<const D4> v,
          const D4& t) const final {
    return self().template eval_t<D4>(q, w, v, t);
  }

 protected:
  using MomentumFn::MomentumFn;

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Copy a span of T into a vector of Dual<T> with zero tangents.
template <typename T>
std::vector<Dual<T>> lift_span(std::span<const T> x) {
  std::vector<Dual<T>> out;
  out.reserve(x.size());
  for (const T& xi : x) out.emplace_back(xi, T{0.0});
  return out;
}

/// Strip a span of duals down to its primal values.
template <typename T>
Vec primal_vec(std::span<const T> x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = primal(x[i]);
  return out;
}

/// Velocity gradient of a Lagrangian at an arbitrary dual level, one nesting
/// level deeper than T. Throws once the level cap would be exceeded.
template <typename T>
std::vector<T> velocity_gradient_t(const LagrangianFn& lag,
                                   std::span<const T> q, std::span<const T> v,
                                   const T& t) {
  if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
    throw PreconditionError(
        "derivative order cap exceeded while differentiating a Lagrangian");
  } else {
    using U = Dual<T>;
    std::vector<U> qU = lift_span(q);
    std::vector<U> vU = lift_span(v);
    U tU(t, T{0.0});
    std::vector<T> grad(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      vU[i].b = T{1.0};
      grad[i] = lag.eval(qU, vU, tU).b;
      vU[i].b = T{0.0};
    }
    return grad;
  }
}

/// Energy defined the canonical way: G = v . dL/dv - L.
class DerivedEnergy final : public EnergyEval<DerivedEnergy> {
 public:
  explicit DerivedEnergy(LagrangianPtr lag)
      : EnergyEval(lag->dof(), lag->label() + ":energy"),
        lag_(std::move(lag)) {}

  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T& t) const {
    std::vector<T> grad = velocity_gradient_t(*lag_, q, v, t);
    T acc = lag_->eval(q, v, t);
    acc = -acc;
    for (std::size_t i = 0; i < v.size(); ++i) acc = acc + v[i] * grad[i];
    return acc;
  }

  const LagrangianPtr& lagrangian() const { return lag_; }

 private:
  LagrangianPtr lag_;
};

/// Momentum conjugate to a cyclic coordinate, derived as dL/dw with the full
/// state reassembled around the cyclic slot.
class DerivedMomentum final : public MomentumEval<DerivedMomentum> {
 public:
  DerivedMomentum(LagrangianPtr lag, std::size_t cyclic_index)
      : MomentumEval(lag->dof() - 1, lag->label() + ":cyclic-momentum"),
        lag_(std::move(lag)),
        cyclic_index_(cyclic_index) {
    if (cyclic_index_ >= lag_->dof())
      throw DimensionError("cyclic coordinate index out of range");
    cyclic_ref_ = 0.5 * (lag_->domain().lo[cyclic_index_] +
                         lag_->domain().hi[cyclic_index_]);
  }

  template <typename T>
  T eval_t(std::span<const T> q, const T& w, std::span<const T> v,
           const T& t) const {
    if constexpr (dual_order_v<T> + 1 > kMaxDualOrder) {
      throw PreconditionError(
          "derivative order cap exceeded while deriving a cyclic momentum");
    } else {
      using U = Dual<T>;
      std::vector<U> qU;
      std::vector<U> vU;
      qU.reserve(q.size() + 1);
      vU.reserve(v.size() + 1);
      for (std::size_t i = 0; i <= q.size(); ++i) {
        if (i == cyclic_index_) {
          qU.emplace_back(T{cyclic_ref_}, T{0.0});
          vU.emplace_back(w, T{1.0});
        }
        if (i < q.size()) {
          qU.emplace_back(q[i], T{0.0});
          vU.emplace_back(v[i], T{0.0});
        }
      }
      U tU(t, T{0.0});
      return lag_->eval(qU, vU, tU).b;
    }
  }

  std::size_t cyclic_index() const { return cyclic_index_; }
  const LagrangianPtr& lagrangian() const { return lag_; }

 private:
  LagrangianPtr lag_;
  std::size_t cyclic_index_;
  double cyclic_ref_ = 0.0;
};

inline EnergyPtr energy_function(LagrangianPtr lag) {
  return std::make_shared<DerivedEnergy>(std::move(lag));
}

inline MomentumPtr cyclic_momentum_fn(LagrangianPtr lag,
                                      std::size_t cyclic_index) {
  return std::make_shared<DerivedMomentum>(std::move(lag), cyclic_index);
}

// ------------------------------------------------------- derivative queries

Vec dLdv(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);
Vec dLdq(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);
double dLdt(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);
Mat d2Ldvdv(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);
/// Row i, column j holds d^2 L / (dv_i dq_j).
Mat d2Ldvdq(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);
Vec d2Ldvdt(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t);

inline Vec conjugate_momenta(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                             double t) {
  return dLdv(lag, q, v, t);
}

struct HessianReport {
  Mat matrix;
  Vec singular_values;  ///< descending
  int rank = 0;         ///< at a relative threshold of 1e-8
};

HessianReport velocity_hessian(const LagrangianFn& lag, ConstSpan q,
                               ConstSpan v, double t);

/// The equations of motion in solved form: mass * a = rhs.
struct ELSystem {
  Mat mass;
  Vec rhs;
};

ELSystem el_decompose(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                      double t);

/// Acceleration from the equations of motion; SingularMatrixError when the
/// velocity Hessian does not determine it (degree-one homogeneous cases).
Vec el_acceleration(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                    double t);

/// Residual of the equations of motion at a given acceleration.
Vec el_residual(const LagrangianFn& lag, ConstSpan q, ConstSpan v, ConstSpan a,
                double t);

/// Largest normalized deviation of L(q, lambda v) from lambda L(q, v) over
/// the given scale factors; ~0 identifies degree-one homogeneity.
double homogeneity_deviation(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                             double t, ConstSpan lambdas);

}  // namespace varidyn
