#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "varidyn/fields.hpp"
#include "varidyn/lagrangian.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// Data for a mechanical system with Lagrangian
///   L = 1/2 e_ij(x) v^i v^j + (coupling / c) A_i(x) v^i - V(x),
/// where e is a positive-definite kinetic tensor, A an optional covector
/// potential and V a scalar potential.
struct NewtonianSystem {
  SymTensorField kinetic;                     ///< e_ij, positive definite
  std::vector<ScalarField> vector_potential;  ///< A_i; empty for none
  ScalarField potential;                      ///< V
  double coupling = 1.0;      ///< charge-like factor in front of A
  double light_speed = 1.0;   ///< c
  Box domain;                 ///< coordinate box used for sampling
  std::string label = "newtonian";

  std::size_t dof() const { return kinetic.size(); }
};

/// Throws unless the system's tensors are complete, dimensions agree and the
/// kinetic tensor is positive definite at deterministically sampled points.
void validate_system(const NewtonianSystem& sys, int samples = 16);

/// A time-independent spacetime metric. Index 0 is the distinguished time
/// coordinate; every component is a function of the spatial coordinates
/// only, so the time coordinate is cyclic by construction. epsilon fixes
/// the signature convention: epsilon * g has signature (+, -, ..., -) and
/// epsilon * g00 > 0.
struct StationaryMetric {
  SymTensorField g;        ///< (n+1) x (n+1) components over spatial x
  double epsilon = 1.0;    ///< +1 or -1
  Box spatial_domain;      ///< box for the n spatial coordinates
  std::string label = "metric";

  std::size_t spatial_dim() const { return g.size() == 0 ? 0 : g.size() - 1; }
};

/// Throws unless the metric is complete, dimensions agree and the signature
/// is Lorentzian with a timelike time direction at deterministically
/// sampled spatial points.
void validate_metric(const StationaryMetric& met, int samples = 16);

/// Mass and light speed selecting one geodesic family on a metric.
struct GeodesicSelector {
  double mass = 1.0;
  double light_speed = 1.0;
};

/// Value of the quadratic-form energy on the mass shell,
/// -1/2 epsilon m^2 c^2; zero for light.
double mass_shell_level(const StationaryMetric& met,
                        const GeodesicSelector& sel);

/// The three standard Lagrangian presentations of the geodesics of a
/// stationary metric.
enum class GeodesicForm {
  quadratic,         ///< -1/2 g_ab u^a u^b over (x^0, x), affine parameter
  sqrt_time,         ///< proper-cost rate over spatial x, coordinate time
  homogeneous_sqrt,  ///< arc functional over (x^0, x), any parametrization
};

/// Newtonian Lagrangian built from system data.
class NewtonianLagrangian final : public LagrangianEval<NewtonianLagrangian> {
 public:
  explicit NewtonianLagrangian(NewtonianSystem sys);

  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T& t) const {
    (void)t;
    MatT<T> e = sys_.kinetic.eval_positive<T>(q, "kinetic tensor");
    T out = 0.5 * quad_form(e, v, v) - sys_.potential.eval<T>(q);
    if (!sys_.vector_potential.empty()) {
      T drift{0.0};
      for (std::size_t i = 0; i < v.size(); ++i)
        drift = drift + sys_.vector_potential[i].eval<T>(q) * v[i];
      out = out + (sys_.coupling / sys_.light_speed) * drift;
    }
    return out;
  }

  const NewtonianSystem& system() const { return sys_; }

 private:
  NewtonianSystem sys_;
};

std::shared_ptr<const NewtonianLagrangian> newtonian_lagrangian(
    NewtonianSystem sys);

/// Quadratic geodesic Lagrangian -1/2 g_ab u^a u^b on the (n+1)-dimensional
/// state (x^0, x). Mass enters only through the conserved level at which
/// the system is run, never through the Lagrangian itself. The range of the
/// cyclic time coordinate in the domain box matters only for sampling.
class QuadraticGeodesicLagrangian final
    : public LagrangianEval<QuadraticGeodesicLagrangian> {
 public:
  explicit QuadraticGeodesicLagrangian(StationaryMetric met);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> u, const T& t) const {
    (void)t;
    MatT<T> g = met_.g.eval<T>(x.subspan(1));
    return -0.5 * quad_form(g, u, u);
  }

  const StationaryMetric& metric() const { return met_; }

 private:
  StationaryMetric met_;
};

/// Square-root geodesic Lagrangian over the spatial coordinates with the
/// coordinate time x^0 = c t as evolution parameter:
///   L = -m c^2 epsilon sqrt(epsilon (g00 + 2 g_0k v^k / c + g_kl v^k v^l / c^2)).
/// Velocities outside the light cone raise DomainError.
class TimeGeodesicLagrangian final
    : public LagrangianEval<TimeGeodesicLagrangian> {
 public:
  TimeGeodesicLagrangian(StationaryMetric met, GeodesicSelector sel);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> v, const T& t) const {
    (void)t;
    MatT<T> g = met_.g.eval<T>(x);
    const double c = sel_.light_speed;
    T q = g(0, 0);
    for (std::size_t k = 0; k < v.size(); ++k) {
      q = q + (2.0 / c) * g(0, k + 1) * v[k];
      for (std::size_t l = 0; l < v.size(); ++l)
        q = q + (1.0 / (c * c)) * g(k + 1, l + 1) * v[k] * v[l];
    }
    return -sel_.mass * c * c * met_.epsilon *
           varidyn::sqrt(met_.epsilon * q);
  }

  const StationaryMetric& metric() const { return met_; }
  const GeodesicSelector& selector() const { return sel_; }

 private:
  StationaryMetric met_;
  GeodesicSelector sel_;
};

/// Degree-one homogeneous arc functional -epsilon m c sqrt(epsilon g x' x')
/// on the (n+1)-dimensional state; its stationary curves are the geodesics
/// in every parametrization. Coincides with the fixed-level reduction of
/// the quadratic form at the mass-shell level.
class ArcGeodesicLagrangian final
    : public LagrangianEval<ArcGeodesicLagrangian> {
 public:
  ArcGeodesicLagrangian(StationaryMetric met, GeodesicSelector sel);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> xp, const T& t) const {
    (void)t;
    MatT<T> g = met_.g.eval<T>(x.subspan(1));
    return -met_.epsilon * sel_.mass * sel_.light_speed *
           varidyn::sqrt(met_.epsilon * quad_form(g, xp, xp));
  }

  const StationaryMetric& metric() const { return met_; }
  const GeodesicSelector& selector() const { return sel_; }

 private:
  StationaryMetric met_;
  GeodesicSelector sel_;
};

/// Build the requested geodesic presentation. The square-root forms need a
/// positive mass; the quadratic form accepts massless selectors as well.
LagrangianPtr geodesic_lagrangian(const StationaryMetric& met,
                                  const GeodesicSelector& sel,
                                  GeodesicForm form);

/// Spatial metric gamma_ij = -epsilon (g_ij - g_0i g_0j / g00) governing the
/// projected paths; positive definite under both signature conventions.
SymTensorField space_metric(const StationaryMetric& met);

/// The unique future-directed time velocity u^0 > 0 that places the state
/// ((x^0, x), (u^0, v)) on the quadratic-form level -1/2 g(u, u) = level.
double future_time_velocity(const StationaryMetric& met, ConstSpan x,
                            ConstSpan v, double level);

/// Closed-form fixed-energy reduction of a Newtonian system at energy E:
///   L_E = sqrt(2 (E - V) e x' x') + (coupling / c) A_k x'^k,
/// the Maupertuis arc functional whose stationary curves are the orbits of
/// the system at that energy.
class MaupertuisForm final : public LagrangianEval<MaupertuisForm> {
 public:
  MaupertuisForm(NewtonianSystem sys, double E);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> xp, const T& t) const {
    (void)t;
    MatT<T> e = sys_.kinetic.eval_positive<T>(x, "kinetic tensor");
    T exx = quad_form(e, xp, xp);
    T gap = T{E_} - sys_.potential.eval<T>(x);
    T out = varidyn::sqrt(2.0 * gap * exx);
    if (!sys_.vector_potential.empty()) {
      T drift{0.0};
      for (std::size_t i = 0; i < xp.size(); ++i)
        drift = drift + sys_.vector_potential[i].eval<T>(x) * xp[i];
      out = out + (sys_.coupling / sys_.light_speed) * drift;
    }
    return out;
  }

  /// Closed-form rescale factor sqrt(e x'x' / (2 (E - V))) relating the
  /// path parameter to the time of the unreduced motion.
  double theta_prime(ConstSpan x, ConstSpan xp) const;

  const NewtonianSystem& system() const { return sys_; }
  double energy_value() const { return E_; }

 private:
  NewtonianSystem sys_;
  double E_;
};

std::shared_ptr<const MaupertuisForm> maupertuis_form(NewtonianSystem sys,
                                                      double E);

/// Closed-form fixed-energy reduction of the time-parametrized square-root
/// geodesic Lagrangian at conserved energy E:
///   L_E = sqrt((E^2 / (c^2 g00) - m^2 c^2) gamma x' x') - E g_0k x'^k / (c g00).
/// With m = 0 this is the Fermat arc functional of light paths. Requires
/// the epsilon = +1 signature convention.
class FermatForm final : public LagrangianEval<FermatForm> {
 public:
  FermatForm(StationaryMetric met, GeodesicSelector sel, double E);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> xp, const T& t) const {
    (void)t;
    const double c = sel_.light_speed;
    const double m = sel_.mass;
    MatT<T> g = met_.g.eval<T>(x);
    MatT<T> gam = gamma_.eval_positive<T>(x, "spatial metric");
    T gxx = quad_form(gam, xp, xp);
    T drift{0.0};
    for (std::size_t k = 0; k < xp.size(); ++k)
      drift = drift + g(0, k + 1) * xp[k];
    T spread = T{E_ * E_ / (c * c)} / g(0, 0) - T{m * m * c * c};
    return varidyn::sqrt(spread * gxx) - (E_ / c) * drift / g(0, 0);
  }

  /// Closed-form rescale factor relating the path parameter to coordinate
  /// time along the energy-E motion.
  double theta_prime(ConstSpan x, ConstSpan xp) const;

  const StationaryMetric& metric() const { return met_; }
  const GeodesicSelector& selector() const { return sel_; }
  double energy_value() const { return E_; }

 private:
  StationaryMetric met_;
  GeodesicSelector sel_;
  SymTensorField gamma_;
  double E_;
};

std::shared_ptr<const FermatForm> fermat_form(StationaryMetric met,
                                              GeodesicSelector sel, double E);

/// Closed-form elimination of the cyclic time coordinate from the quadratic
/// geodesic form at conjugate momentum p0:
///   L = 1/2 gamma_kl v^k v^l + p0 (g_0k / g00) v^k + p0^2 / (2 g00),
/// a Newtonian-type system over the spatial coordinates, independent of the
/// particle mass. Requires the epsilon = +1 signature convention.
class RouthTimeForm final : public LagrangianEval<RouthTimeForm> {
 public:
  RouthTimeForm(StationaryMetric met, double p0);

  template <typename T>
  T eval_t(std::span<const T> x, std::span<const T> v, const T& t) const {
    (void)t;
    MatT<T> g = met_.g.eval<T>(x);
    MatT<T> gam = gamma_.eval_positive<T>(x, "spatial metric");
    T drift{0.0};
    for (std::size_t k = 0; k < v.size(); ++k)
      drift = drift + g(0, k + 1) * v[k];
    return 0.5 * quad_form(gam, v, v) + p0_ * drift / g(0, 0) +
           T{0.5 * p0_ * p0_} / g(0, 0);
  }

  const StationaryMetric& metric() const { return met_; }
  double momentum_value() const { return p0_; }

 private:
  StationaryMetric met_;
  SymTensorField gamma_;
  double p0_;
};

std::shared_ptr<const RouthTimeForm> routh_time_form(StationaryMetric met,
                                                     double p0);

/// Read a stationary metric as a Newtonian system: the fixed-energy paths
/// of the metric at energy E coincide with the fixed-energy paths of the
/// returned system at mechanical energy mech_energy. Requires epsilon = +1.
NewtonianSystem metric_to_newtonian(const StationaryMetric& met,
                                    const GeodesicSelector& sel, double E,
                                    double mech_energy, double coupling = 1.0);

/// Inverse construction: lift a Newtonian system to a stationary metric
/// whose energy-E geodesics project onto the system's orbits at mechanical
/// energy mech_energy. Requires E != 0.
StationaryMetric newtonian_to_metric(const NewtonianSystem& sys,
                                     const GeodesicSelector& sel, double E,
                                     double mech_energy);

}  // namespace varidyn
