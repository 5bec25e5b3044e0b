#include "varidyn/systems.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "varidyn/errors.hpp"
#include "varidyn/rng.hpp"

namespace varidyn {

namespace {

/// Domain box for the (n+1)-dimensional spacetime states: nothing depends
/// on the cyclic time coordinate, so any finite range works for sampling.
Box spacetime_box(const Box& spatial) {
  Box out;
  out.lo.reserve(spatial.dim() + 1);
  out.hi.reserve(spatial.dim() + 1);
  out.lo.push_back(-1.0);
  out.hi.push_back(1.0);
  out.lo.insert(out.lo.end(), spatial.lo.begin(), spatial.lo.end());
  out.hi.insert(out.hi.end(), spatial.hi.begin(), spatial.hi.end());
  return out;
}

void require_plus_signature(const StationaryMetric& met, const char* what) {
  if (met.epsilon != 1.0)
    throw PreconditionError(
        std::string(what) +
        " assumes the (+, -, ..., -) signature convention; re-express the "
        "metric with epsilon = +1");
}

bool field_is_zero(const ScalarField& f) {
  std::optional<double> cv = f.expr().constant_value();
  return cv.has_value() && *cv == 0.0;
}

}  // namespace

void validate_system(const NewtonianSystem& sys, int samples) {
  const std::size_t n = sys.kinetic.size();
  if (n == 0)
    throw PreconditionError("a system needs at least one coordinate");
  if (!sys.kinetic.complete())
    throw PreconditionError("kinetic tensor has unset entries");
  if (!sys.potential.valid())
    throw PreconditionError("potential is not defined");
  if (!sys.vector_potential.empty() && sys.vector_potential.size() != n)
    throw DimensionError(
        "covector potential component count differs from the coordinate "
        "count");
  for (const ScalarField& a : sys.vector_potential)
    if (!a.valid())
      throw PreconditionError("covector potential component is not defined");
  if (!(sys.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");
  sys.domain.validate();
  if (sys.domain.dim() != n)
    throw DimensionError("domain box dimension differs from the coordinate "
                         "count");
  if (sys.kinetic.min_arity() > n || sys.potential.min_arity() > n)
    throw DimensionError(
        "a field references more coordinates than the system has");
  for (const ScalarField& a : sys.vector_potential)
    if (a.min_arity() > n)
      throw DimensionError(
          "a field references more coordinates than the system has");

  KroneckerSequence seq(n);
  for (int k = 0; k < samples; ++k) {
    Vec x = seq.point_in(static_cast<std::size_t>(k), sys.domain);
    if (!is_positive_definite(sys.kinetic.eval<double>(
            std::span<const double>(x.data(), x.size()))))
      throw PreconditionError(
          "kinetic tensor is not positive definite on the domain");
  }
}

void validate_metric(const StationaryMetric& met, int samples) {
  const std::size_t n = met.spatial_dim();
  if (met.g.size() < 2)
    throw PreconditionError(
        "a stationary metric needs the time coordinate and at least one "
        "spatial coordinate");
  if (!met.g.complete())
    throw PreconditionError("metric has unset components");
  if (met.epsilon != 1.0 && met.epsilon != -1.0)
    throw PreconditionError("signature convention epsilon must be +1 or -1");
  met.spatial_domain.validate();
  if (met.spatial_domain.dim() != n)
    throw DimensionError(
        "spatial domain box dimension differs from the metric's spatial "
        "dimension");
  if (met.g.min_arity() > n)
    throw DimensionError(
        "a metric component references more coordinates than the spatial "
        "dimension");

  KroneckerSequence seq(n);
  for (int k = 0; k < samples; ++k) {
    Vec x = seq.point_in(static_cast<std::size_t>(k), met.spatial_domain);
    Mat g = met.g.eval<double>(std::span<const double>(x.data(), x.size()));
    if (!(met.epsilon * g(0, 0) > 0.0))
      throw PreconditionError(
          "the time direction is not timelike on the spatial domain");
    if (!is_lorentzian(g, met.epsilon))
      throw PreconditionError(
          "metric signature is not Lorentzian on the spatial domain");
  }
}

double mass_shell_level(const StationaryMetric& met,
                        const GeodesicSelector& sel) {
  if (sel.mass < 0.0) throw PreconditionError("mass must be nonnegative");
  if (!(sel.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");
  return -0.5 * met.epsilon * sel.mass * sel.mass * sel.light_speed *
         sel.light_speed;
}

// ------------------------------------------------------------ Lagrangians

NewtonianLagrangian::NewtonianLagrangian(NewtonianSystem sys)
    : LagrangianEval(sys.kinetic.size(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/false, sys.domain, sys.label),
      sys_(std::move(sys)) {
  validate_system(sys_);
}

std::shared_ptr<const NewtonianLagrangian> newtonian_lagrangian(
    NewtonianSystem sys) {
  return std::make_shared<const NewtonianLagrangian>(std::move(sys));
}

QuadraticGeodesicLagrangian::QuadraticGeodesicLagrangian(StationaryMetric met)
    : LagrangianEval(met.g.size(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/false,
                     spacetime_box(met.spatial_domain),
                     met.label + ":quadratic"),
      met_(std::move(met)) {
  validate_metric(met_);
}

TimeGeodesicLagrangian::TimeGeodesicLagrangian(StationaryMetric met,
                                               GeodesicSelector sel)
    : LagrangianEval(met.spatial_dim(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/false, met.spatial_domain,
                     met.label + ":sqrt-time"),
      met_(std::move(met)),
      sel_(sel) {
  validate_metric(met_);
  if (!(sel_.mass > 0.0))
    throw PreconditionError(
        "the square-root geodesic forms need a positive mass");
  if (!(sel_.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");
}

ArcGeodesicLagrangian::ArcGeodesicLagrangian(StationaryMetric met,
                                             GeodesicSelector sel)
    : LagrangianEval(met.g.size(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/true,
                     spacetime_box(met.spatial_domain), met.label + ":arc"),
      met_(std::move(met)),
      sel_(sel) {
  validate_metric(met_);
  if (!(sel_.mass > 0.0))
    throw PreconditionError(
        "the square-root geodesic forms need a positive mass");
  if (!(sel_.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");
}

LagrangianPtr geodesic_lagrangian(const StationaryMetric& met,
                                  const GeodesicSelector& sel,
                                  GeodesicForm form) {
  switch (form) {
    case GeodesicForm::quadratic:
      return std::make_shared<const QuadraticGeodesicLagrangian>(met);
    case GeodesicForm::sqrt_time:
      return std::make_shared<const TimeGeodesicLagrangian>(met, sel);
    case GeodesicForm::homogeneous_sqrt:
      return std::make_shared<const ArcGeodesicLagrangian>(met, sel);
  }
  throw PreconditionError("unknown geodesic form");
}

// -------------------------------------------------------------- geometry

SymTensorField space_metric(const StationaryMetric& met) {
  validate_metric(met);
  const std::size_t n = met.spatial_dim();
  const Expr& a = met.g.entry(0, 0).expr();
  SymTensorField gamma(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Expr raw = met.g.entry(i + 1, j + 1).expr();
      if (!field_is_zero(met.g.entry(0, i + 1)) &&
          !field_is_zero(met.g.entry(0, j + 1)))
        raw = raw -
              met.g.entry(0, i + 1).expr() * met.g.entry(0, j + 1).expr() / a;
      gamma.set(i, j, ScalarField(Expr::constant(-met.epsilon) * raw));
    }
  return gamma;
}

double future_time_velocity(const StationaryMetric& met, ConstSpan x,
                            ConstSpan v, double level) {
  const std::size_t n = met.spatial_dim();
  if (x.size() != n || v.size() != n)
    throw DimensionError(
        "state dimension differs from the metric's spatial dimension");
  Mat g = met.g.eval<double>(x);
  const double a = g(0, 0);
  if (a == 0.0)
    throw DomainError("the time direction degenerates at the evaluation "
                      "point");
  double b = 0.0;
  double gvv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    b += g(0, k + 1) * v[k];
    for (std::size_t l = 0; l < n; ++l) gvv += g(k + 1, l + 1) * v[k] * v[l];
  }
  // -1/2 (a w^2 + 2 b w + gvv) = level
  const double disc = b * b - a * (gvv + 2.0 * level);
  if (disc < 0.0)
    throw DomainError(
        "the requested level is unreachable along the given direction");
  const double s = std::sqrt(disc);
  double best = 0.0;
  for (double w : {(-b + s) / a, (-b - s) / a}) best = std::max(best, w);
  if (!(best > 0.0))
    throw DomainError(
        "no future-directed time velocity reaches the requested level");
  return best;
}

// ----------------------------------------------------------- closed forms

MaupertuisForm::MaupertuisForm(NewtonianSystem sys, double E)
    : LagrangianEval(sys.kinetic.size(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/true, sys.domain,
                     sys.label + ":maupertuis"),
      sys_(std::move(sys)),
      E_(E) {
  validate_system(sys_);
}

double MaupertuisForm::theta_prime(ConstSpan x, ConstSpan xp) const {
  Mat e = sys_.kinetic.eval_positive<double>(x, "kinetic tensor");
  double exx = quad_form(e, xp, xp);
  if (!(exx > 0.0))
    throw DegenerateInputError(
        "rescale factor is undefined for a zero direction");
  double gap = E_ - sys_.potential.eval<double>(x);
  if (!(gap > 0.0))
    throw DomainError(
        "the energy level is unreachable at the evaluation point "
        "(kinetically forbidden region)");
  return std::sqrt(exx / (2.0 * gap));
}

std::shared_ptr<const MaupertuisForm> maupertuis_form(NewtonianSystem sys,
                                                      double E) {
  return std::make_shared<const MaupertuisForm>(std::move(sys), E);
}

FermatForm::FermatForm(StationaryMetric met, GeodesicSelector sel, double E)
    : LagrangianEval(met.spatial_dim(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/true, met.spatial_domain,
                     met.label + ":fermat"),
      met_(std::move(met)),
      sel_(sel),
      gamma_(space_metric(met_)),
      E_(E) {
  require_plus_signature(met_, "the fixed-energy path form");
  if (sel_.mass < 0.0) throw PreconditionError("mass must be nonnegative");
  if (!(sel_.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");
  if (!(E_ > 0.0))
    throw PreconditionError(
        "the fixed-energy path form needs a positive conserved energy");
}

double FermatForm::theta_prime(ConstSpan x, ConstSpan xp) const {
  const double c = sel_.light_speed;
  const double m = sel_.mass;
  Mat g = met_.g.eval<double>(x);
  Mat gam = gamma_.eval_positive<double>(x, "spatial metric");
  double gxx = quad_form(gam, xp, xp);
  if (!(gxx > 0.0))
    throw DegenerateInputError(
        "rescale factor is undefined for a zero direction");
  const double a = g(0, 0);
  double drift = 0.0;
  for (std::size_t k = 0; k < xp.size(); ++k) drift += g(0, k + 1) * xp[k];
  const double denom = E_ * E_ / (c * c) - m * m * c * c * a;
  if (!(denom > 0.0))
    throw DomainError(
        "the energy level is below the local rest energy (kinetically "
        "forbidden region)");
  double phi = -drift / (c * a) +
               (E_ / (c * std::sqrt(a))) * std::sqrt(gxx / denom);
  if (!(phi > 0.0))
    throw DomainError(
        "the direction cannot be traversed future-directed at this energy");
  return phi;
}

std::shared_ptr<const FermatForm> fermat_form(StationaryMetric met,
                                              GeodesicSelector sel, double E) {
  return std::make_shared<const FermatForm>(std::move(met), sel, E);
}

RouthTimeForm::RouthTimeForm(StationaryMetric met, double p0)
    : LagrangianEval(met.spatial_dim(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/false, met.spatial_domain,
                     met.label + ":routh-time"),
      met_(std::move(met)),
      gamma_(space_metric(met_)),
      p0_(p0) {
  require_plus_signature(met_, "the cyclic time reduction");
}

std::shared_ptr<const RouthTimeForm> routh_time_form(StationaryMetric met,
                                                     double p0) {
  return std::make_shared<const RouthTimeForm>(std::move(met), p0);
}

// ------------------------------------------------------------ conversions

NewtonianSystem metric_to_newtonian(const StationaryMetric& met,
                                    const GeodesicSelector& sel, double E,
                                    double mech_energy, double coupling) {
  validate_metric(met);
  require_plus_signature(met, "the Newtonian reading of a metric");
  if (coupling == 0.0)
    throw PreconditionError("coupling must be nonzero to carry the drift "
                            "terms");
  if (sel.mass < 0.0) throw PreconditionError("mass must be nonnegative");
  if (!(sel.light_speed > 0.0))
    throw PreconditionError("light speed must be positive");

  const std::size_t n = met.spatial_dim();
  const double c = sel.light_speed;
  const double m = sel.mass;
  const Expr& a = met.g.entry(0, 0).expr();

  NewtonianSystem out;
  out.kinetic = space_metric(met);
  bool any_drift = false;
  for (std::size_t i = 0; i < n; ++i)
    if (!field_is_zero(met.g.entry(0, i + 1))) any_drift = true;
  if (any_drift) {
    out.vector_potential.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.vector_potential.push_back(ScalarField(
          Expr::constant(-E / coupling) * (met.g.entry(0, i + 1).expr() / a)));
  }
  out.potential = ScalarField(
      Expr::constant(mech_energy + 0.5 * m * m * c * c) -
      Expr::constant(E * E / (2.0 * c * c)) / a);
  out.coupling = coupling;
  out.light_speed = c;
  out.domain = met.spatial_domain;
  out.label = met.label + ":newtonian";
  return out;
}

StationaryMetric newtonian_to_metric(const NewtonianSystem& sys,
                                     const GeodesicSelector& sel, double E,
                                     double mech_energy) {
  validate_system(sys);
  if (E == 0.0)
    throw PreconditionError(
        "lifting a system to a metric needs a nonzero conserved energy");
  if (sel.mass < 0.0) throw PreconditionError("mass must be nonnegative");
  if (sel.light_speed != sys.light_speed)
    throw PreconditionError(
        "the selector and the system disagree on the light speed");

  const std::size_t n = sys.dof();
  const double c = sys.light_speed;
  const double m = sel.mass;

  Expr head = Expr::constant(mech_energy + 0.5 * m * m * c * c) -
              sys.potential.expr();
  Expr a = Expr::constant(E * E / (2.0 * c * c)) / head;

  StationaryMetric out;
  out.g = SymTensorField(n + 1);
  out.g.set(0, 0, ScalarField(a));
  std::vector<Expr> row0(n, Expr::constant(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (i < sys.vector_potential.size() &&
        !field_is_zero(sys.vector_potential[i]))
      row0[i] = Expr::constant(-sys.coupling / E) *
                sys.vector_potential[i].expr() * a;
    out.g.set(0, i + 1, ScalarField(row0[i]));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Expr gij = -sys.kinetic.entry(i, j).expr();
      std::optional<double> zi = row0[i].constant_value();
      std::optional<double> zj = row0[j].constant_value();
      if (!(zi && *zi == 0.0) && !(zj && *zj == 0.0))
        gij = gij + row0[i] * row0[j] / a;
      out.g.set(i + 1, j + 1, ScalarField(gij));
    }
  out.epsilon = 1.0;
  out.spatial_domain = sys.domain;
  out.label = sys.label + ":metric";
  validate_metric(out);
  return out;
}

}  // namespace varidyn
