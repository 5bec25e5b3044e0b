#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "varidyn/jacobi.hpp"
#include "varidyn/rng.hpp"
#include "varidyn/routh.hpp"
#include "varidyn/systems.hpp"

using namespace varidyn;

namespace {

Box box2(double lo0, double hi0, double lo1, double hi1) {
  return Box{{lo0, lo1}, {hi0, hi1}};
}

NewtonianSystem harmonic_system() {
  NewtonianSystem sys;
  sys.kinetic = SymTensorField::identity(2);
  sys.potential = ScalarField::parse("0.5*(q1^2+q2^2)");
  sys.domain = box2(-1.25, 1.25, -1.25, 1.25);
  sys.label = "harmonic";
  return sys;
}

NewtonianSystem kepler_system() {
  NewtonianSystem sys;
  sys.kinetic = SymTensorField::identity(2);
  sys.potential = ScalarField::parse("-1/sqrt(q1^2+q2^2)");
  sys.domain = box2(0.4, 2.0, 0.4, 2.0);
  sys.label = "kepler";
  return sys;
}

StationaryMetric flat_metric_1d() {
  StationaryMetric met;
  met.g = SymTensorField::identity(2);
  met.g.set(1, 1, ScalarField::constant(-1.0));
  met.spatial_domain = Box{{-5.0}, {5.0}};
  met.label = "flat1";
  return met;
}

StationaryMetric flat_metric_2d() {
  StationaryMetric met;
  met.g = SymTensorField::identity(3);
  met.g.set(1, 1, ScalarField::constant(-1.0));
  met.g.set(2, 2, ScalarField::constant(-1.0));
  met.spatial_domain = box2(-5, 5, -5, 5);
  met.label = "flat2";
  return met;
}

StationaryMetric sloped_metric_1d() {
  StationaryMetric met;
  met.g = SymTensorField(2);
  met.g.set(0, 0, ScalarField::parse("1+0.2*q1"));
  met.g.set(0, 1, ScalarField::constant(0.0));
  met.g.set(1, 1, ScalarField::constant(-1.0));
  met.spatial_domain = Box{{-1.0}, {1.0}};
  met.label = "sloped";
  return met;
}

StationaryMetric drift_metric_1d() {
  StationaryMetric met;
  met.g = SymTensorField(2);
  met.g.set(0, 0, ScalarField::constant(1.0));
  met.g.set(0, 1, ScalarField::constant(0.5));
  met.g.set(1, 1, ScalarField::constant(-1.0));
  met.spatial_domain = Box{{-5.0}, {5.0}};
  met.label = "drift";
  return met;
}

}  // namespace

TEST_CASE("mechanical Lagrangian assembly") {
  NewtonianSystem sys = kepler_system();
  auto lag = newtonian_lagrangian(sys);
  CHECK(lag->dof() == 2);
  CHECK(lag->time_independent());
  CHECK(!lag->homogeneous_deg1());

  Vec q = {3.0, 4.0};
  Vec v = {1.0, 2.0};
  CHECK(lag->eval(q, v, 0.0) == doctest::Approx(2.7).epsilon(1e-14));

  Vec q1 = {1.0, 0.0};
  Vec v0 = {0.0, 0.0};
  Vec a = el_acceleration(*lag, q1, v0, 0.0);
  CHECK(a[0] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(std::fabs(a[1]) < 1e-10);

  // covector potential enters as (coupling / c) A . v
  NewtonianSystem mag = kepler_system();
  mag.vector_potential = {ScalarField::parse("-q2"), ScalarField::parse("q1")};
  mag.coupling = 1.0;
  mag.light_speed = 2.0;
  auto lagm = newtonian_lagrangian(mag);
  CHECK(lagm->eval(q, v, 0.0) == doctest::Approx(2.7 + 1.0).epsilon(1e-14));
}

TEST_CASE("mechanical system validation") {
  NewtonianSystem sys = harmonic_system();
  sys.kinetic = SymTensorField(2);
  sys.kinetic.set(0, 0, ScalarField::constant(1.0));
  CHECK_THROWS_AS(newtonian_lagrangian(sys), PreconditionError);

  sys = harmonic_system();
  sys.vector_potential = {ScalarField::constant(0.0)};
  CHECK_THROWS_AS(newtonian_lagrangian(sys), DimensionError);

  sys = harmonic_system();
  sys.kinetic = SymTensorField::scaled_identity(2, -1.0);
  CHECK_THROWS_AS(newtonian_lagrangian(sys), PreconditionError);

  sys = harmonic_system();
  sys.domain = Box{{-1.0}, {1.0}};
  CHECK_THROWS_AS(newtonian_lagrangian(sys), DimensionError);

  sys = harmonic_system();
  sys.light_speed = 0.0;
  CHECK_THROWS_AS(newtonian_lagrangian(sys), PreconditionError);

  sys = harmonic_system();
  sys.potential = ScalarField::parse("q3");
  CHECK_THROWS_AS(newtonian_lagrangian(sys), DimensionError);
}

TEST_CASE("geodesic Lagrangian families on a flat metric") {
  StationaryMetric met = flat_metric_1d();
  GeodesicSelector sel{1.0, 1.0};

  auto quad = geodesic_lagrangian(met, sel, GeodesicForm::quadratic);
  CHECK(quad->dof() == 2);
  CHECK(!quad->homogeneous_deg1());
  Vec x = {0.0, 0.0};
  Vec u = {2.0, 1.0};
  CHECK(quad->eval(x, u, 0.0) == doctest::Approx(-1.5).epsilon(1e-14));

  // the value cannot depend on the cyclic time coordinate
  Vec x_shift = {0.7, 0.0};
  CHECK(quad->eval(x_shift, u, 0.0) == doctest::Approx(-1.5).epsilon(1e-14));

  auto timeform = geodesic_lagrangian(met, sel, GeodesicForm::sqrt_time);
  CHECK(timeform->dof() == 1);
  Vec xs = {0.0};
  Vec vs = {0.6};
  CHECK(timeform->eval(xs, vs, 0.0) == doctest::Approx(-0.8).epsilon(1e-14));
  Vec fast = {1.5};
  CHECK_THROWS_AS(timeform->eval(xs, fast, 0.0), DomainError);

  auto arc = geodesic_lagrangian(met, sel, GeodesicForm::homogeneous_sqrt);
  CHECK(arc->dof() == 2);
  CHECK(arc->homogeneous_deg1());
  CHECK(arc->eval(x, u, 0.0) ==
        doctest::Approx(-std::sqrt(3.0)).epsilon(1e-14));
  Vec lambdas = {0.3, 1.7, 4.0};
  CHECK(homogeneity_deviation(*arc, x, u, 0.0, lambdas) < 1e-12);

  // light speed and mass scalings of the time-parametrized form
  GeodesicSelector heavy{2.0, 1.0};
  auto arc2 = geodesic_lagrangian(met, heavy, GeodesicForm::homogeneous_sqrt);
  CHECK(arc2->eval(x, u, 0.0) ==
        doctest::Approx(-2.0 * std::sqrt(3.0)).epsilon(1e-14));
  GeodesicSelector quick{1.0, 2.0};
  auto timef2 = geodesic_lagrangian(met, quick, GeodesicForm::sqrt_time);
  Vec v12 = {1.2};
  CHECK(timef2->eval(xs, v12, 0.0) == doctest::Approx(-3.2).epsilon(1e-14));

  // square-root families need a positive mass; the quadratic one does not
  GeodesicSelector light{0.0, 1.0};
  CHECK_THROWS_AS(geodesic_lagrangian(met, light, GeodesicForm::sqrt_time),
                  PreconditionError);
  CHECK_THROWS_AS(
      geodesic_lagrangian(met, light, GeodesicForm::homogeneous_sqrt),
      PreconditionError);
  CHECK_NOTHROW(geodesic_lagrangian(met, light, GeodesicForm::quadratic));
  CHECK(mass_shell_level(met, light) == 0.0);
  CHECK(mass_shell_level(met, heavy) == doctest::Approx(-2.0));
}

TEST_CASE("metric validation and signature conventions") {
  StationaryMetric met = flat_metric_1d();
  met.g.set(1, 1, ScalarField::constant(1.0));  // (+, +): not Lorentzian
  CHECK_THROWS_AS(validate_metric(met), PreconditionError);

  met = flat_metric_1d();
  met.epsilon = 0.5;
  CHECK_THROWS_AS(validate_metric(met), PreconditionError);

  met = flat_metric_1d();
  met.g.set(0, 0, ScalarField::constant(-1.0));
  CHECK_THROWS_AS(validate_metric(met), PreconditionError);

  // the opposite signature convention works in the geometric core
  StationaryMetric opp;
  opp.g = SymTensorField::identity(3);
  opp.g.set(0, 0, ScalarField::constant(-1.0));
  opp.epsilon = -1.0;
  opp.spatial_domain = box2(-5, 5, -5, 5);
  opp.label = "opposite";
  CHECK_NOTHROW(validate_metric(opp));
  GeodesicSelector heavy{2.0, 1.0};
  CHECK(mass_shell_level(opp, heavy) == doctest::Approx(2.0));
  auto quad = geodesic_lagrangian(opp, heavy, GeodesicForm::quadratic);
  Vec x = {0.0, 0.0, 0.0};
  Vec u = {2.0, 1.0, 0.0};
  CHECK(quad->eval(x, u, 0.0) == doctest::Approx(1.5).epsilon(1e-14));
  SymTensorField gam = space_metric(opp);
  Vec xsp = {0.0, 0.0};
  CHECK(gam.eval<double>(xsp)(0, 0) == doctest::Approx(1.0));

  // but the closed-form layer rejects it
  CHECK_THROWS_AS(fermat_form(opp, heavy, 1.0), PreconditionError);
  CHECK_THROWS_AS(routh_time_form(opp, 1.0), PreconditionError);
  CHECK_THROWS_AS(metric_to_newtonian(opp, heavy, 1.0, 0.0),
                  PreconditionError);
}

TEST_CASE("spatial metric extraction") {
  StationaryMetric met = drift_metric_1d();
  SymTensorField gam = space_metric(met);
  CHECK(gam.size() == 1);
  Vec x = {0.3};
  // gamma_11 = -(g_11 - g_01^2 / g_00) = -(-1 - 0.25) = 1.25
  CHECK(gam.eval<double>(x)(0, 0) == doctest::Approx(1.25).epsilon(1e-14));

  StationaryMetric flat = flat_metric_2d();
  SymTensorField gf = space_metric(flat);
  Vec x2 = {0.7, -0.4};
  Mat m = gf.eval<double>(x2);
  CHECK(m(0, 0) == doctest::Approx(1.0));
  CHECK(m(1, 1) == doctest::Approx(1.0));
  CHECK(std::fabs(m(0, 1)) < 1e-15);
}

TEST_CASE("future-directed time velocity for a level") {
  StationaryMetric met = flat_metric_1d();
  Vec x = {0.0};
  Vec v = {1.0};
  // -1/2 (w^2 - 1) = -1/2  =>  w = sqrt(2)
  CHECK(future_time_velocity(met, x, v, -0.5) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // the null level returns the cone root
  CHECK(future_time_velocity(met, x, v, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  Vec v2 = {2.0};
  CHECK(future_time_velocity(met, x, v2, 0.0) ==
        doctest::Approx(2.0).epsilon(1e-14));

  Vec rest = {0.0};
  CHECK_THROWS_AS(future_time_velocity(met, x, rest, 1.0), DomainError);
  Vec bad = {1.0, 2.0};
  CHECK_THROWS_AS(future_time_velocity(met, x, bad, 0.0), DimensionError);

  // a drift metric shifts the root: g00 w^2 + 2 g01 v w + g11 v^2 = -2 L
  StationaryMetric dm = drift_metric_1d();
  double w = future_time_velocity(dm, x, v, -0.5);
  CHECK(w * w + w - 1.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed-form fixed-energy reduction of a mechanical system") {
  NewtonianSystem sys = harmonic_system();
  auto closed = maupertuis_form(sys, 2.0);
  CHECK(closed->homogeneous_deg1());
  CHECK(closed->energy_value() == 2.0);

  Vec q0 = {0.0, 0.0};
  Vec xp = {3.0, 4.0};
  CHECK(closed->eval(q0, xp, 0.0) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(closed->theta_prime(q0, xp) == doctest::Approx(2.5).epsilon(1e-14));

  // agreement with the numerically reduced system across the domain
  auto lag = newtonian_lagrangian(sys);
  JacobiReduction red = jacobi_reduce(lag, 2.0);
  KroneckerSequence seq(4);
  for (std::size_t k = 0; k < 25; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-1.0 + 2.0 * pt[0], -1.0 + 2.0 * pt[1]};
    Vec v = {0.2 + pt[2], -1.2 + 2.0 * pt[3]};
    if (std::hypot(v[0], v[1]) < 0.1) continue;
    double want = closed->eval(q, v, 0.0);
    CHECK(red.reduced->eval(q, v, 0.0) ==
          doctest::Approx(want).epsilon(1e-10));
    CHECK(red.reduced->theta_prime(q, v) ==
          doctest::Approx(closed->theta_prime(q, v)).epsilon(1e-10));
  }

  // kinetically forbidden region
  auto starved = maupertuis_form(harmonic_system(), 0.5);
  Vec far_q = {1.1, 0.0};
  Vec dir = {1.0, 0.0};
  CHECK_THROWS_AS(starved->eval(far_q, dir, 0.0), DomainError);
  CHECK_THROWS_AS(starved->theta_prime(far_q, dir), DomainError);

  // a covector potential term passes straight through
  NewtonianSystem mag = harmonic_system();
  mag.vector_potential = {ScalarField::parse("-q2"), ScalarField::parse("q1")};
  auto magf = maupertuis_form(mag, 2.0);
  Vec qm = {0.5, 0.0};
  Vec vm = {0.0, 1.0};
  double base = maupertuis_form(harmonic_system(), 2.0)->eval(qm, vm, 0.0);
  CHECK(magf->eval(qm, vm, 0.0) == doctest::Approx(base + 0.5).epsilon(1e-12));
}

TEST_CASE("closed-form fixed-energy reduction of the time-parametrized "
          "geodesic form") {
  StationaryMetric met = flat_metric_1d();
  GeodesicSelector sel{1.0, 1.0};
  auto closed = fermat_form(met, sel, 1.25);
  CHECK(closed->homogeneous_deg1());

  Vec x = {0.0};
  Vec xp = {1.0};
  CHECK(closed->eval(x, xp, 0.0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(closed->theta_prime(x, xp) ==
        doctest::Approx(5.0 / 3.0).epsilon(1e-14));

  // numeric reduction of the time-parametrized form matches on a curved one
  StationaryMetric sm = sloped_metric_1d();
  auto sqrt_lag = geodesic_lagrangian(sm, sel, GeodesicForm::sqrt_time);
  JacobiReduction red = jacobi_reduce(sqrt_lag, 1.25);
  auto curved = fermat_form(sm, sel, 1.25);
  KroneckerSequence seq(2);
  for (std::size_t k = 0; k < 25; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-0.9 + 1.8 * pt[0]};
    Vec v = {0.25 + 1.5 * pt[1]};
    double want = curved->eval(q, v, 0.0);
    CHECK(red.reduced->eval(q, v, 0.0) ==
          doctest::Approx(want).epsilon(1e-10));
    CHECK(red.reduced->theta_prime(q, v) ==
          doctest::Approx(curved->theta_prime(q, v)).epsilon(1e-10));
  }

  // the massless case is the light-path arc functional
  StationaryMetric flat2 = flat_metric_2d();
  GeodesicSelector photon{0.0, 1.0};
  auto light = fermat_form(flat2, photon, 1.0);
  Vec x2 = {0.0, 0.0};
  Vec xp2 = {3.0, 4.0};
  CHECK(light->eval(x2, xp2, 0.0) == doctest::Approx(5.0).epsilon(1e-14));

  // drift term: L_E = sqrt(spread gamma x'x') - E g_01 x' / (c g00)
  auto driftf = fermat_form(drift_metric_1d(), photon, 1.0);
  CHECK(driftf->eval(x, xp, 0.0) ==
        doctest::Approx(std::sqrt(1.25) - 0.5).epsilon(1e-14));

  // energy below the local rest energy is unreachable
  GeodesicSelector heavy{2.0, 1.0};
  auto trapped = fermat_form(met, heavy, 1.0);
  CHECK_THROWS_AS(trapped->eval(x, xp, 0.0), DomainError);
  CHECK_THROWS_AS(trapped->theta_prime(x, xp), DomainError);
  CHECK_THROWS_AS(fermat_form(met, sel, -1.0), PreconditionError);
  CHECK_THROWS_AS(fermat_form(met, sel, 0.0), PreconditionError);
}

TEST_CASE("closed-form cyclic time reduction of the quadratic form") {
  StationaryMetric met = flat_metric_1d();
  auto red1 = routh_time_form(met, 1.0);
  Vec x = {0.0};
  Vec v = {2.0};
  CHECK(red1->eval(x, v, 0.0) == doctest::Approx(2.5).epsilon(1e-14));

  StationaryMetric half = flat_metric_1d();
  half.g.set(0, 0, ScalarField::constant(0.5));
  auto red2 = routh_time_form(half, 1.0);
  Vec rest = {0.0};
  CHECK(red2->eval(x, rest, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  StationaryMetric dm = drift_metric_1d();
  auto red3 = routh_time_form(dm, 2.0);
  Vec v3 = {3.0};
  CHECK(red3->eval(x, v3, 0.0) == doctest::Approx(10.625).epsilon(1e-14));

  // agreement with the numerical cyclic reduction of the quadratic form
  GeodesicSelector sel{1.0, 1.0};
  StationaryMetric sm = sloped_metric_1d();
  auto quad = geodesic_lagrangian(sm, sel, GeodesicForm::quadratic);
  RouthReduction rred = routh_reduce(quad, 0, -1.1);
  auto closed = routh_time_form(sm, -1.1);
  KroneckerSequence seq(2);
  for (std::size_t k = 0; k < 25; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-0.9 + 1.8 * pt[0]};
    Vec w = {-1.0 + 2.0 * pt[1]};
    double want = closed->eval(q, w, 0.0);
    CHECK(rred.reduced->eval(q, w, 0.0) ==
          doctest::Approx(want).epsilon(1e-10));
  }

  // projected conservation law: a mass-shell state with momentum p0 obeys
  // -1/2 gamma v v + p0^2 / (2 g00) = 1/2 m^2 c^2
  GeodesicSelector heavy{1.3, 1.0};
  const double level = mass_shell_level(sm, heavy);
  SymTensorField gam = space_metric(sm);
  for (std::size_t k = 0; k < 8; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-0.9 + 1.8 * pt[0]};
    Vec v = {0.3 + 1.2 * pt[1]};
    double w0 = future_time_velocity(sm, q, v, level);
    Mat g = sm.g.eval<double>(q);
    double p0 = -g(0, 0) * w0 - g(0, 1) * v[0];
    Mat gm = gam.eval<double>(q);
    double lhs = -0.5 * gm(0, 0) * v[0] * v[0] +
                 p0 * p0 / (2.0 * g(0, 0));
    CHECK(lhs == doctest::Approx(0.5 * heavy.mass * heavy.mass)
                     .epsilon(1e-12));
  }
}

TEST_CASE("reading a metric as a mechanical system and back") {
  GeodesicSelector sel{1.0, 1.0};
  StationaryMetric dm = drift_metric_1d();

  NewtonianSystem sys = metric_to_newtonian(dm, sel, 2.0, 0.7);
  CHECK(sys.dof() == 1);
  Vec x = {0.3};
  // e = gamma = 1.25, A = -(E / coupling) g01/g00 = -1, V = E' + 1/2 - E^2/2
  CHECK(sys.kinetic.eval<double>(x)(0, 0) == doctest::Approx(1.25));
  REQUIRE(sys.vector_potential.size() == 1);
  CHECK(sys.vector_potential[0].eval<double>(x) == doctest::Approx(-1.0));
  CHECK(sys.potential.eval<double>(x) ==
        doctest::Approx(0.7 + 0.5 - 2.0).epsilon(1e-14));

  // the Maupertuis form of the reading is the Fermat form of the metric
  auto fermat = fermat_form(dm, sel, 2.0);
  auto maup = maupertuis_form(sys, 0.7);
  KroneckerSequence seq(2);
  for (std::size_t k = 0; k < 16; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-2.0 + 4.0 * pt[0]};
    Vec v = {0.2 + 1.6 * pt[1]};
    CHECK(maup->eval(q, v, 0.0) ==
          doctest::Approx(fermat->eval(q, v, 0.0)).epsilon(1e-13));
  }

  // round trip restores the metric components
  StationaryMetric back = newtonian_to_metric(sys, sel, 2.0, 0.7);
  for (std::size_t k = 0; k < 16; ++k) {
    Vec pt = seq.point(k);
    Vec q = {-2.0 + 4.0 * pt[0]};
    Mat g0 = dm.g.eval<double>(q);
    Mat g1 = back.g.eval<double>(q);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(g1(i, j) == doctest::Approx(g0(i, j)).epsilon(1e-13));
  }

  // gravitational lift of the attracting-center system
  NewtonianSystem kep = kepler_system();
  StationaryMetric lifted = newtonian_to_metric(kep, sel, 1.0, -0.5);
  Vec q20 = {2.0, 0.0};
  Mat gl = lifted.g.eval<double>(q20);
  CHECK(gl(0, 0) == doctest::Approx(1.0).epsilon(1e-14));  // r/2 at r = 2
  CHECK(gl(1, 1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::fabs(gl(0, 1)) < 1e-15);
  Vec q11 = {1.0, 1.0};
  CHECK(lifted.g.eval<double>(q11)(0, 0) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-13));

  // and reading the lift back restores the potential
  NewtonianSystem kback = metric_to_newtonian(lifted, sel, 1.0, -0.5);
  CHECK(kback.vector_potential.empty());
  for (std::size_t k = 0; k < 8; ++k) {
    Vec pt = seq.point(k);
    Vec q = {0.5 + 1.2 * pt[0], 0.5 + 1.2 * pt[1]};
    CHECK(kback.potential.eval<double>(q) ==
          doctest::Approx(kep.potential.eval<double>(q)).epsilon(1e-13));
    CHECK(kback.kinetic.eval<double>(q)(0, 0) == doctest::Approx(1.0));
    CHECK(kback.kinetic.eval<double>(q)(1, 1) == doctest::Approx(1.0));
  }

  CHECK_THROWS_AS(newtonian_to_metric(kep, sel, 0.0, -0.5),
                  PreconditionError);
  GeodesicSelector odd{1.0, 3.0};
  CHECK_THROWS_AS(newtonian_to_metric(kep, odd, 1.0, -0.5),
                  PreconditionError);
  CHECK_THROWS_AS(metric_to_newtonian(dm, sel, 2.0, 0.7, 0.0),
                  PreconditionError);
}

TEST_CASE("numeric fixed-level reduction of the quadratic form matches the "
          "arc functional") {
  StationaryMetric met = sloped_metric_1d();
  GeodesicSelector sel{1.0, 1.0};
  auto quad = geodesic_lagrangian(met, sel, GeodesicForm::quadratic);
  auto arc = geodesic_lagrangian(met, sel, GeodesicForm::homogeneous_sqrt);
  const double level = mass_shell_level(met, sel);

  JacobiReduction red = jacobi_reduce(quad, level);
  CHECK(red.reduced->homogeneous_deg1());

  KroneckerSequence seq(3);
  for (std::size_t k = 0; k < 20; ++k) {
    Vec pt = seq.point(k);
    Vec xq = {-0.9 + 1.8 * pt[0]};
    Vec x = {0.0, xq[0]};
    Vec v = {-0.8 + 1.6 * pt[2]};
    double w = future_time_velocity(met, xq, v, level);
    Vec u = {w * (1.0 + pt[1]), v[0] * (1.0 + pt[1])};
    double want = arc->eval(x, u, 0.0);
    CHECK(red.reduced->eval(x, u, 0.0) ==
          doctest::Approx(want).epsilon(1e-10));
  }
}
