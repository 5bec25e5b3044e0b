#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "varidyn/routh.hpp"

using namespace varidyn;

namespace {

Box box2(double lo0, double hi0, double lo1, double hi1) {
  return Box{{lo0, lo1}, {hi0, hi1}};
}

// quadratic-form Lagrangian with constant coefficients; first coordinate
// cyclic:  L = -1/2 (2 u0^2 + u0 u1 - u1^2)
struct QuadConst : LagrangianEval<QuadConst> {
  QuadConst() : LagrangianEval(2, true, false, box2(-5, 5, -5, 5), "qc") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T&) const {
    return -0.5 * (2.0 * v[0] * v[0] + v[0] * v[1] - v[1] * v[1]);
  }
};

// velocity coupling through a potential:  L = 1/2 (w^2 + v^2) + w x - x^2
struct CrossCoupled : LagrangianEval<CrossCoupled> {
  CrossCoupled()
      : LagrangianEval(2, true, false, box2(-5, 5, -5, 5), "cross") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.5 * (v[0] * v[0] + v[1] * v[1]) + v[0] * q[1] - q[1] * q[1];
  }
};

// nonlinear cyclic momentum:  L = 1/4 w^4 + 1/2 v^2 - x w,  dL/dw = w^3 - x
struct QuarticMomentum : LagrangianEval<QuarticMomentum> {
  QuarticMomentum()
      : LagrangianEval(2, true, false, box2(-5, 5, -0.5, 0.5), "quart") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.25 * powi(v[0], 4) + 0.5 * v[1] * v[1] - q[1] * v[0];
  }
};

// time-dependent but still cyclic in q1:  L = 1/2 (w^2 + v^2) + w t
struct TimeDrift : LagrangianEval<TimeDrift> {
  TimeDrift() : LagrangianEval(2, false, false, box2(-9, 9, -9, 9), "td") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T& t) const {
    return 0.5 * (v[0] * v[0] + v[1] * v[1]) + v[0] * t;
  }
};

// degree-one homogeneous arc functional on a constant indefinite form
struct FlatArc : LagrangianEval<FlatArc> {
  FlatArc() : LagrangianEval(2, true, true, box2(-5, 5, -5, 5), "arc") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T&) const {
    return -varidyn::sqrt(v[0] * v[0] - v[1] * v[1]);
  }
};

// static quadratic form with a position-dependent leading coefficient
struct StaticWell : LagrangianEval<StaticWell> {
  StaticWell() : LagrangianEval(2, true, false, box2(-5, 5, -2, 2), "well") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    T g00 = 1.0 + 0.5 * q[1] * q[1];
    return -0.5 * (g00 * v[0] * v[0] - v[1] * v[1]);
  }
};

// leading coefficient singular toward x = 1 (kept out of the domain box)
struct StaticHole : LagrangianEval<StaticHole> {
  StaticHole() : LagrangianEval(2, true, false, box2(-5, 5, 1.5, 3), "hole") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    T g00 = 1.0 - 1.0 / q[1];
    return -0.5 * (g00 * v[0] * v[0] - v[1] * v[1]);
  }
};

// bounded cyclic momentum dL/dw = w / sqrt(1 + w^2), range (-1, 1)
struct BoundedMomentum : LagrangianEval<BoundedMomentum> {
  BoundedMomentum()
      : LagrangianEval(2, true, false, box2(-5, 5, -5, 5), "bdd") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T&) const {
    return varidyn::sqrt(1.0 + v[0] * v[0]) + 0.5 * v[1] * v[1];
  }
};

// not cyclic in the first coordinate
struct NotCyclic : LagrangianEval<NotCyclic> {
  NotCyclic() : LagrangianEval(2, true, false, box2(-5, 5, -5, 5), "nc") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.5 * (v[0] * v[0] + v[1] * v[1]) - q[0] * q[0] * q[1];
  }
};

D1 seed1(double x) { return D1(x, 1.0); }
D2 seed2(double x) { return D2(seed1(x), D1{1.0}); }

}  // namespace

TEST_CASE("constant quadratic form reduces in closed form") {
  auto lag = std::make_shared<QuadConst>();
  const double p0 = -2.5;

  // dL/du0 = -(2 u0 + 0.5 u1) = -2.5 at u1 = 1  =>  u0 = 1
  Vec x = {0.3}, u1 = {1.0};
  CHECK(solve_cyclic_velocity(*lag, 0, p0, x, u1) ==
        doctest::Approx(1.0).epsilon(1e-12));

  RouthReduction red = routh_reduce(lag, 0, p0);
  CHECK(red.reduced->dof() == 1);
  CHECK(red.reduced->cyclic_index() == 0);
  CHECK(red.reduced->momentum_value() == p0);
  CHECK(red.reduced->time_independent());
  CHECK_FALSE(red.reduced->homogeneous_deg1());

  // R = L - u0 p0 = -1 + 2.5 = 1.5
  CHECK(red.reduced->eval(x, u1, 0.0) == doctest::Approx(1.5).epsilon(1e-12));

  // the reduced momentum equals the original one:
  // dR/du1 = dL/du1 = -(0.5 u0 - u1) = 0.5
  Vec p = dLdv(*red.reduced, x, u1, 0.0);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-11));

  // du0/du1 along the constraint = -g01/g00 = -0.25
  std::vector<D1> xd = {D1(0.3, 0.0)};
  std::vector<D1> vd = {D1(1.0, 1.0)};
  D1 w = red.reduced->cyclic_velocity_t<D1>(xd, vd, D1(0.0, 0.0));
  CHECK(w.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.b == doctest::Approx(-0.25).epsilon(1e-11));
}

TEST_CASE("coordinate-coupled reduction") {
  auto lag = std::make_shared<CrossCoupled>();
  const double p0 = 2.0;

  // dL/dw = w + x = 2 at x = 0.5  =>  w = 1.5
  Vec x = {0.5}, v = {1.0};
  CHECK(solve_cyclic_velocity(*lag, 0, p0, x, v) ==
        doctest::Approx(1.5).epsilon(1e-12));

  RouthReduction red = routh_reduce(lag, 0, p0);
  // R = 1/2 v^2 - 1/2 (p0 - x)^2 - x^2 = 0.5 - 1.125 - 0.25
  CHECK(red.reduced->eval(x, v, 0.0) ==
        doctest::Approx(-0.875).epsilon(1e-12));
}

TEST_CASE("nonlinear momentum: exact implicit derivatives") {
  auto lag = std::make_shared<QuarticMomentum>();
  const double p0 = 8.0;
  RouthReduction red = routh_reduce(lag, 0, p0);

  // w^3 - x = 8 at x = 0  =>  w = 2;  R = 4 + 1/2 v^2 - 16
  Vec x = {0.0}, v = {1.0};
  CHECK(red.reduced->cyclic_velocity(x, v, 0.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(red.reduced->eval(x, v, 0.0) ==
        doctest::Approx(-11.5).epsilon(1e-11));

  // envelope property: dR/dx = dL/dx at the matched velocity = -w = -2
  Vec gq = dLdq(*red.reduced, x, v, 0.0);
  CHECK(gq[0] == doctest::Approx(-2.0).epsilon(1e-11));

  // second derivative picks up the constraint response:
  // d2R/dx2 = -dw/dx = -1/3 (8 + x)^(-2/3) = -1/12
  std::vector<D2> xd = {seed2(0.0)};
  std::vector<D2> vd = {D2(D1(1.0, 0.0), D1(0.0, 0.0))};
  D2 r = red.reduced->eval(xd, vd, D2(0.0));
  CHECK(r.b.b == doctest::Approx(-1.0 / 12.0).epsilon(1e-10));

  // derivative cap: the implicit solve needs one spare dual level
  std::vector<D4> x4 = {D4(0.0)}, v4 = {D4(1.0)};
  CHECK_THROWS_AS(red.reduced->eval(x4, v4, D4(0.0)), PreconditionError);
}

TEST_CASE("lift rebuilds the original Lagrangian from momentum data") {
  auto lag = std::make_shared<QuarticMomentum>();
  const double p0 = 8.0;
  RouthReduction red = routh_reduce(lag, 0, p0);

  LagrangianPtr lift =
      inverse_routh(red.reduced, cyclic_momentum_fn(lag, 0), p0, 0);
  CHECK(lift->dof() == 2);

  // values agree with the original on arbitrary states
  for (double w : {-1.0, 0.4, 1.9, 3.0}) {
    for (double xv : {-0.4, 0.25}) {
      Vec q = {7.0, xv};  // first slot cyclic: value must not matter
      Vec vv = {w, 0.8};
      double expect = 0.25 * std::pow(w, 4) + 0.5 * 0.64 - xv * w;
      CHECK(lift->eval(q, vv, 0.0) ==
            doctest::Approx(expect).epsilon(1e-10));
      CHECK(lag->eval(q, vv, 0.0) == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  // first derivatives agree too (dLift/dw = momentum profile)
  Vec q = {0.0, 0.25}, vv = {1.5, 0.8};
  Vec grad = dLdv(*lift, q, vv, 0.0);
  CHECK(grad[0] == doctest::Approx(std::pow(1.5, 3) - 0.25).epsilon(1e-9));
  CHECK(grad[1] == doctest::Approx(0.8).epsilon(1e-9));

  // reducing the lift at the same momentum returns the reduced values
  RouthReduction again = routh_reduce(lift, 0, p0);
  Vec xs = {0.2}, vs = {0.9};
  CHECK(again.reduced->eval(xs, vs, 0.0) ==
        doctest::Approx(red.reduced->eval(xs, vs, 0.0)).epsilon(1e-10));
}

TEST_CASE("reduction of a degree-one homogeneous arc functional") {
  auto lag = std::make_shared<FlatArc>();
  const double p0 = -1.25;
  RouthOptions opt;
  opt.seed = 1.0;
  RouthReduction red = routh_reduce(lag, 0, p0, opt);
  CHECK(red.reduced->homogeneous_deg1());

  // dL/du0 = -u0/sqrt(u0^2 - u1^2) = -1.25  =>  u0 = (5/3) |u1|
  Vec x = {0.4}, v = {0.75};
  CHECK(red.reduced->cyclic_velocity(x, v, 0.0) ==
        doctest::Approx(1.25).epsilon(1e-11));
  // R = -1 + 1.25 * 1.25 = 0.5625 = 0.75 |u1|
  CHECK(red.reduced->eval(x, v, 0.0) ==
        doctest::Approx(0.5625).epsilon(1e-11));
  Vec vneg = {-0.6};
  CHECK(red.reduced->eval(x, vneg, 0.0) ==
        doctest::Approx(0.45).epsilon(1e-11));
}

TEST_CASE("static well: reduction value oracle") {
  auto lag = std::make_shared<StaticHole>();
  const double p0 = -1.0;
  RouthReduction red = routh_reduce(lag, 0, p0);
  // g00 = 1 - 1/x = 1/2 at x = 2; u0 = -p0/g00 = 2;
  // R = p0^2/(2 g00) + 1/2 u1^2 = 1 at u1 = 0
  Vec x = {2.0}, v = {0.0};
  CHECK(red.reduced->cyclic_velocity(x, v, 0.0) ==
        doctest::Approx(2.0).epsilon(1e-11));
  CHECK(red.reduced->eval(x, v, 0.0) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("drift reconstruction matches direct integration") {
  auto lag = std::make_shared<StaticWell>();
  const double p0 = -1.25;
  RouthReduction red = routh_reduce(lag, 0, p0);

  const double x0 = 0.6;
  const double u0_init = 1.25 / (1.0 + 0.5 * x0 * x0);
  Vec qr = {x0}, vr = {0.0};
  Trajectory drift = drift_reconstruct(red, 0.0, qr, vr, 0.0, 3.0);
  CHECK(drift.dof() == 2);

  Vec qf = {0.0, x0}, vf = {u0_init, 0.0};
  IntegrateOptions tight;
  tight.tol = 1e-13;
  Trajectory full = integrate(*lag, qf, vf, 0.0, 3.0, tight);

  for (double t : {0.5, 1.1, 2.0, 3.0}) {
    Vec qa = drift.position_at(t);
    Vec qb = full.position_at(t);
    CHECK(std::fabs(qa[0] - qb[0]) < 1e-8);
    CHECK(std::fabs(qa[1] - qb[1]) < 1e-8);
    Vec va = drift.velocity_at(t);
    Vec vb = full.velocity_at(t);
    CHECK(std::fabs(va[0] - vb[0]) < 1e-7);
    CHECK(std::fabs(va[1] - vb[1]) < 1e-7);
  }

  // the eliminated momentum is conserved along the direct run
  DriftReport mom = monitor_conserved(
      full,
      [&](ConstSpan q, ConstSpan v, double) {
        return -(1.0 + 0.5 * q[1] * q[1]) * v[0];
      });
  CHECK(mom.reference == doctest::Approx(p0).epsilon(1e-12));
  CHECK(mom.max_abs_drift < 1e-9);
}

TEST_CASE("time-dependent drift has a closed form") {
  auto lag = std::make_shared<TimeDrift>();
  const double p0 = 2.0;
  RouthReduction red = routh_reduce(lag, 0, p0);
  CHECK_FALSE(red.reduced->time_independent());

  // dL/dw = w + t = 2  =>  w(t) = 2 - t,  q0(t) = 2t - t^2/2
  Vec x = {0.1}, v = {0.4};
  Trajectory drift = drift_reconstruct(red, 0.0, x, v, 0.0, 3.0);
  for (double t : {0.5, 1.5, 2.5}) {
    CHECK(drift.position_at(t)[0] ==
          doctest::Approx(2.0 * t - 0.5 * t * t).epsilon(1e-9));
    CHECK(drift.position_at(t)[1] ==
          doctest::Approx(0.1 + 0.4 * t).epsilon(1e-9));
    CHECK(drift.velocity_at(t)[0] == doctest::Approx(2.0 - t).epsilon(1e-8));
  }
  CHECK(drift.nodes().back().a[0] == doctest::Approx(-1.0).epsilon(1e-8));

  // backward window: same closed form for negative times
  Trajectory back = drift_reconstruct(red, 0.0, x, v, 0.0, -2.0);
  CHECK_FALSE(back.forward());
  CHECK(back.position_at(-1.5)[0] ==
        doctest::Approx(-3.0 - 1.125).epsilon(1e-9));
}

TEST_CASE("reduction rejects bad inputs") {
  auto nc = std::make_shared<NotCyclic>();
  CHECK_THROWS_AS(routh_reduce(nc, 0, 1.0), PreconditionError);

  auto bdd = std::make_shared<BoundedMomentum>();
  CHECK_THROWS_AS(routh_reduce(bdd, 0, 2.0), PreconditionError);
  CHECK_THROWS_AS(routh_reduce(bdd, 7, 0.5), DimensionError);

  CHECK_THROWS_AS(routh_reduce(nullptr, 0, 1.0), PreconditionError);

  auto qc = std::make_shared<QuadConst>();
  Vec big = {1.0, 2.0};
  Vec one = {1.0};
  CHECK_THROWS_AS(solve_cyclic_velocity(*qc, 0, -2.5, big, one),
                  DimensionError);
}
