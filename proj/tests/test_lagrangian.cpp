#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "varidyn/lagrangian.hpp"

using namespace varidyn;

namespace {

Box square(double half, std::size_t dim) {
  Box b;
  b.lo.assign(dim, -half);
  b.hi.assign(dim, half);
  return b;
}

// 1/2 |v|^2 - q1^2*q2
struct PolyPotential2D : LagrangianEval<PolyPotential2D> {
  PolyPotential2D()
      : LagrangianEval(2, true, false, square(5.0, 2), "poly-potential") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.5 * (v[0] * v[0] + v[1] * v[1]) - q[0] * q[0] * q[1];
  }
};

// 1/2 v^2 - 1/2 q^2
struct Harmonic1D : LagrangianEval<Harmonic1D> {
  Harmonic1D() : LagrangianEval(1, true, false, square(5.0, 1), "harmonic") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.5 * v[0] * v[0] - 0.5 * q[0] * q[0];
  }
};

// cyclic first coordinate: 1/2(v0^2 + v1^2) + v0*q2
struct CyclicCross : LagrangianEval<CyclicCross> {
  CyclicCross() : LagrangianEval(2, true, false, square(5.0, 2), "cyclic") {}
  template <typename T>
  T eval_t(std::span<const T> q, std::span<const T> v, const T&) const {
    return 0.5 * (v[0] * v[0] + v[1] * v[1]) + v[0] * q[1];
  }
};

// degree-one homogeneous: |v|
struct ArcLength2D : LagrangianEval<ArcLength2D> {
  ArcLength2D() : LagrangianEval(2, true, true, square(5.0, 2), "arc") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T&) const {
    return varidyn::sqrt(v[0] * v[0] + v[1] * v[1]);
  }
};

// explicit time dependence: 1/2 v^2 + v*t
struct TimeCross : LagrangianEval<TimeCross> {
  TimeCross() : LagrangianEval(1, false, false, square(5.0, 1), "time-cross") {}
  template <typename T>
  T eval_t(std::span<const T>, std::span<const T> v, const T& t) const {
    return 0.5 * v[0] * v[0] + v[0] * t;
  }
};

}  // namespace

TEST_CASE("derivative queries match hand-computed values") {
  PolyPotential2D lag;
  Vec q = {1.5, -0.5};
  Vec v = {2.0, 0.25};

  Vec pv = dLdv(lag, q, v, 0.0);
  CHECK(pv[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(pv[1] == doctest::Approx(0.25).epsilon(1e-14));

  Vec pq = dLdq(lag, q, v, 0.0);
  CHECK(pq[0] == doctest::Approx(-2.0 * 1.5 * -0.5).epsilon(1e-14));
  CHECK(pq[1] == doctest::Approx(-1.5 * 1.5).epsilon(1e-14));

  Mat h = d2Ldvdv(lag, q, v, 0.0);
  CHECK(h(0, 0) == doctest::Approx(1.0));
  CHECK(h(0, 1) == doctest::Approx(0.0));
  CHECK(h(1, 1) == doctest::Approx(1.0));

  CHECK(dLdt(lag, q, v, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("derived energy is v.p - L at every level") {
  auto lag = std::make_shared<PolyPotential2D>();
  DerivedEnergy energy(lag);
  Vec q = {1.5, -0.5};
  Vec v = {2.0, 0.25};
  double kinetic = 0.5 * (4.0 + 0.0625);
  double potential = -1.5 * 1.5 * -0.5;
  CHECK(energy.eval(q, v, 0.0) ==
        doctest::Approx(kinetic - potential).epsilon(1e-14));

  // dG/dq1 = dV/dq1 with V = q1^2 q2
  std::vector<D1> qd = {D1(1.5, 1.0), D1(-0.5, 0.0)};
  std::vector<D1> vd = {D1(2.0, 0.0), D1(0.25, 0.0)};
  D1 g = energy.eval(qd, vd, D1(0.0, 0.0));
  CHECK(g.b == doctest::Approx(2.0 * 1.5 * -0.5).epsilon(1e-14));

  // the cap: energy at the deepest level would need one level more
  std::vector<D4> q4 = {D4(1.5), D4(-0.5)};
  std::vector<D4> v4 = {D4(2.0), D4(0.25)};
  CHECK_THROWS_AS(energy.eval(q4, v4, D4(0.0)), PreconditionError);
}

TEST_CASE("derived cyclic momentum") {
  auto lag = std::make_shared<CyclicCross>();
  DerivedMomentum mom(lag, 0);
  CHECK(mom.dof() == 1);
  Vec q = {0.75};  // remaining coordinate (q2 of the full system)
  Vec v = {0.1};
  CHECK(mom.eval(q, 3.0, v, 0.0) == doctest::Approx(3.75).epsilon(1e-14));

  std::vector<D1> qd = {D1(0.75, 0.0)};
  std::vector<D1> vd = {D1(0.1, 0.0)};
  D1 m = mom.eval(qd, D1(3.0, 1.0), vd, D1(0.0, 0.0));
  CHECK(m.b == doctest::Approx(1.0).epsilon(1e-14));  // dP0/dw = 1

  CHECK_THROWS_AS(DerivedMomentum(lag, 5), DimensionError);
}

TEST_CASE("equations of motion solve and residual") {
  Harmonic1D h;
  Vec q = {0.3}, v = {1.1};
  Vec a = el_acceleration(h, q, v, 0.0);
  CHECK(a[0] == doctest::Approx(-0.3).epsilon(1e-13));
  Vec r = el_residual(h, q, v, a, 0.0);
  CHECK(std::fabs(r[0]) < 1e-13);

  TimeCross tc;
  Vec qt = {0.0}, vt = {2.0};
  Vec a2 = el_acceleration(tc, qt, vt, 5.0);
  CHECK(a2[0] == doctest::Approx(-1.0).epsilon(1e-13));

  PolyPotential2D p;
  Vec qp = {1.0, 2.0}, vp = {0.0, 0.0};
  Vec ap = el_acceleration(p, qp, vp, 0.0);
  CHECK(ap[0] == doctest::Approx(-4.0).epsilon(1e-13));  // -dV/dq1 = -2q1q2
  CHECK(ap[1] == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("homogeneous Lagrangians have a rank-deficient velocity Hessian") {
  ArcLength2D arc;
  Vec q = {0.0, 0.0};
  Vec v = {3.0, 4.0};
  HessianReport rep = velocity_hessian(arc, q, v, 0.0);
  CHECK(rep.rank == 1);
  CHECK(rep.singular_values.size() == 2);
  CHECK(rep.singular_values[0] >= rep.singular_values[1]);
  CHECK_THROWS_AS(el_acceleration(arc, q, v, 0.0), SingularMatrixError);

  PolyPotential2D p;
  CHECK(velocity_hessian(p, q, v, 0.0).rank == 2);

  Vec lambdas = {0.5, 2.0, 3.7};
  CHECK(homogeneity_deviation(arc, q, v, 0.0, lambdas) < 1e-14);
  CHECK(homogeneity_deviation(p, q, v, 0.0, lambdas) > 0.01);
  Vec bad = {-1.0};
  CHECK_THROWS_AS(homogeneity_deviation(arc, q, v, 0.0, bad),
                  PreconditionError);
}

TEST_CASE("dimension checks on evaluation") {
  Harmonic1D h;
  Vec q = {0.0, 0.0}, v = {0.0};
  CHECK_THROWS_AS(h.eval(q, v, 0.0), DimensionError);
}
