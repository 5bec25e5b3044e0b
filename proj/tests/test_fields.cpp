#include "doctest.h"

#include <cmath>
#include <vector>

#include "varidyn/fields.hpp"
#include "varidyn/rng.hpp"

using namespace varidyn;

TEST_CASE("partials match hand-computed derivatives") {
  ScalarField f = ScalarField::parse("q1^2*q2 + sin(q1)");
  Vec q = {0.7, 1.3};
  CHECK(f(q) == doctest::Approx(0.49 * 1.3 + std::sin(0.7)));
  CHECK(f.partial(q, 0) ==
        doctest::Approx(2.0 * 0.7 * 1.3 + std::cos(0.7)).epsilon(1e-14));
  CHECK(f.partial(q, 1) == doctest::Approx(0.49).epsilon(1e-14));
  CHECK(f.partial2(q, 0, 0) ==
        doctest::Approx(2.0 * 1.3 - std::sin(0.7)).epsilon(1e-14));
  CHECK(f.partial2(q, 0, 1) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(f.partial2(q, 1, 0) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(f.partial2(q, 1, 1) == doctest::Approx(0.0));

  Vec g = f.gradient(q);
  CHECK(g.size() == 2);
  CHECK(g[0] == doctest::Approx(f.partial(q, 0)));
  CHECK_THROWS_AS(f.partial(q, 5), DimensionError);
}

TEST_CASE("dual partials agree with finite differences on random polynomials") {
  // Random dense polynomials of total degree <= 4 in three coordinates.
  SplitMix64 rng(2024);
  const double step = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Expr poly = Expr::constant(rng.uniform(-1.0, 1.0));
    for (int term = 0; term < 5; ++term) {
      int e1 = static_cast<int>(rng.uniform01() * 3.0);
      int e2 = static_cast<int>(rng.uniform01() * 3.0);
      int e3 = static_cast<int>(rng.uniform01() * 2.0);
      Expr mono = Expr::constant(rng.uniform(-2.0, 2.0));
      if (e1 > 0) mono = mono * pow(Expr::coordinate(0), double(e1));
      if (e2 > 0) mono = mono * pow(Expr::coordinate(1), double(e2));
      if (e3 > 0) mono = mono * pow(Expr::coordinate(2), double(e3));
      poly = poly + mono;
    }
    ScalarField f(poly);
    Vec q = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
             rng.uniform(-1.5, 1.5)};
    for (std::size_t i = 0; i < 3; ++i) {
      Vec qp = q, qm = q;
      qp[i] += step;
      qm[i] -= step;
      double fd = (f(qp) - f(qm)) / (2.0 * step);
      double ad = f.partial(q, i);
      double scale = std::max({1.0, std::fabs(fd), std::fabs(ad)});
      CHECK(std::fabs(ad - fd) / scale < 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 3000);
}

TEST_CASE("definiteness classification") {
  Mat pd(2, 2);
  pd(0, 0) = 2.0;
  pd(0, 1) = pd(1, 0) = 0.5;
  pd(1, 1) = 3.0;
  CHECK(is_positive_definite(pd));

  Mat indef(2, 2);
  indef(0, 0) = 1.0;
  indef(0, 1) = indef(1, 0) = 2.0;
  indef(1, 1) = 1.0;
  CHECK_FALSE(is_positive_definite(indef));

  Mat zero(2, 2);
  CHECK_FALSE(is_positive_definite(zero));

  Mat semi(2, 2);
  semi(0, 0) = 1.0;
  semi(1, 1) = 1e-20;
  CHECK_FALSE(is_positive_definite(semi));

  Mat m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = -2.0;
  m(2, 2) = -3.0;
  Inertia in = matrix_inertia(m);
  CHECK(in.positive == 1);
  CHECK(in.negative == 2);
  CHECK(in.zero == 0);
  CHECK(is_lorentzian(m, 1.0));
  CHECK_FALSE(is_lorentzian(m, -1.0));

  Mat flipped(3, 3);
  flipped(0, 0) = -1.0;
  flipped(1, 1) = 1.0;
  flipped(2, 2) = 1.0;
  CHECK(is_lorentzian(flipped, -1.0));
}

TEST_CASE("tensor fields evaluate symmetrically and validate definiteness") {
  SymTensorField g(2);
  g.set(0, 0, ScalarField::parse("1 + q1^2"));
  g.set(0, 1, ScalarField::parse("q1*q2"));
  g.set(1, 1, ScalarField::constant(2.0));
  CHECK(g.complete());
  CHECK(g.min_arity() == 2);

  Vec q = {0.5, 1.0};
  Mat m = g.eval<double>(std::span<const double>(q));
  CHECK(m(0, 0) == doctest::Approx(1.25));
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m(1, 0) == m(0, 1));
  CHECK(m(1, 1) == doctest::Approx(2.0));

  Mat checked =
      g.eval_positive<double>(std::span<const double>(q), "kinetic tensor");
  CHECK(checked(0, 0) == doctest::Approx(1.25));

  SymTensorField bad(2);
  bad.set(0, 0, ScalarField::constant(1.0));
  bad.set(0, 1, ScalarField::constant(5.0));
  bad.set(1, 1, ScalarField::constant(1.0));
  CHECK_THROWS_AS(
      bad.eval_positive<double>(std::span<const double>(q), "kinetic tensor"),
      DomainError);

  SymTensorField incomplete(2);
  incomplete.set(0, 0, ScalarField::constant(1.0));
  CHECK_FALSE(incomplete.complete());
  CHECK_THROWS_AS(incomplete.entry(0, 1), PreconditionError);

  SymTensorField id = SymTensorField::identity(3);
  Vec q3 = {0.0, 0.0, 0.0};
  Mat mi = id.eval<double>(std::span<const double>(q3));
  CHECK(mi(0, 0) == 1.0);
  CHECK(mi(0, 1) == 0.0);
}

TEST_CASE("quadratic forms and dot products") {
  Mat m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = m(1, 0) = 0.5;
  m(1, 1) = -1.0;
  Vec a = {1.0, 2.0};
  Vec b = {3.0, -1.0};
  // a.M.b = 1*1*3 + 1*0.5*(-1) + 2*0.5*3 + 2*(-1)*(-1) = 3 - 0.5 + 3 + 2
  CHECK(quad_form<double>(m, a, b) == doctest::Approx(7.5));
  CHECK(dot_product<double>(a, b) == doctest::Approx(1.0));
  Vec c = {1.0};
  CHECK_THROWS_AS(dot_product<double>(a, c), DimensionError);
}
