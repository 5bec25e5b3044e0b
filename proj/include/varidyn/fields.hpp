#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "varidyn/expression.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// A scalar function of the configuration point, defined by an expression.
/// Derivatives come from dual-number evaluation, not finite differences.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Expr e) : expr_(std::move(e)) {}

  static ScalarField parse(std::string_view text) {
    return ScalarField(Expr::parse(text));
  }
  static ScalarField constant(double v) {
    return ScalarField(Expr::constant(v));
  }

  bool valid() const { return expr_.valid(); }
  const Expr& expr() const { return expr_; }
  std::size_t min_arity() const { return expr_.min_arity(); }
  std::string str() const { return expr_.str(); }

  double operator()(ConstSpan q) const { return expr_.eval<double>(q); }

  template <typename T>
  T eval(std::span<const T> q) const {
    return expr_.eval<T>(q);
  }
  template <typename T>
  T eval(const std::vector<T>& q) const {
    return expr_.eval<T>(std::span<const T>(q.data(), q.size()));
  }

  /// First partial derivative with respect to coordinate i.
  double partial(ConstSpan q, std::size_t i) const;

  /// Second partial derivative with respect to coordinates i and j.
  double partial2(ConstSpan q, std::size_t i, std::size_t j) const;

  /// Gradient with respect to all coordinates of q.
  Vec gradient(ConstSpan q) const;

 private:
  Expr expr_;
};

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

template <typename T>
Mat primal_matrix(const MatT<T>& m) {
  Mat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = primal(m(i, j));
  return out;
}

/// Sylvester pivot test with an eigenvalue fallback on borderline pivots.
bool is_positive_definite(const Mat& m);

/// Signs of the eigenvalues of a symmetric matrix (law of inertia).
Inertia matrix_inertia(const Mat& m);

/// One positive and n negative eigenvalues of epsilon * m: the signature a
/// stationary spacetime metric must have.
bool is_lorentzian(const Mat& m, double epsilon);

/// A symmetric matrix of scalar fields (kinetic tensors, metric blocks).
class SymTensorField {
 public:
  SymTensorField() = default;
  explicit SymTensorField(std::size_t size)
      : size_(size), entries_(size * (size + 1) / 2) {}

  static SymTensorField identity(std::size_t size);
  static SymTensorField scaled_identity(std::size_t size, double factor);

  std::size_t size() const { return size_; }

  void set(std::size_t i, std::size_t j, ScalarField f);
  const ScalarField& entry(std::size_t i, std::size_t j) const;
  bool complete() const;
  std::size_t min_arity() const;

  template <typename T>
  MatT<T> eval(std::span<const T> q) const {
    MatT<T> m(size_, size_);
    for (std::size_t i = 0; i < size_; ++i)
      for (std::size_t j = i; j < size_; ++j) {
        T v = entry(i, j).eval<T>(q);
        m(i, j) = v;
        if (i != j) m(j, i) = v;
      }
    return m;
  }

  /// Evaluate and require positive definiteness of the primal matrix.
  template <typename T>
  MatT<T> eval_positive(std::span<const T> q, const char* what) const {
    MatT<T> m = eval<T>(q);
    if (!is_positive_definite(primal_matrix(m)))
      throw DomainError(std::string(what) +
                        " is not positive definite at the evaluation point");
    return m;
  }

 private:
  std::size_t tri_index(std::size_t i, std::size_t j) const;

  std::size_t size_ = 0;
  std::vector<ScalarField> entries_;  // upper triangle, row-major
};

template <typename T>
T dot_product(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size())
    throw DimensionError("dot product of vectors with different lengths");
  T acc{0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

template <typename T>
T quad_form(const MatT<T>& m, std::span<const T> a, std::span<const T> b) {
  if (m.rows() != a.size() || m.cols() != b.size())
    throw DimensionError("quadratic form with mismatched dimensions");
  T acc{0.0};
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      acc = acc + a[i] * m(i, j) * b[j];
  return acc;
}

}  // namespace varidyn
