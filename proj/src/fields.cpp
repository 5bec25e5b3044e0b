#include "varidyn/fields.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace varidyn {

double ScalarField::partial(ConstSpan q, std::size_t i) const {
  if (i >= q.size()) throw DimensionError("derivative index out of range");
  std::vector<D1> qq(q.size());
  for (std::size_t k = 0; k < q.size(); ++k)
    qq[k] = D1(q[k], k == i ? 1.0 : 0.0);
  return expr_.eval<D1>(qq).b;
}

double ScalarField::partial2(ConstSpan q, std::size_t i, std::size_t j) const {
  if (i >= q.size() || j >= q.size())
    throw DimensionError("derivative index out of range");
  std::vector<D2> qq(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    qq[k].a = D1(q[k], k == i ? 1.0 : 0.0);
    qq[k].b = D1(k == j ? 1.0 : 0.0, 0.0);
  }
  return expr_.eval<D2>(qq).b.b;
}

Vec ScalarField::gradient(ConstSpan q) const {
  Vec g(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) g[i] = partial(q, i);
  return g;
}

namespace {

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

}  // namespace

Inertia matrix_inertia(const Mat& m) {
  if (m.rows() != m.cols())
    throw DimensionError("inertia of a non-square matrix");
  Eigen::MatrixXd e = to_eigen(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw SolverError("eigenvalue computation failed");
  const auto& ev = solver.eigenvalues();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    scale = std::max(scale, std::fabs(ev[i]));
  double tol = 1e-12 * std::max(scale, 1e-300);
  Inertia inertia;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > tol)
      ++inertia.positive;
    else if (ev[i] < -tol)
      ++inertia.negative;
    else
      ++inertia.zero;
  }
  return inertia;
}

bool is_positive_definite(const Mat& m) {
  if (m.rows() != m.cols())
    throw DimensionError("definiteness of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return false;

  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) return false;

  // Fast path: symmetric elimination without pivoting. All pivots clearly
  // positive proves definiteness; any pivot clearly negative disproves it;
  // borderline pivots defer to the eigenvalue route.
  Mat w = m;
  const double tol = 1e-13 * scale;
  bool borderline = false;
  for (std::size_t k = 0; k < n && !borderline; ++k) {
    double piv = w(k, k);
    if (piv <= tol) {
      if (piv < -tol) return false;
      borderline = true;
      break;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = w(i, k) / piv;
      for (std::size_t j = k + 1; j < n; ++j) w(i, j) -= f * w(k, j);
    }
  }
  if (!borderline) return true;

  Inertia inertia = matrix_inertia(m);
  return inertia.positive == static_cast<int>(n);
}

bool is_lorentzian(const Mat& m, double epsilon) {
  if (m.rows() != m.cols() || m.rows() < 2)
    throw DimensionError("signature check needs a square matrix of size >= 2");
  Mat scaled = m;
  for (double& v : scaled.data()) v *= epsilon;
  Inertia inertia = matrix_inertia(scaled);
  return inertia.positive == 1 && inertia.zero == 0 &&
         inertia.negative == static_cast<int>(m.rows()) - 1;
}

SymTensorField SymTensorField::identity(std::size_t size) {
  return scaled_identity(size, 1.0);
}

SymTensorField SymTensorField::scaled_identity(std::size_t size,
                                               double factor) {
  SymTensorField t(size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = i; j < size; ++j)
      t.set(i, j, ScalarField::constant(i == j ? factor : 0.0));
  return t;
}

std::size_t SymTensorField::tri_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (j >= size_) throw DimensionError("tensor index out of range");
  // row-major upper triangle: row i starts after i full rows minus the
  // triangle below the diagonal
  return i * size_ - i * (i + 1) / 2 + j;
}

void SymTensorField::set(std::size_t i, std::size_t j, ScalarField f) {
  entries_[tri_index(i, j)] = std::move(f);
}

const ScalarField& SymTensorField::entry(std::size_t i, std::size_t j) const {
  const ScalarField& f = entries_[tri_index(i, j)];
  if (!f.valid())
    throw PreconditionError("tensor entry was never defined");
  return f;
}

bool SymTensorField::complete() const {
  if (size_ == 0) return false;
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const ScalarField& f) { return f.valid(); });
}

std::size_t SymTensorField::min_arity() const {
  std::size_t a = 0;
  for (const ScalarField& f : entries_)
    if (f.valid()) a = std::max(a, f.min_arity());
  return a;
}

}  // namespace varidyn
