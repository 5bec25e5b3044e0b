#include "varidyn/lagrangian.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace varidyn {

namespace {

std::vector<D1> to_d1(ConstSpan x) {
  std::vector<D1> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = D1(x[i], 0.0);
  return out;
}

std::vector<D2> to_d2(ConstSpan x) {
  std::vector<D2> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = D2(D1(x[i], 0.0), D1(0.0, 0.0));
  return out;
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

}  // namespace

Vec dLdv(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  std::vector<D1> qd = to_d1(q);
  std::vector<D1> vd = to_d1(v);
  D1 td(t, 0.0);
  Vec grad(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    vd[i].b = 1.0;
    grad[i] = lag.eval(qd, vd, td).b;
    vd[i].b = 0.0;
  }
  return grad;
}

Vec dLdq(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  std::vector<D1> qd = to_d1(q);
  std::vector<D1> vd = to_d1(v);
  D1 td(t, 0.0);
  Vec grad(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    qd[i].b = 1.0;
    grad[i] = lag.eval(qd, vd, td).b;
    qd[i].b = 0.0;
  }
  return grad;
}

double dLdt(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  std::vector<D1> qd = to_d1(q);
  std::vector<D1> vd = to_d1(v);
  D1 td(t, 1.0);
  return lag.eval(qd, vd, td).b;
}

Mat d2Ldvdv(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  const std::size_t n = v.size();
  std::vector<D2> qd = to_d2(q);
  std::vector<D2> vd = to_d2(v);
  D2 td(D1(t, 0.0), D1(0.0, 0.0));
  Mat h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      vd[i].a.b = 1.0;
      vd[j].b.a = 1.0;
      double hij = lag.eval(qd, vd, td).b.b;
      vd[i].a.b = 0.0;
      vd[j].b.a = 0.0;
      h(i, j) = hij;
      h(j, i) = hij;
    }
  return h;
}

Mat d2Ldvdq(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  const std::size_t n = v.size();
  std::vector<D2> qd = to_d2(q);
  std::vector<D2> vd = to_d2(v);
  D2 td(D1(t, 0.0), D1(0.0, 0.0));
  Mat m(n, q.size());
  for (std::size_t i = 0; i < n; ++i) {
    vd[i].a.b = 1.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      qd[j].b.a = 1.0;
      m(i, j) = lag.eval(qd, vd, td).b.b;
      qd[j].b.a = 0.0;
    }
    vd[i].a.b = 0.0;
  }
  return m;
}

Vec d2Ldvdt(const LagrangianFn& lag, ConstSpan q, ConstSpan v, double t) {
  const std::size_t n = v.size();
  std::vector<D2> qd = to_d2(q);
  std::vector<D2> vd = to_d2(v);
  Vec out(n);
  D2 td(D1(t, 0.0), D1(1.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    vd[i].a.b = 1.0;
    out[i] = lag.eval(qd, vd, td).b.b;
    vd[i].a.b = 0.0;
  }
  return out;
}

HessianReport velocity_hessian(const LagrangianFn& lag, ConstSpan q,
                               ConstSpan v, double t) {
  HessianReport report;
  report.matrix = d2Ldvdv(lag, q, v, t);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(report.matrix));
  const auto& sv = svd.singularValues();
  report.singular_values.resize(static_cast<std::size_t>(sv.size()));
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    report.singular_values[static_cast<std::size_t>(i)] = sv[i];
  double top = sv.size() > 0 ? sv[0] : 0.0;
  report.rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-8 * top) ++report.rank;
  if (top == 0.0) report.rank = 0;
  return report;
}

ELSystem el_decompose(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                      double t) {
  const std::size_t n = lag.dof();
  ELSystem sys;
  sys.mass = d2Ldvdv(lag, q, v, t);
  sys.rhs = dLdq(lag, q, v, t);
  Mat vq = d2Ldvdq(lag, q, v, t);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sys.rhs[i] -= vq(i, j) * v[j];
  if (!lag.time_independent()) {
    Vec vt = d2Ldvdt(lag, q, v, t);
    for (std::size_t i = 0; i < n; ++i) sys.rhs[i] -= vt[i];
  }
  return sys;
}

Vec el_acceleration(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                    double t) {
  ELSystem sys = el_decompose(lag, q, v, t);
  Eigen::MatrixXd m = to_eigen(sys.mass);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible())
    throw SingularMatrixError(
        "velocity Hessian is singular; the equations of motion do not "
        "determine the acceleration");
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(sys.rhs.size()));
  for (std::size_t i = 0; i < sys.rhs.size(); ++i)
    rhs[static_cast<Eigen::Index>(i)] = sys.rhs[i];
  Eigen::VectorXd a = lu.solve(rhs);
  Vec out(sys.rhs.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a[static_cast<Eigen::Index>(i)];
  return out;
}

Vec el_residual(const LagrangianFn& lag, ConstSpan q, ConstSpan v, ConstSpan a,
                double t) {
  ELSystem sys = el_decompose(lag, q, v, t);
  Vec r(sys.rhs.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    double acc = -sys.rhs[i];
    for (std::size_t j = 0; j < a.size(); ++j) acc += sys.mass(i, j) * a[j];
    r[i] = acc;
  }
  return r;
}

double homogeneity_deviation(const LagrangianFn& lag, ConstSpan q, ConstSpan v,
                             double t, ConstSpan lambdas) {
  double base = lag.eval(q, v, t);
  double worst = 0.0;
  Vec scaled(v.size());
  for (double lam : lambdas) {
    if (!(lam > 0.0))
      throw PreconditionError("homogeneity scale factors must be positive");
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = lam * v[i];
    double lhs = lag.eval(q, scaled, t);
    double dev = std::fabs(lhs - lam * base) / (1.0 + std::fabs(lam * base));
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace varidyn
