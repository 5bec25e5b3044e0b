#include "varidyn/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace varidyn {

namespace {

// Dormand-Prince 5(4) with the first-same-as-last property.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA2[1] = {1.0 / 5};
constexpr double kA3[2] = {3.0 / 40, 9.0 / 40};
constexpr double kA4[3] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double kA5[4] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561,
                           -212.0 / 729};
constexpr double kA6[5] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247,
                           49.0 / 176, -5103.0 / 18656};
constexpr double kA7[6] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84};
// kA7 doubles as the fifth-order weights; the embedded fourth-order ones:
constexpr double kB4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695,
                           393.0 / 640,       -92097.0 / 339200,
                           187.0 / 2100,      1.0 / 40};

struct Rhs {
  const LagrangianFn& lag;
  const std::vector<QuadratureChannel>& channels;
  std::size_t n;

  void operator()(double t, const Vec& y, Vec& dy) const {
    ConstSpan q(y.data(), n);
    ConstSpan v(y.data() + n, n);
    Vec a = el_acceleration(lag, q, v, t);
    dy.resize(y.size());
    for (std::size_t i = 0; i < n; ++i) {
      dy[i] = v[i];
      dy[n + i] = a[i];
    }
    for (std::size_t c = 0; c < channels.size(); ++c)
      dy[2 * n + c] = channels[c](q, v, t);
  }
};

double rms_scaled(const Vec& x, const Vec& sc) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = x[i] / sc[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double initial_step(const Rhs& rhs, double t0, const Vec& y, const Vec& k1,
                    double tol, double direction, double tspan) {
  Vec sc(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    sc[i] = tol + tol * std::fabs(y[i]);
  double d0 = rms_scaled(y, sc);
  double d1 = rms_scaled(k1, sc);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, tspan);

  Vec y1(y.size());
  Vec f1;
  double d2 = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (std::size_t i = 0; i < y.size(); ++i)
      y1[i] = y[i] + direction * h0 * k1[i];
    try {
      rhs(t0 + direction * h0, y1, f1);
      Vec df(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) df[i] = f1[i] - k1[i];
      d2 = rms_scaled(df, sc) / h0;
      break;
    } catch (const DomainError&) {
      h0 *= 1e-2;
    } catch (const SolverError&) {
      h0 *= 1e-2;
    } catch (const SingularMatrixError&) {
      h0 *= 1e-2;
    }
    if (attempt == 7) return std::min(h0, tspan);
  }
  double h1;
  if (std::max(d1, d2) <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
  return std::min({100.0 * h0, h1, tspan});
}

}  // namespace

Trajectory integrate(const LagrangianFn& lag, ConstSpan q0, ConstSpan v0,
                     double t0, double t1, const IntegrateOptions& opt) {
  const std::size_t n = lag.dof();
  if (q0.size() != n || v0.size() != n)
    throw DimensionError("initial state does not match the Lagrangian");
  if (t1 == t0) throw PreconditionError("empty integration window");
  if (!(opt.tol > 0.0))
    throw PreconditionError("integration tolerance must be positive");

  const std::size_t m = opt.quadratures.size();
  const std::size_t dim = 2 * n + m;
  const double direction = t1 > t0 ? 1.0 : -1.0;
  const double tspan = std::fabs(t1 - t0);
  const double hmin = 1e-14 * std::max({std::fabs(t0), std::fabs(t1), 1.0});

  Rhs rhs{lag, opt.quadratures, n};

  Vec y(dim, 0.0);
  std::copy(q0.begin(), q0.end(), y.begin());
  std::copy(v0.begin(), v0.end(), y.begin() + static_cast<long>(n));

  Vec k1;
  rhs(t0, y, k1);  // the initial state must be admissible

  double h = opt.h_init != 0.0 ? std::min(std::fabs(opt.h_init), tspan)
                               : initial_step(rhs, t0, y, k1, opt.tol,
                                              direction, tspan);

  Trajectory traj;
  traj.dof_ = n;
  traj.forward_ = direction > 0.0;

  auto push_node = [&](double t, const Vec& state, const Vec& deriv) {
    TrajectoryNode node;
    node.t = t;
    node.q.assign(state.begin(), state.begin() + static_cast<long>(n));
    node.v.assign(state.begin() + static_cast<long>(n),
                  state.begin() + static_cast<long>(2 * n));
    node.a.assign(deriv.begin() + static_cast<long>(n),
                  deriv.begin() + static_cast<long>(2 * n));
    node.quad.assign(state.begin() + static_cast<long>(2 * n), state.end());
    node.quad_rate.assign(deriv.begin() + static_cast<long>(2 * n),
                          deriv.end());
    traj.nodes_.push_back(std::move(node));
  };
  push_node(t0, y, k1);

  double t = t0;
  Vec k2, k3, k4, k5, k6, k7;
  Vec ystage(dim), ynew(dim), err(dim), sc(dim);

  std::size_t steps = 0;
  bool done = false;
  while (!done) {
    if (++steps > opt.max_steps)
      throw NonConvergenceError("integration step budget exhausted");

    double remaining = std::fabs(t1 - t);
    bool last = h >= remaining;
    double hs = direction * std::min(h, remaining);

    bool stage_failed = false;
    try {
      auto combine = [&](const double* a, int s) {
        const Vec* ks[6] = {&k1, &k2, &k3, &k4, &k5, &k6};
        for (std::size_t i = 0; i < dim; ++i) {
          double acc = 0.0;
          for (int j = 0; j < s; ++j) acc += a[j] * (*ks[j])[i];
          ystage[i] = y[i] + hs * acc;
        }
      };
      combine(kA2, 1);
      rhs(t + kC[1] * hs, ystage, k2);
      combine(kA3, 2);
      rhs(t + kC[2] * hs, ystage, k3);
      combine(kA4, 3);
      rhs(t + kC[3] * hs, ystage, k4);
      combine(kA5, 4);
      rhs(t + kC[4] * hs, ystage, k5);
      combine(kA6, 5);
      rhs(t + kC[5] * hs, ystage, k6);
      combine(kA7, 6);
      ynew = ystage;
      rhs(t + hs, ynew, k7);
    } catch (const DomainError&) {
      stage_failed = true;
    } catch (const SingularMatrixError&) {
      stage_failed = true;
    } catch (const SolverError&) {
      stage_failed = true;
    }

    if (stage_failed) {
      ++traj.steps_rejected_;
      h *= 0.25;
      if (h < hmin)
        throw SolverError(
            "step size underflow while avoiding an inadmissible region");
      continue;
    }

    const Vec* ks[7] = {&k1, &k2, &k3, &k4, &k5, &k6, &k7};
    for (std::size_t i = 0; i < dim; ++i) {
      double e = 0.0;
      for (int j = 0; j < 7; ++j) {
        double db = (j < 6 ? kA7[j] : 0.0) - kB4[j];
        e += db * (*ks[j])[i];
      }
      err[i] = hs * e;
      sc[i] = opt.tol + opt.tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
    }
    double errnorm = rms_scaled(err, sc);

    if (errnorm <= 1.0) {
      t = last ? t1 : t + hs;
      y = ynew;
      k1 = k7;  // first-same-as-last
      push_node(t, y, k1);
      ++traj.steps_accepted_;
      if (last) {
        done = true;
        break;
      }
      double factor = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
      h = std::fabs(hs) * std::clamp(factor, 0.2, 5.0);
    } else {
      ++traj.steps_rejected_;
      double factor = 0.9 * std::pow(errnorm, -0.2);
      h = std::fabs(hs) * std::clamp(factor, 0.2, 1.0);
      if (h < hmin)
        throw SolverError("step size underflow under the error tolerance");
    }
  }

  if (direction < 0.0)
    std::reverse(traj.nodes_.begin(), traj.nodes_.end());
  return traj;
}

Trajectory::Trajectory(std::vector<TrajectoryNode> nodes, bool forward) {
  if (nodes.size() < 2)
    throw PreconditionError("a trajectory needs at least two nodes");
  const std::size_t dof = nodes.front().q.size();
  const std::size_t channels = nodes.front().quad.size();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TrajectoryNode& nd = nodes[i];
    if (nd.q.size() != dof || nd.v.size() != dof || nd.a.size() != dof)
      throw DimensionError("trajectory nodes have inconsistent dimensions");
    if (nd.quad.size() != channels || nd.quad_rate.size() != channels)
      throw DimensionError("trajectory nodes have inconsistent channels");
    if (i > 0 && !(nodes[i - 1].t < nd.t))
      throw PreconditionError("trajectory node times must be ascending");
  }
  nodes_ = std::move(nodes);
  dof_ = dof;
  forward_ = forward;
  steps_accepted_ = nodes_.size() - 1;
  steps_rejected_ = 0;
}

std::size_t Trajectory::segment_index(double& t) const {
  if (nodes_.size() < 2)
    throw PreconditionError("trajectory has no extent");
  double lo = nodes_.front().t;
  double hi = nodes_.back().t;
  double slack = 1e-9 * std::max(1.0, hi - lo);
  if (t < lo - slack || t > hi + slack)
    throw DomainError("evaluation outside the trajectory window");
  t = std::clamp(t, lo, hi);
  std::size_t idx =
      static_cast<std::size_t>(
          std::upper_bound(nodes_.begin(), nodes_.end(), t,
                           [](double val, const TrajectoryNode& nd) {
                             return val < nd.t;
                           }) -
          nodes_.begin());
  if (idx == 0) return 0;
  if (idx >= nodes_.size()) return nodes_.size() - 2;
  return idx - 1;
}

namespace {

struct QuinticWeights {
  double w0, w1, w2, w3, w4, w5;
};

// Two-point quintic Hermite basis on s in [0, 1].
QuinticWeights quintic(double s) {
  double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  return {1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
          s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
          0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
          10.0 * s3 - 15.0 * s4 + 6.0 * s5,
          -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
          0.5 * (s3 - 2.0 * s4 + s5)};
}

struct CubicWeights {
  double w0, w1, w2, w3;
};

CubicWeights cubic(double s) {
  double s2 = s * s, s3 = s2 * s;
  return {2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2,
          s3 - s2};
}

}  // namespace

void Trajectory::state_at(double t, Vec& q, Vec& v) const {
  std::size_t i = segment_index(t);
  const TrajectoryNode& n0 = nodes_[i];
  const TrajectoryNode& n1 = nodes_[i + 1];
  double h = n1.t - n0.t;
  double s = (t - n0.t) / h;
  QuinticWeights qw = quintic(s);
  CubicWeights cw = cubic(s);
  q.resize(dof_);
  v.resize(dof_);
  for (std::size_t k = 0; k < dof_; ++k) {
    q[k] = qw.w0 * n0.q[k] + qw.w1 * h * n0.v[k] + qw.w2 * h * h * n0.a[k] +
           qw.w3 * n1.q[k] + qw.w4 * h * n1.v[k] + qw.w5 * h * h * n1.a[k];
    v[k] = cw.w0 * n0.v[k] + cw.w1 * h * n0.a[k] + cw.w2 * n1.v[k] +
           cw.w3 * h * n1.a[k];
  }
}

Vec Trajectory::position_at(double t) const {
  Vec q, v;
  state_at(t, q, v);
  return q;
}

Vec Trajectory::velocity_at(double t) const {
  Vec q, v;
  state_at(t, q, v);
  return v;
}

Vec Trajectory::quadratures_at(double t) const {
  std::size_t i = segment_index(t);
  const TrajectoryNode& n0 = nodes_[i];
  const TrajectoryNode& n1 = nodes_[i + 1];
  double h = n1.t - n0.t;
  double s = (t - n0.t) / h;
  CubicWeights cw = cubic(s);
  Vec out(n0.quad.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = cw.w0 * n0.quad[k] + cw.w1 * h * n0.quad_rate[k] +
             cw.w2 * n1.quad[k] + cw.w3 * h * n1.quad_rate[k];
  return out;
}

DriftReport monitor_conserved(const Trajectory& traj, const StateFunction& fn,
                              std::size_t samples) {
  const auto& nodes = traj.nodes();
  if (nodes.empty()) throw PreconditionError("empty trajectory");
  DriftReport report;
  report.reference = fn(nodes.front().q, nodes.front().v, nodes.front().t);

  for (const TrajectoryNode& nd : nodes) {
    double val = fn(nd.q, nd.v, nd.t);
    report.max_abs_drift =
        std::max(report.max_abs_drift, std::fabs(val - report.reference));
  }
  double t0 = traj.t_begin();
  double t1 = traj.t_end();
  Vec q, v;
  for (std::size_t i = 1; i + 1 < samples; ++i) {
    double t = t0 + (t1 - t0) * static_cast<double>(i) /
                        static_cast<double>(samples - 1);
    traj.state_at(t, q, v);
    double val = fn(q, v, t);
    report.max_abs_drift =
        std::max(report.max_abs_drift, std::fabs(val - report.reference));
  }
  return report;
}

Vec cumulative_integral_uniform(ConstSpan values, double h) {
  const std::size_t k = values.size();
  if (k < 4)
    throw UndersampledError(
        "cumulative integration needs at least four samples");
  Vec out(k, 0.0);
  // increments from the cubic through the four nearest samples
  out[1] = out[0] + h / 24.0 *
                        (9.0 * values[0] + 19.0 * values[1] -
                         5.0 * values[2] + values[3]);
  for (std::size_t i = 1; i + 2 < k; ++i)
    out[i + 1] = out[i] + h / 24.0 *
                              (-values[i - 1] + 13.0 * values[i] +
                               13.0 * values[i + 1] - values[i + 2]);
  out[k - 1] = out[k - 2] + h / 24.0 *
                                (9.0 * values[k - 1] + 19.0 * values[k - 2] -
                                 5.0 * values[k - 3] + values[k - 4]);
  return out;
}

}  // namespace varidyn
