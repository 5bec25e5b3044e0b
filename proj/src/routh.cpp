#include "varidyn/routh.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "varidyn/rng.hpp"

namespace varidyn {

namespace {

Box reduced_domain(const LagrangianFn& lag, std::size_t cyclic_index) {
  if (lag.dof() < 2)
    throw PreconditionError(
        "cyclic reduction needs at least two coordinates");
  if (cyclic_index >= lag.dof())
    throw DimensionError("cyclic coordinate index out of range");
  return drop_box_coordinate(lag.domain(), cyclic_index);
}

Box lifted_domain(const LagrangianFn& reduced, std::size_t cyclic_index,
                  const RouthOptions& opt) {
  if (cyclic_index > reduced.dof())
    throw DimensionError("cyclic coordinate index out of range");
  if (!(opt.cyclic_lo < opt.cyclic_hi))
    throw PreconditionError("empty domain for the reinstated coordinate");
  return prepend_box_coordinate(reduced.domain(), cyclic_index, opt.cyclic_lo,
                                opt.cyclic_hi);
}

/// Solve P0(q, w, v, t) = p0 for w at the primal level and enforce the
/// momentum residual bound.
ScalarRoot solve_momentum_match(const MomentumFn& momentum, ConstSpan q,
                                ConstSpan v, double t, double p0,
                                const RouthOptions& opt) {
  auto f = [&](double w) { return momentum.eval(q, w, v, t) - p0; };
  std::vector<D1> qd = lift_span<double>(q);
  std::vector<D1> vd = lift_span<double>(v);
  D1 td(t, 0.0);
  auto df = [&](double w) {
    return momentum.eval(qd, D1(w, 1.0), vd, td).b;
  };
  RootOptions ropt;
  ropt.seed = opt.seed;
  ScalarRoot root = solve_scalar_root(f, df, ropt);
  double residual = std::fabs(f(root.x));
  if (!(residual <= opt.momentum_tol * (1.0 + std::fabs(p0))))
    throw SolverError("cyclic momentum matched only to a residual of " +
                      std::to_string(residual));
  return root;
}

/// Sample a full state deterministically: positions across the domain box,
/// velocities in [-1, 1], time in [0, 1] when it matters.
void sample_state(const KroneckerSequence& seq, int k, const Box& box,
                  bool time_independent, Vec& q, Vec& v, double& t) {
  const std::size_t n = box.dim();
  Vec pt = seq.point(k);
  q.resize(n);
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * pt[i];
    v[i] = -1.0 + 2.0 * pt[n + i];
  }
  t = time_independent ? 0.0 : pt[2 * n];
}

void verify_cyclic_coordinate(const LagrangianFn& lag, std::size_t cyclic_index,
                              const RouthOptions& opt) {
  const std::size_t n = lag.dof();
  KroneckerSequence seq(2 * n + 1);
  int usable = 0;
  Vec q, v;
  double t = 0.0;
  const int checks = std::max(1, opt.spot_checks);
  for (int k = 0; k < checks; ++k) {
    sample_state(seq, k, lag.domain(), lag.time_independent(), q, v, t);
    Vec g;
    try {
      g = dLdq(lag, q, v, t);
    } catch (const DomainError&) {
      continue;  // sample outside the admissible set
    }
    ++usable;
    double scale = 1.0;
    for (double gi : g) scale = std::max(scale, std::fabs(gi));
    if (std::fabs(g[cyclic_index]) > opt.cyclic_tol * scale)
      throw PreconditionError(
          "coordinate q" + std::to_string(cyclic_index + 1) +
          " is not cyclic: |dL/dq| = " + std::to_string(g[cyclic_index]));
  }
  if (usable == 0)
    throw PreconditionError(
        "no admissible sample state found while checking for a cyclic "
        "coordinate");
}

/// Require at least one reduced-domain state where the momentum equation has
/// a solution; reports the last failure otherwise.
void spot_check_momentum_reach(const RouthReducedLagrangian& red,
                               const RouthOptions& opt) {
  const std::size_t n = red.dof();
  KroneckerSequence seq(2 * n + 1);
  std::string last = "no state sampled";
  Vec q, v;
  double t = 0.0;
  const int checks = std::max(1, std::min(opt.spot_checks, 8));
  for (int k = 0; k < checks; ++k) {
    sample_state(seq, k, red.domain(), red.time_independent(), q, v, t);
    try {
      (void)red.cyclic_velocity(q, v, t);
      return;
    } catch (const Error& e) {
      last = e.what();
    }
  }
  throw PreconditionError(
      std::string("the requested momentum value appears unreachable: ") +
      last);
}

void spot_check_lift(const CyclicLiftLagrangian& lift,
                     const RouthOptions& opt) {
  const std::size_t n = lift.dof();
  KroneckerSequence seq(2 * n + 1);
  std::string last = "no state sampled";
  Vec q, v;
  double t = 0.0;
  const int checks = std::max(1, std::min(opt.spot_checks, 8));
  for (int k = 0; k < checks; ++k) {
    sample_state(seq, k, lift.domain(), lift.time_independent(), q, v, t);
    try {
      (void)lift.eval(q, v, t);
      return;
    } catch (const Error& e) {
      last = e.what();
    }
  }
  throw PreconditionError(
      std::string("the lifted Lagrangian is nowhere evaluable: ") + last);
}

}  // namespace

RouthReducedLagrangian::RouthReducedLagrangian(LagrangianPtr original,
                                               std::size_t cyclic_index,
                                               double p0, RouthOptions opt)
    : LagrangianEval(original->dof() - 1, original->time_independent(),
                     original->homogeneous_deg1(),
                     reduced_domain(*original, cyclic_index),
                     original->label() + ":routh"),
      original_(std::move(original)),
      momentum_(cyclic_momentum_fn(original_, cyclic_index)),
      cyclic_index_(cyclic_index),
      p0_(p0),
      opt_(opt) {
  cyclic_ref_ = 0.5 * (original_->domain().lo[cyclic_index_] +
                       original_->domain().hi[cyclic_index_]);
}

ScalarRoot RouthReducedLagrangian::solve_primal(Vec q, Vec v, double t) const {
  return solve_momentum_match(*momentum_, q, v, t, p0_, opt_);
}

RouthReduction routh_reduce(LagrangianPtr lag, std::size_t cyclic_index,
                            double p0, const RouthOptions& opt) {
  if (!lag) throw PreconditionError("null Lagrangian");
  if (lag->dof() < 2)
    throw PreconditionError(
        "cyclic reduction needs at least two coordinates");
  if (cyclic_index >= lag->dof())
    throw DimensionError("cyclic coordinate index out of range");

  if (opt.verify_cyclic) verify_cyclic_coordinate(*lag, cyclic_index, opt);

  RouthReduction out;
  out.original = lag;
  out.cyclic_index = cyclic_index;
  out.p0 = p0;
  out.reduced = std::make_shared<RouthReducedLagrangian>(std::move(lag),
                                                         cyclic_index, p0, opt);
  spot_check_momentum_reach(*out.reduced, opt);
  return out;
}

double solve_cyclic_velocity(const LagrangianFn& lag, std::size_t cyclic_index,
                             double p0, ConstSpan q, ConstSpan v, double t,
                             const RouthOptions& opt) {
  if (lag.dof() < 2)
    throw PreconditionError(
        "cyclic reduction needs at least two coordinates");
  if (cyclic_index >= lag.dof())
    throw DimensionError("cyclic coordinate index out of range");
  if (q.size() != lag.dof() - 1 || v.size() != lag.dof() - 1)
    throw DimensionError(
        "remaining state must exclude exactly the cyclic coordinate");
  LagrangianPtr alias(std::shared_ptr<const LagrangianFn>{}, &lag);
  DerivedMomentum momentum(alias, cyclic_index);
  return solve_momentum_match(momentum, q, v, t, p0, opt).x;
}

CyclicLiftLagrangian::CyclicLiftLagrangian(LagrangianPtr reduced,
                                           MomentumPtr momentum,
                                           std::size_t cyclic_index, double p0,
                                           RouthOptions opt)
    : LagrangianEval(reduced->dof() + 1, reduced->time_independent(),
                     reduced->homogeneous_deg1(),
                     lifted_domain(*reduced, cyclic_index, opt),
                     reduced->label() + ":lift"),
      reduced_(std::move(reduced)),
      momentum_(std::move(momentum)),
      cyclic_index_(cyclic_index),
      p0_(p0),
      opt_(opt) {
  if (!momentum_) throw PreconditionError("null momentum profile");
  if (momentum_->dof() != reduced_->dof())
    throw DimensionError(
        "momentum profile dimension differs from the reduced Lagrangian");
}

ScalarRoot CyclicLiftLagrangian::solve_primal(Vec q, Vec v, double t) const {
  return solve_momentum_match(*momentum_, q, v, t, p0_, opt_);
}

LagrangianPtr inverse_routh(LagrangianPtr reduced, MomentumPtr momentum,
                            double p0, std::size_t cyclic_index,
                            const RouthOptions& opt) {
  if (!reduced) throw PreconditionError("null Lagrangian");
  auto lift = std::make_shared<CyclicLiftLagrangian>(
      std::move(reduced), std::move(momentum), cyclic_index, p0, opt);
  spot_check_lift(*lift, opt);
  return lift;
}

Trajectory drift_reconstruct(const RouthReduction& red, double cyclic_initial,
                             ConstSpan q_reduced, ConstSpan v_reduced,
                             double t0, double t1,
                             const IntegrateOptions& opt) {
  if (!red.reduced) throw PreconditionError("empty reduction");
  const RouthReducedLagrangian& R = *red.reduced;

  IntegrateOptions local = opt;
  const std::size_t channel = local.quadratures.size();
  local.quadratures.push_back([&R](ConstSpan q, ConstSpan v, double t) {
    return R.cyclic_velocity(q, v, t);
  });
  Trajectory base = integrate(R, q_reduced, v_reduced, t0, t1, local);

  std::vector<TrajectoryNode> nodes;
  nodes.reserve(base.nodes().size());
  const std::size_t i0 = red.cyclic_index;
  std::vector<D1> qd(R.dof()), vd(R.dof());
  for (const TrajectoryNode& nd : base.nodes()) {
    for (std::size_t i = 0; i < R.dof(); ++i) {
      qd[i] = D1(nd.q[i], nd.v[i]);
      vd[i] = D1(nd.v[i], nd.a[i]);
    }
    // w and its total time derivative along the run in one dual pass
    D1 w = R.cyclic_velocity_t<D1>(qd, vd, D1(nd.t, 1.0));
    TrajectoryNode full;
    full.t = nd.t;
    full.q = prepend_coordinate<double>(nd.q, i0,
                                        cyclic_initial + nd.quad[channel]);
    full.v = prepend_coordinate<double>(nd.v, i0, w.a);
    full.a = prepend_coordinate<double>(nd.a, i0, w.b);
    full.quad.assign(nd.quad.begin(), nd.quad.begin() + channel);
    full.quad_rate.assign(nd.quad_rate.begin(),
                          nd.quad_rate.begin() + channel);
    nodes.push_back(std::move(full));
  }
  return Trajectory(std::move(nodes), t1 > t0);
}

}  // namespace varidyn
