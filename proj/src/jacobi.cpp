#include "varidyn/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varidyn/rng.hpp"

namespace varidyn {

namespace {

/// Fallback seed hunt for energy profiles that blow up at the edge of their
/// velocity domain: the general-purpose search ladder can step across a
/// feasible band narrower than one octave without noticing the sign change,
/// so walk a finer geometric grid and bisect toward the feasibility edge.
template <typename F>
std::optional<double> hunt_rescale_seed(F& f, double seed) {
  const double half_octave = std::sqrt(2.0);
  double prev_s = 0.0;
  std::optional<double> prev_f;
  bool have_prev = false;
  for (int j = -100; j <= 100; ++j) {
    const double s = seed * std::pow(half_octave, j);
    std::optional<double> fs = detail::try_eval(f, s);
    if (have_prev) {
      if (prev_f && fs && (*prev_f > 0.0) != (*fs > 0.0))
        return std::fabs(*prev_f) < std::fabs(*fs) ? prev_s : s;
      if (prev_f.has_value() != fs.has_value()) {
        double bad = prev_f ? s : prev_s;
        double good = prev_f ? prev_s : s;
        double fgood = prev_f ? *prev_f : *fs;
        for (int it = 0; it < 120; ++it) {
          const double mid = 0.5 * (bad + good);
          if (mid == bad || mid == good) break;
          std::optional<double> fm = detail::try_eval(f, mid);
          if (!fm) {
            bad = mid;
            continue;
          }
          if ((*fm > 0.0) != (fgood > 0.0)) return mid;
          good = mid;
          fgood = *fm;
        }
      }
    }
    prev_s = s;
    prev_f = fs;
    have_prev = true;
  }
  return std::nullopt;
}

/// Solve G(x, x'/s) = E for s > 0 at the primal level and enforce the
/// residual bound relative to the energy scale.
ScalarRoot solve_rescale(const EnergyFn& energy, double E, const Vec& x,
                         const Vec& xp, double seed, double energy_tol) {
  if (x.size() != energy.dof() || xp.size() != energy.dof())
    throw DimensionError(
        "state dimension differs from the energy profile's degree-of-freedom "
        "count");
  double dir = 0.0;
  for (double c : xp) dir += c * c;
  if (dir == 0.0)
    throw DegenerateInputError(
        "rescale solve is undefined for a zero direction");

  auto f = [&](double s) {
    Vec w(xp.size());
    for (std::size_t i = 0; i < xp.size(); ++i) w[i] = xp[i] / s;
    return energy.eval(x, w, 0.0) - E;
  };
  std::vector<D1> xd = lift_span<double>(x);
  auto df = [&](double s) {
    D1 sd(s, 1.0);
    std::vector<D1> wd(xp.size());
    for (std::size_t i = 0; i < xp.size(); ++i) wd[i] = D1(xp[i], 0.0) / sd;
    return energy.eval(xd, wd, D1(0.0, 0.0)).b;
  };
  RootOptions ropt;
  ropt.seed = seed;
  ropt.abs_tol = energy_tol * (1.0 + std::fabs(E));
  ropt.positive_only = true;
  constexpr const char* kForbidden =
      "the energy level is unreachable along the given direction "
      "(kinetically forbidden region)";
  ScalarRoot root;
  try {
    root = solve_scalar_root(f, df, ropt);
  } catch (const NoBracketError&) {
    std::optional<double> rescue = hunt_rescale_seed(f, ropt.seed);
    if (!rescue) throw DomainError(kForbidden);
    ropt.seed = *rescue;
    try {
      root = solve_scalar_root(f, df, ropt);
    } catch (const NoBracketError&) {
      throw DomainError(kForbidden);
    }
  }
  double residual = std::fabs(f(root.x));
  if (!(residual <= ropt.abs_tol))
    throw SolverError("rescale factor matched the energy level only to a "
                      "residual of " +
                      std::to_string(residual));
  return root;
}

/// Sample a state deterministically: positions across the domain box,
/// velocities in [-1, 1].
void sample_state(const KroneckerSequence& seq, std::size_t k, const Box& box,
                  Vec& q, Vec& v) {
  const std::size_t n = box.dim();
  Vec pt = seq.point(k);
  q.resize(n);
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * pt[i];
    v[i] = -1.0 + 2.0 * pt[n + i];
  }
}

/// Require at least one sampled state where the given probe succeeds;
/// reports the last failure otherwise.
template <typename Probe>
void spot_check(const LagrangianFn& lag, int checks, const char* task,
                Probe&& probe) {
  const std::size_t n = lag.dof();
  KroneckerSequence seq(2 * n);
  std::string last = "no state sampled";
  Vec q, v;
  const int budget = std::max(1, std::min(checks, 8));
  for (int k = 0; k < budget; ++k) {
    sample_state(seq, static_cast<std::size_t>(k), lag.domain(), q, v);
    try {
      probe(q, v);
      return;
    } catch (const Error& e) {
      last = e.what();
    }
  }
  throw PreconditionError(std::string(task) +
                          " failed on every sampled state; last error: " +
                          last);
}

const LagrangianPtr& check_reduce_source(const LagrangianPtr& lag) {
  if (!lag)
    throw PreconditionError("fixed-energy reduction requires a Lagrangian");
  if (!lag->time_independent())
    throw PreconditionError(
        "fixed-energy reduction requires a time-independent Lagrangian");
  if (lag->homogeneous_deg1())
    throw PreconditionError(
        "fixed-energy reduction of a degree-one homogeneous Lagrangian is "
        "degenerate: its energy function vanishes identically");
  return lag;
}

const LagrangianPtr& check_lift_path(const LagrangianPtr& path) {
  if (!path)
    throw PreconditionError("fixed-energy lift requires a path Lagrangian");
  if (!path->homogeneous_deg1())
    throw PreconditionError(
        "fixed-energy lift requires a degree-one homogeneous path "
        "Lagrangian");
  if (!path->time_independent())
    throw PreconditionError(
        "fixed-energy lift requires a time-independent path Lagrangian");
  return path;
}

}  // namespace

// ------------------------------------------------------------- reduction

JacobiReducedLagrangian::JacobiReducedLagrangian(LagrangianPtr original,
                                                 double E, JacobiOptions opt)
    : LagrangianEval(check_reduce_source(original)->dof(),
                     /*time_independent=*/true, /*homogeneous_deg1=*/true,
                     check_reduce_source(original)->domain(),
                     check_reduce_source(original)->label() + ":jacobi"),
      original_(std::move(original)),
      energy_(energy_function(original_)),
      E_(E),
      opt_(opt) {}

double JacobiReducedLagrangian::theta_prime(ConstSpan x, ConstSpan xp) const {
  return solve_primal(Vec(x.begin(), x.end()), Vec(xp.begin(), xp.end())).x;
}

ScalarRoot JacobiReducedLagrangian::solve_primal(const Vec& x,
                                                 const Vec& xp) const {
  return solve_rescale(*energy_, E_, x, xp, opt_.seed, opt_.energy_tol);
}

JacobiReduction jacobi_reduce(LagrangianPtr original, double E,
                              const JacobiOptions& opt) {
  auto reduced =
      std::make_shared<const JacobiReducedLagrangian>(original, E, opt);
  spot_check(*reduced, opt.spot_checks,
             "reaching the requested energy level",
             [&](const Vec& q, const Vec& v) { (void)reduced->eval(q, v, 0.0); });
  return JacobiReduction{std::move(original), E, std::move(reduced)};
}

// ------------------------------------------------------------------ lift

InverseJacobiLagrangian::InverseJacobiLagrangian(
    LagrangianPtr path, EnergyPtr energy, double E,
    std::optional<SymTensorField> metric, JacobiOptions opt)
    : LagrangianEval(check_lift_path(path)->dof(), /*time_independent=*/true,
                     /*homogeneous_deg1=*/false, check_lift_path(path)->domain(),
                     check_lift_path(path)->label() + ":jacobi-lift"),
      path_(std::move(path)),
      energy_(std::move(energy)),
      E_(E),
      metric_(std::move(metric)),
      opt_(opt) {
  if (!energy_)
    throw PreconditionError("fixed-energy lift requires an energy profile");
  if (energy_->dof() != dof())
    throw DimensionError(
        "energy profile dimension differs from the path Lagrangian's");
  if (metric_) {
    if (metric_->size() != dof())
      throw DimensionError(
          "reference metric dimension differs from the path Lagrangian's");
    if (!metric_->complete())
      throw PreconditionError("reference metric has unset entries");
  }
  if (opt_.rho0 < 0.0)
    throw PreconditionError(
        "ray antiderivative anchor must be positive, or zero for the "
        "per-point default");
}

double InverseJacobiLagrangian::theta_prime(ConstSpan x, ConstSpan v) const {
  return solve_primal(Vec(x.begin(), x.end()), Vec(v.begin(), v.end())).x;
}

ScalarRoot InverseJacobiLagrangian::solve_primal(const Vec& x,
                                                 const Vec& v) const {
  return solve_rescale(*energy_, E_, x, v, opt_.seed, opt_.energy_tol);
}

std::shared_ptr<const InverseJacobiLagrangian> inverse_jacobi(
    LagrangianPtr path, EnergyPtr energy, double E,
    std::optional<SymTensorField> metric, const JacobiOptions& opt) {
  auto lifted = std::make_shared<const InverseJacobiLagrangian>(
      std::move(path), std::move(energy), E, std::move(metric), opt);
  spot_check(*lifted, opt.spot_checks, "evaluating the fixed-energy lift",
             [&](const Vec& q, const Vec& v) { (void)lifted->eval(q, v, 0.0); });
  return lifted;
}

// -------------------------------------------------------- ray antiderivative

AntiderivativeI::AntiderivativeI(EnergyPtr energy, Vec x, Vec c, double rho0,
                                 QuadratureOptions quad)
    : energy_(std::move(energy)),
      x_(std::move(x)),
      c_(std::move(c)),
      rho0_(rho0),
      quad_(quad) {
  if (!energy_)
    throw PreconditionError("ray antiderivative requires an energy profile");
  if (x_.size() != energy_->dof() || c_.size() != energy_->dof())
    throw DimensionError(
        "ray antiderivative point/direction dimension differs from the "
        "energy profile's");
  if (!(rho0_ > 0.0))
    throw PreconditionError("ray antiderivative anchor must be positive");
}

double AntiderivativeI::operator()(double rho) const {
  if (!(rho > 0.0))
    throw PreconditionError("ray antiderivative argument must be positive");
  auto f = [&](double sigma) {
    Vec w(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) w[i] = c_[i] * sigma;
    return energy_->eval(x_, w, 0.0) / (sigma * sigma);
  };
  return adaptive_simpson<double>(f, rho0_, rho, quad_);
}

// ------------------------------------------------------------- free solve

double solve_theta_prime(const EnergyFn& energy, double E, ConstSpan x,
                         ConstSpan xp, double seed, double energy_tol) {
  return solve_rescale(energy, E, Vec(x.begin(), x.end()),
                       Vec(xp.begin(), xp.end()), seed, energy_tol)
      .x;
}

// ------------------------------------------------------ time reconstruction

namespace {

/// Fourth-order first derivative of uniformly spaced samples; cyclic
/// stencils for closed sequences, one-sided five-point stencils at open
/// ends.
std::vector<Vec> fd4_derivative(const std::vector<Vec>& p, bool closed,
                                double h) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(p.size());
  const std::size_t dim = p.front().size();
  std::vector<Vec> out(p.size(), Vec(dim));
  auto at = [&](std::ptrdiff_t k) -> const Vec& {
    return p[static_cast<std::size_t>(((k % n) + n) % n)];
  };
  const double w = 1.0 / (12.0 * h);
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      double dv;
      if (closed || (k >= 2 && k + 2 < n)) {
        dv = (at(k - 2)[d] - 8.0 * at(k - 1)[d] + 8.0 * at(k + 1)[d] -
              at(k + 2)[d]) *
             w;
      } else if (k == 0) {
        dv = (-25.0 * p[0][d] + 48.0 * p[1][d] - 36.0 * p[2][d] +
              16.0 * p[3][d] - 3.0 * p[4][d]) *
             w;
      } else if (k == 1) {
        dv = (-3.0 * p[0][d] - 10.0 * p[1][d] + 18.0 * p[2][d] -
              6.0 * p[3][d] + p[4][d]) *
             w;
      } else if (k + 2 == n) {
        const std::size_t m = p.size() - 1;
        dv = -(-3.0 * p[m][d] - 10.0 * p[m - 1][d] + 18.0 * p[m - 2][d] -
               6.0 * p[m - 3][d] + p[m - 4][d]) *
             w;
      } else {
        const std::size_t m = p.size() - 1;
        dv = -(-25.0 * p[m][d] + 48.0 * p[m - 1][d] - 36.0 * p[m - 2][d] +
               16.0 * p[m - 3][d] - 3.0 * p[m - 4][d]) *
             w;
      }
      out[static_cast<std::size_t>(k)][d] = dv;
    }
  }
  return out;
}

struct TimeTable {
  std::vector<Vec> xp;  ///< parameter derivatives of the samples
  Vec theta;            ///< rescale factor at each sample (wrap appended)
  Vec t;                ///< cumulative time offsets from the first sample
};

TimeTable build_times(const EnergyFn& energy, double E,
                      const std::vector<Vec>& pts, bool closed, double h,
                      const TimeReconstructOptions& opt) {
  TimeTable table;
  table.xp = fd4_derivative(pts, closed, h);
  const std::size_t n = pts.size();
  table.theta.resize(closed ? n + 1 : n);
  for (std::size_t k = 0; k < n; ++k)
    table.theta[k] =
        solve_rescale(energy, E, pts[k], table.xp[k], opt.seed, 1e-12).x;
  if (closed) table.theta[n] = table.theta[0];
  table.t = cumulative_integral_uniform(table.theta, h);
  return table;
}

}  // namespace

Trajectory reconstruct_time(const JacobiReduction& red, const Orbit& orbit,
                            double t0, const TimeReconstructOptions& opt) {
  if (!red.original || !red.reduced)
    throw PreconditionError(
        "time reconstruction requires a populated reduction");
  const std::size_t n = orbit.points.size();
  if (n < 9)
    throw UndersampledError(
        "time reconstruction needs at least 9 uniform samples along the "
        "orbit");
  const std::size_t dim = red.original->dof();
  for (const Vec& p : orbit.points)
    if (p.size() != dim)
      throw DimensionError("orbit dimension differs from the reduced "
                           "system's coordinate count");
  if (!(orbit.length > 0.0))
    throw DegenerateInputError(
        "time reconstruction requires an orbit of positive length");

  const EnergyFn& energy = *red.reduced->energy();
  const double E = red.E;
  const double h = orbit.closed ? orbit.length / static_cast<double>(n)
                                : orbit.length / static_cast<double>(n - 1);

  TimeTable fine = build_times(energy, E, orbit.points, orbit.closed, h, opt);

  // Step-halving consistency estimate: redo the reconstruction on every
  // second sample and compare the times at the shared parameter values. A
  // closed orbit with an odd sample count degrades to an open half-grid.
  const bool coarse_closed = orbit.closed && n % 2 == 0;
  std::vector<Vec> coarse_pts;
  for (std::size_t k = 0; k < n; k += 2) coarse_pts.push_back(orbit.points[k]);
  TimeTable coarse =
      build_times(energy, E, coarse_pts, coarse_closed, 2.0 * h, opt);
  double disc = 0.0;
  for (std::size_t k = 0; k < coarse.t.size(); ++k)
    disc = std::max(disc, std::fabs(fine.t[2 * k] - coarse.t[k]));
  if (disc > opt.time_check_tol)
    throw UndersampledError(
        "orbit sampling too coarse for time reconstruction: halving the "
        "resolution shifts the times by " +
        std::to_string(disc));

  const std::size_t total = fine.t.size();  // n, or n + 1 with the wrap node
  std::vector<TrajectoryNode> nodes(total);
  double max_residual = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t src = (k == n) ? 0 : k;
    Vec q = orbit.points[src];
    Vec v(dim);
    for (std::size_t d = 0; d < dim; ++d)
      v[d] = fine.xp[src][d] / fine.theta[src];
    max_residual =
        std::max(max_residual, std::fabs(energy.eval(q, v, 0.0) - E));
    Vec a = el_acceleration(*red.original, q, v, 0.0);
    nodes[k] = TrajectoryNode{t0 + fine.t[k], std::move(q), std::move(v),
                              std::move(a), Vec{}, Vec{}};
  }
  if (max_residual > opt.energy_check_tol)
    throw SolverError(
        "reconstructed motion leaves the energy level: max |G - E| = " +
        std::to_string(max_residual));
  return Trajectory(std::move(nodes), /*forward=*/true);
}

}  // namespace varidyn
