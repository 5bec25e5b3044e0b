#include "varidyn/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "varidyn/errors.hpp"
#include "varidyn/integrate.hpp"
#include "varidyn/jacobi.hpp"
#include "varidyn/lagrangian.hpp"
#include "varidyn/orbit.hpp"
#include "varidyn/rng.hpp"
#include "varidyn/routh.hpp"
#include "varidyn/systems.hpp"

namespace varidyn {
namespace {

constexpr std::size_t kOrbitSamples = 512;
constexpr std::size_t kEpsScanSamples = 512;
constexpr double kTimeReconstructTol = 1e-6;

/// Rethrow library errors with the diagram stage prepended.
template <typename F>
auto tagged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const EdgeError&) {
    throw;
  } catch (const Error& e) {
    throw EdgeError(stage, e.what());
  }
}

double norm2(ConstSpan v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// ---- sample grids ---------------------------------------------------------

std::size_t grid_base(std::uint64_t seed) {
  // Keep the quasi-random index below 2^40 so k * alpha stays exact.
  return static_cast<std::size_t>((seed % (1ull << 20)) * (1ull << 20));
}

/// Quasi-random (q, v) samples across the scenario's declared boxes.
class SpatialGrid {
 public:
  explicit SpatialGrid(const ScenarioSpec& s)
      : seq_(2 * s.dof()),
        base_(grid_base(s.seed)),
        q_(s.grid_q),
        v_(s.grid_v) {}

  bool sample(std::size_t k, Vec& q, Vec& v) const {
    Vec pt = seq_.point(base_ + k);
    const std::size_t n = q_.dim();
    q.resize(n);
    v.resize(n);
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = q_.lo[i] + (q_.hi[i] - q_.lo[i]) * pt[i];
      v[i] = v_.lo[i] + (v_.hi[i] - v_.lo[i]) * pt[n + i];
      vmax = std::max(vmax, std::abs(v[i]));
    }
    return vmax > 1e-9;  // degenerate direction
  }

 private:
  KroneckerSequence seq_;
  std::size_t base_;
  Box q_;
  Box v_;
};

/// Quasi-random spacetime samples (x, u) with u future-directed and strictly
/// inside the light cone: u^0 = (1 + eta) w_null(q, v), eta in [0.15, 1.0],
/// where w_null is the future null-cone time velocity of the spatial
/// direction. Off-cone by a uniform relative margin for every mass, and the
/// cyclic x^0 gets its own sample dimension to witness independence.
class SpacetimeGrid {
 public:
  explicit SpacetimeGrid(const ScenarioSpec& s)
      : seq_(2 * s.dof() + 2),
        base_(grid_base(s.seed)),
        q_(s.grid_q),
        v_(s.grid_v),
        met_(&s.metric) {}

  bool sample(std::size_t k, Vec& x, Vec& u) const {
    Vec pt = seq_.point(base_ + k);
    const std::size_t n = q_.dim();
    Vec q(n), v(n);
    double vmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = q_.lo[i] + (q_.hi[i] - q_.lo[i]) * pt[i];
      v[i] = v_.lo[i] + (v_.hi[i] - v_.lo[i]) * pt[n + i];
      vmax = std::max(vmax, std::abs(v[i]));
    }
    if (vmax <= 1e-9) return false;
    const double x0 = -1.0 + 2.0 * pt[2 * n];
    const double eta = 0.15 + 0.85 * pt[2 * n + 1];
    const double w = future_time_velocity(*met_, q, v, 0.0);
    x.resize(n + 1);
    u.resize(n + 1);
    x[0] = x0;
    u[0] = (1.0 + eta) * w;
    for (std::size_t i = 0; i < n; ++i) {
      x[i + 1] = q[i];
      u[i + 1] = v[i];
    }
    return true;
  }

 private:
  KroneckerSequence seq_;
  std::size_t base_;
  Box q_;
  Box v_;
  const StationaryMetric* met_;
};

// ---- pointwise edge runner ------------------------------------------------

using PairFn = std::function<double(ConstSpan, ConstSpan)>;

struct EdgeTally {
  double max_disc = 0.0;
  std::size_t done = 0;
  std::size_t skipped = 0;
};

template <typename Grid>
EdgeTally tally_range(const Grid& grid, const PairFn& fa, const PairFn& fb,
                      std::size_t begin, std::size_t end) {
  EdgeTally t;
  Vec x, y;
  for (std::size_t k = begin; k < end; ++k) {
    if (!grid.sample(k, x, y)) {
      ++t.skipped;
      continue;
    }
    double a, b;
    try {
      a = fa(x, y);
      b = fb(x, y);
    } catch (const DomainError&) {
      ++t.skipped;
      continue;
    } catch (const SolverError&) {
      ++t.skipped;
      continue;
    } catch (const DegenerateInputError&) {
      ++t.skipped;
      continue;
    }
    t.max_disc = std::max(t.max_disc, std::abs(a - b));
    ++t.done;
  }
  return t;
}

/// Compare two presentations pointwise over the grid. Sample chunks run on
/// worker threads; the merged result (max + counts) does not depend on the
/// chunking, so reports stay byte-identical across machines.
template <typename Grid>
EdgeReport run_edge(const ScenarioSpec& s, const Grid& grid, std::string name,
                    std::string note, PairFn fa, PairFn fb) {
  EdgeReport rep;
  rep.name = std::move(name);
  rep.note = std::move(note);
  rep.tolerance = s.tol.lagrangian_edge;
  const std::size_t total = s.grid_points;

  unsigned hw = std::thread::hardware_concurrency();
  std::size_t chunks = hw == 0 ? 1 : std::min<std::size_t>(hw, 16);
  chunks = std::min(chunks, std::max<std::size_t>(total / 256, 1));

  EdgeTally sum;
  if (chunks <= 1) {
    sum = tally_range(grid, fa, fb, 0, total);
  } else {
    const std::size_t step = (total + chunks - 1) / chunks;
    std::vector<std::future<EdgeTally>> parts;
    for (std::size_t b = 0; b < total; b += step) {
      const std::size_t e = std::min(b + step, total);
      parts.push_back(std::async(std::launch::async, [&grid, &fa, &fb, b, e] {
        return tally_range(grid, fa, fb, b, e);
      }));
    }
    for (auto& p : parts) {
      EdgeTally t = p.get();
      sum.max_disc = std::max(sum.max_disc, t.max_disc);
      sum.done += t.done;
      sum.skipped += t.skipped;
    }
  }

  rep.max_discrepancy = sum.max_disc;
  rep.samples = sum.done;
  rep.skipped = sum.skipped;
  rep.pass = sum.done >= (total + 1) / 2 && sum.max_disc <= rep.tolerance;
  if (sum.done < (total + 1) / 2) {
    if (!rep.note.empty()) rep.note += "; ";
    rep.note += "more than half of the grid fell outside the admissible set";
  }
  return rep;
}

EdgeReport skipped_edge(const ScenarioSpec& s, std::string name,
                        std::string why) {
  EdgeReport rep;
  rep.name = std::move(name);
  rep.applicable = false;
  rep.note = std::move(why);
  rep.tolerance = s.tol.lagrangian_edge;
  rep.pass = true;
  return rep;
}

// ---- corner objects and integrated runs -----------------------------------

struct Corners {
  LagrangianPtr mech;   ///< Newtonian system over spatial coordinates
  LagrangianPtr clock;  ///< sqrt geodesic form, coordinate time (m > 0)
  LagrangianPtr quad;   ///< quadratic geodesic form over spacetime
  LagrangianPtr arc;    ///< degree-one arc functional (m > 0)
  std::shared_ptr<const MaupertuisForm> fixed_mech;
  std::shared_ptr<const FermatForm> fixed_geo;
  std::shared_ptr<const RouthTimeForm> cyclic;
};

Corners make_corners(const ScenarioSpec& s) {
  Corners c;
  c.mech = tagged("corner(mechanical)",
                  [&] { return newtonian_lagrangian(s.system); });
  c.quad = tagged("corner(quadratic)", [&] {
    return geodesic_lagrangian(s.metric, s.selector, GeodesicForm::quadratic);
  });
  if (s.selector.mass > 0.0) {
    c.clock = tagged("corner(clock-time)", [&] {
      return geodesic_lagrangian(s.metric, s.selector,
                                 GeodesicForm::sqrt_time);
    });
    c.arc = tagged("corner(arc)", [&] {
      return geodesic_lagrangian(s.metric, s.selector,
                                 GeodesicForm::homogeneous_sqrt);
    });
  }
  c.fixed_mech = tagged("corner(fixed-energy-mechanical)", [&] {
    return maupertuis_form(s.system, s.mech_energy);
  });
  c.fixed_geo = tagged("corner(fixed-energy-geodesic)", [&] {
    return fermat_form(s.metric, s.selector, s.E);
  });
  c.cyclic = tagged("corner(cyclic-reduction)",
                    [&] { return routh_time_form(s.metric, s.p0); });
  return c;
}

std::vector<Vec> dense_trace(const Trajectory& traj, bool drop_time) {
  const std::size_t count =
      std::max<std::size_t>(16384, 8 * traj.nodes().size());
  std::vector<Vec> pts;
  pts.reserve(count + 1);
  const double a = traj.t_begin();
  const double b = traj.t_end();
  for (std::size_t i = 0; i <= count; ++i) {
    const double t =
        a + (b - a) * (static_cast<double>(i) / static_cast<double>(count));
    Vec p = traj.position_at(t);
    if (drop_time) p.erase(p.begin());
    pts.push_back(std::move(p));
  }
  return pts;
}

double trace_length(const std::vector<Vec>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += dist2(pts[i - 1], pts[i]);
  return len;
}

/// Cut the polyline at the target arc length (linear interpolation inside
/// the final segment); returns the realized length.
double trim_trace(std::vector<Vec>& pts, double target) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = dist2(pts[i - 1], pts[i]);
    if (seg > 0.0 && acc + seg >= target) {
      const double frac = (target - acc) / seg;
      Vec cut(pts[i].size());
      for (std::size_t j = 0; j < cut.size(); ++j)
        cut[j] = pts[i - 1][j] + frac * (pts[i][j] - pts[i - 1][j]);
      pts.resize(i);
      pts.push_back(std::move(cut));
      return target;
    }
    acc += seg;
  }
  return acc;
}

/// Resample a dense polyline at uniform arc-length fractions (piecewise
/// linear; the traces are dense enough that chord error is negligible).
/// Unlike resample_polyline this does not assume the input samples are
/// arc-uniform, which time-uniform traces and trimmed traces are not.
std::vector<Vec> arc_resample(const std::vector<Vec>& pts, std::size_t count) {
  const std::size_t m = pts.size();
  Vec cum(m, 0.0);
  for (std::size_t i = 1; i < m; ++i)
    cum[i] = cum[i - 1] + dist2(pts[i - 1], pts[i]);
  const double total = cum.back();
  std::vector<Vec> out;
  out.reserve(count);
  if (!(total > 0.0)) {
    out.assign(count, pts.front());
    return out;
  }
  std::size_t seg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double target =
        total * (static_cast<double>(i) / static_cast<double>(count - 1));
    while (seg + 2 < m && cum[seg + 1] < target) ++seg;
    const double lo = cum[seg];
    const double hi = cum[seg + 1];
    const double f =
        hi > lo ? std::clamp((target - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    Vec p(pts[seg].size());
    for (std::size_t j = 0; j < p.size(); ++j)
      p[j] = pts[seg][j] + f * (pts[seg + 1][j] - pts[seg][j]);
    out.push_back(std::move(p));
  }
  return out;
}

Orbit open_orbit(const std::vector<Vec>& pts, double length) {
  Orbit o;
  o.closed = false;
  o.length = length;
  o.points = arc_resample(pts, kOrbitSamples);
  return o;
}

/// Builds corner objects once and memoizes the integrated runs, so the four
/// loops and the cross-corner checks share launches and trajectories.
class Bundle {
 public:
  explicit Bundle(const ScenarioSpec& s) : s_(s), c_(make_corners(s)) {
    dir_ = s.v0;
    const double len = norm2(dir_);
    for (double& d : dir_) d /= len;
    energy_mech_ = energy_function(c_.mech);
    energy_quad_ = energy_function(c_.quad);
    energy_cyclic_ = energy_function(c_.cyclic);
    if (c_.clock) energy_clock_ = energy_function(c_.clock);
  }

  const ScenarioSpec& spec() const { return s_; }
  const Corners& corners() const { return c_; }
  const EnergyPtr& energy_mech() const { return energy_mech_; }
  const EnergyPtr& energy_clock() const { return energy_clock_; }
  const EnergyPtr& energy_quad() const { return energy_quad_; }
  const EnergyPtr& energy_cyclic() const { return energy_cyclic_; }

  const Trajectory& mech_traj() {
    ensure_mech();
    return *mech_traj_;
  }

  const Orbit& mech_orbit() {
    ensure_mech();
    return *mech_orbit_;
  }

  OrbitComparison orbit_entry(const std::string& name) {
    OrbitComparison oc;
    oc.name = name;
    oc.tolerance = s_.tol.orbit;
    if (name == "mechanical-vs-clock-time") {
      if (!c_.clock) {
        oc.applicable = false;
        oc.note = "no clock-time corner at zero mass";
        return oc;
      }
      ensure_clock();
      oc.distance = orbit_distance(mech_orbit(), *clock_orbit_);
      oc.note =
          "same launch point and direction; speeds solved from the conserved "
          "pair (mech_energy, E)";
    } else if (name == "mechanical-vs-affine-projection") {
      ensure_quad();
      oc.distance = orbit_distance(mech_orbit(), *quad_orbit_);
      oc.note =
          "spatial projection of the quadratic-form geodesic against the "
          "mechanical orbit over matched arc length";
    } else if (name == "mechanical-vs-cyclic-reduction") {
      ensure_cyclic();
      oc.distance = orbit_distance(mech_orbit(), *cyclic_orbit_);
      oc.note =
          "run of the cyclic time reduction against the mechanical orbit "
          "over matched arc length";
    } else {
      throw EdgeError("orbit(" + name + ")", "unknown orbit comparison");
    }
    oc.pass = oc.distance <= oc.tolerance;
    return oc;
  }

  ConservationEntry drift_entry(const std::string& name) {
    ConservationEntry d;
    d.name = name;
    d.tolerance = s_.tol.drift;
    StateFunction fn;
    const Trajectory* traj = nullptr;
    if (name == "mechanical-energy") {
      traj = &mech_traj();
      fn = [e = energy_mech_](ConstSpan q, ConstSpan v, double t) {
        return e->eval(q, v, t);
      };
      d.expected = s_.mech_energy;
      d.note = "energy function of the mechanical corner";
    } else if (name == "clock-time-energy") {
      if (!c_.clock) {
        d.applicable = false;
        d.note = "no clock-time corner at zero mass";
        return d;
      }
      ensure_clock();
      traj = &*clock_traj_;
      fn = [e = energy_clock_](ConstSpan q, ConstSpan v, double t) {
        return e->eval(q, v, t);
      };
      d.expected = s_.E;
      d.note = "energy function of the clock-time corner";
    } else if (name == "affine-level") {
      ensure_quad();
      traj = &*quad_traj_;
      fn = [e = energy_quad_](ConstSpan q, ConstSpan v, double t) {
        return e->eval(q, v, t);
      };
      d.expected = s_.quadratic_level();
      d.note = "energy of the quadratic corner stays on the mass-shell level";
    } else if (name == "time-momentum") {
      ensure_quad();
      traj = &*quad_traj_;
      fn = [lag = c_.quad](ConstSpan q, ConstSpan v, double t) {
        return dLdv(*lag, q, v, t)[0];
      };
      d.expected = s_.p0;
      d.note = "momentum conjugate to the cyclic time coordinate";
    } else if (name == "cyclic-reduction-energy") {
      ensure_cyclic();
      traj = &*cyclic_traj_;
      fn = [e = energy_cyclic_](ConstSpan q, ConstSpan v, double t) {
        return e->eval(q, v, t);
      };
      d.expected = s_.quadratic_level();
      d.note =
          "projected mass law: the reduced corner's energy sits at the "
          "mass-shell level";
    } else {
      throw EdgeError("drift(" + name + ")", "unknown conservation entry");
    }
    const DriftReport r = monitor_conserved(*traj, fn);
    d.initial = r.reference;
    d.drift = r.max_abs_drift;
    d.pass = d.drift <= d.tolerance &&
             std::abs(d.initial - d.expected) <=
                 d.tolerance * (1.0 + std::abs(d.expected));
    return d;
  }

  void eps_scan(DiagramReport& rep) {
    ensure_quad();
    const Trajectory& t = *quad_traj_;
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= kEpsScanSamples; ++i) {
      const double tt =
          t.t_begin() + (t.t_end() - t.t_begin()) *
                            (static_cast<double>(i) / kEpsScanSamples);
      const Vec x = t.position_at(tt);
      const Vec u = t.velocity_at(tt);
      const Vec xs(x.begin() + 1, x.end());
      const Mat g = s_.metric.g.eval<double>(xs);
      mn = std::min(mn, s_.metric.epsilon * quad_form(g, ConstSpan(u), ConstSpan(u)));
    }
    rep.epsilon_sign_checked = true;
    rep.epsilon_sign_min = mn;
    rep.epsilon_sign_preserved =
        s_.selector.mass > 0.0 ? mn > 0.0 : mn >= -2e-8;
  }

  TimeReconstructionEntry time_entry() {
    TimeReconstructionEntry e;
    e.applicable = true;
    e.tolerance = kTimeReconstructTol;
    e.expected_duration = s_.t1 - s_.t0;
    try {
      const JacobiReduction red = jacobi_reduce(c_.mech, s_.mech_energy);
      // The finite-difference velocity recovery inside the reconstruction
      // wants a denser sampling than the geometric comparisons use.
      ensure_mech();
      Orbit fine;
      fine.closed = false;
      fine.length = ref_arc_;
      fine.points = arc_resample(mech_pts_, 8 * kOrbitSamples);
      const Trajectory rec = reconstruct_time(red, fine, s_.t0);
      e.duration = rec.t_end() - rec.t_begin();
      e.rel_error = std::abs(e.duration - e.expected_duration) /
                    std::max(std::abs(e.expected_duration), 1e-300);
      e.pass = e.rel_error <= e.tolerance;
      e.note =
          "clock rebuilt from the fixed-energy orbit geometry spans the "
          "scenario window";
    } catch (const Error& err) {
      e.pass = false;
      e.note = std::string("time reconstruction failed: ") + err.what();
    }
    return e;
  }

 private:
  IntegrateOptions int_opts() const {
    IntegrateOptions opt;
    opt.tol = s_.tol.integrate;
    return opt;
  }

  void ensure_mech() {
    if (mech_orbit_) return;
    const Vec v = tagged("launch(mechanical)", [&] {
      const double phi =
          solve_theta_prime(*energy_mech_, s_.mech_energy, s_.q0, dir_);
      Vec out = dir_;
      for (double& x : out) x /= phi;
      return out;
    });
    mech_traj_ = tagged("integrate(mechanical)", [&] {
      return integrate(*c_.mech, s_.q0, v, s_.t0, s_.t1, int_opts());
    });
    mech_pts_ = dense_trace(*mech_traj_, false);
    ref_arc_ = trace_length(mech_pts_);
    if (!(ref_arc_ > 0.0))
      throw EdgeError("orbit(mechanical)",
                      "reference run has no spatial extent");
    mech_orbit_ = open_orbit(mech_pts_, ref_arc_);
  }

  /// Integrate a corner until its spatial trace covers the reference arc,
  /// then trim to that arc so traces are compared over matched extent.
  Orbit matched_orbit(const std::string& stage, const LagrangianFn& lag,
                      const Vec& x0, const Vec& u0, bool drop_time,
                      std::optional<Trajectory>& keep) {
    ensure_mech();
    double speed = 0.0;
    for (std::size_t i = drop_time ? 1 : 0; i < u0.size(); ++i)
      speed += u0[i] * u0[i];
    speed = std::sqrt(speed);
    if (!(speed > 0.0))
      throw EdgeError(stage, "corner launch has no spatial speed");
    double window = ref_arc_ / speed * 1.15;
    for (int attempt = 0;; ++attempt) {
      Trajectory traj = tagged(stage, [&] {
        return integrate(lag, x0, u0, 0.0, window, int_opts());
      });
      std::vector<Vec> pts = dense_trace(traj, drop_time);
      const double len = trace_length(pts);
      if (len >= ref_arc_ * (1.0 - 1e-9) || attempt >= 5) {
        const double realized = trim_trace(pts, ref_arc_);
        keep = std::move(traj);
        return open_orbit(pts, realized);
      }
      window *= 1.7;
    }
  }

  void ensure_clock() {
    if (clock_orbit_) return;
    const Vec v = tagged("launch(clock-time)", [&] {
      const double phi = solve_theta_prime(*energy_clock_, s_.E, s_.q0, dir_);
      Vec out = dir_;
      for (double& x : out) x /= phi;
      return out;
    });
    clock_orbit_ = matched_orbit("integrate(clock-time)", *c_.clock, s_.q0, v,
                                 false, clock_traj_);
  }

  void ensure_quad() {
    if (quad_orbit_) return;
    const std::size_t n = s_.dof();
    const double c = s_.selector.light_speed;
    Vec x0(n + 1), u0(n + 1);
    x0[0] = c * s_.t0;
    for (std::size_t i = 0; i < n; ++i) x0[i + 1] = s_.q0[i];
    const Mat g = s_.metric.g.eval<double>(s_.q0);
    tagged("launch(quadratic)", [&] {
      if (s_.selector.mass > 0.0) {
        // Transport of the clock-time launch: u = u^0 (1, v_T / c) with
        // u^0 = E / (c (g00 + g_0k v_T^k / c)) lands exactly on both the
        // mass-shell level and the scenario's time momentum.
        const double phi =
            solve_theta_prime(*energy_clock_, s_.E, s_.q0, dir_);
        Vec vt = dir_;
        for (double& x : vt) x /= phi;
        double denom = g(0, 0);
        for (std::size_t k = 0; k < n; ++k)
          denom += g(0, k + 1) * vt[k] / c;
        const double u0t = s_.E / (c * denom);
        u0[0] = u0t;
        for (std::size_t k = 0; k < n; ++k) u0[k + 1] = u0t * vt[k] / c;
      } else {
        // Null launch rescaled so the conserved time momentum equals p0.
        const double w = future_time_velocity(s_.metric, s_.q0, dir_, 0.0);
        double p_raw = -g(0, 0) * w;
        for (std::size_t k = 0; k < n; ++k) p_raw -= g(0, k + 1) * dir_[k];
        const double scale = s_.p0 / p_raw;
        u0[0] = scale * w;
        for (std::size_t k = 0; k < n; ++k) u0[k + 1] = scale * dir_[k];
      }
      return 0;
    });
    quad_orbit_ = matched_orbit("integrate(quadratic)", *c_.quad, x0, u0, true,
                                quad_traj_);
  }

  void ensure_cyclic() {
    if (cyclic_orbit_) return;
    const double level = s_.quadratic_level();
    const Vec v = tagged("launch(cyclic-reduction)", [&] {
      const double phi = solve_theta_prime(*energy_cyclic_, level, s_.q0, dir_);
      Vec out = dir_;
      for (double& x : out) x /= phi;
      return out;
    });
    cyclic_orbit_ = matched_orbit("integrate(cyclic-reduction)", *c_.cyclic,
                                  s_.q0, v, false, cyclic_traj_);
  }

  const ScenarioSpec& s_;
  Corners c_;
  Vec dir_;
  EnergyPtr energy_mech_, energy_clock_, energy_quad_, energy_cyclic_;

  std::optional<Trajectory> mech_traj_, clock_traj_, quad_traj_, cyclic_traj_;
  std::optional<Orbit> mech_orbit_, clock_orbit_, quad_orbit_, cyclic_orbit_;
  std::vector<Vec> mech_pts_;
  double ref_arc_ = 0.0;
};

// ---- loop plans -------------------------------------------------------------

struct LoopPlan {
  std::vector<EdgeReport> edges;
  std::vector<std::string> orbit_names;
  std::vector<std::string> drift_names;
  bool wants_eps = false;
};

PairFn lag_fn(LagrangianPtr lag) {
  return [lag = std::move(lag)](ConstSpan q, ConstSpan v) {
    return lag->eval(q, v, 0.0);
  };
}

LoopPlan build_fixed_energy_mechanical(Bundle& b) {
  const ScenarioSpec& s = b.spec();
  const Corners& c = b.corners();
  const std::string id = loop_name(DiagramLoop::fixed_energy_mechanical);
  const SpatialGrid grid(s);
  LoopPlan plan;

  const std::string e1 = id + "/fixed-energy-reduce(mechanical)";
  const JacobiReduction red =
      tagged(e1, [&] { return jacobi_reduce(c.mech, s.mech_energy); });
  plan.edges.push_back(run_edge(
      s, grid, e1,
      "numeric fixed-energy reduction at mech_energy against the closed-form "
      "arc functional of the mechanical corner",
      lag_fn(red.reduced), lag_fn(c.fixed_mech)));

  plan.edges.push_back(run_edge(
      s, grid, id + "/identify(fixed-energy-corners)",
      "corner identification: the mechanical and geodesic fixed-energy forms "
      "coincide for the single compatible pair of constants (E, mech_energy)",
      lag_fn(c.fixed_mech), lag_fn(c.fixed_geo)));

  const std::string e3 = id + "/lift(fixed-energy-to-clock-time)";
  if (c.clock) {
    const auto lift = tagged(
        e3, [&] { return inverse_jacobi(red.reduced, b.energy_clock(), s.E); });
    plan.edges.push_back(run_edge(
        s, grid, e3,
        "lift of the numeric reduction; auxiliary pair instantiated from the "
        "scenario: (energy function of the clock-time corner, E)",
        lag_fn(lift), lag_fn(c.clock)));
  } else {
    plan.edges.push_back(skipped_edge(
        s, e3, "the clock-time square-root corner needs a positive mass"));
  }

  plan.orbit_names = {"mechanical-vs-clock-time"};
  plan.drift_names = {"mechanical-energy", "clock-time-energy"};
  return plan;
}

LoopPlan build_fixed_energy_geodesic(Bundle& b) {
  const ScenarioSpec& s = b.spec();
  const Corners& c = b.corners();
  const std::string id = loop_name(DiagramLoop::fixed_energy_geodesic);
  const SpatialGrid grid(s);
  LoopPlan plan;

  const std::string e1 = id + "/fixed-energy-reduce(clock-time)";
  LagrangianPtr path;
  std::string path_note;
  if (c.clock) {
    const JacobiReduction red =
        tagged(e1, [&] { return jacobi_reduce(c.clock, s.E); });
    plan.edges.push_back(run_edge(
        s, grid, e1,
        "numeric fixed-energy reduction at E against the closed-form arc "
        "functional of the geodesic corner",
        lag_fn(red.reduced), lag_fn(c.fixed_geo)));
    path = red.reduced;
    path_note =
        "lift of the numeric reduction; auxiliary pair instantiated from the "
        "scenario: (energy function of the mechanical corner, mech_energy)";
  } else {
    plan.edges.push_back(skipped_edge(
        s, e1, "the clock-time square-root corner needs a positive mass"));
    path = c.fixed_geo;
    path_note =
        "lift of the closed fixed-energy form (no clock-time corner at zero "
        "mass); auxiliary pair instantiated from the scenario: (energy "
        "function of the mechanical corner, mech_energy)";
  }

  plan.edges.push_back(run_edge(
      s, grid, id + "/identify(fixed-energy-corners)",
      "corner identification: the geodesic and mechanical fixed-energy forms "
      "coincide for the single compatible pair of constants (E, mech_energy)",
      lag_fn(c.fixed_geo), lag_fn(c.fixed_mech)));

  const std::string e3 = id + "/lift(fixed-energy-to-mechanical)";
  const auto lift = tagged(e3, [&] {
    return inverse_jacobi(path, b.energy_mech(), s.mech_energy);
  });
  plan.edges.push_back(
      run_edge(s, grid, e3, path_note, lag_fn(lift), lag_fn(c.mech)));

  plan.orbit_names = {"mechanical-vs-clock-time"};
  plan.drift_names = {"mechanical-energy", "clock-time-energy"};
  return plan;
}

LoopPlan build_affine_lift(Bundle& b) {
  const ScenarioSpec& s = b.spec();
  const Corners& c = b.corners();
  const std::string id = loop_name(DiagramLoop::affine_lift);
  const SpatialGrid sgrid(s);
  const SpacetimeGrid ugrid(s);
  const double level = s.quadratic_level();
  LoopPlan plan;

  const std::string e1 = id + "/reparametrize(clock-time-to-arc)";
  if (c.arc) {
    const double cc = s.selector.light_speed;
    plan.edges.push_back(run_edge(
        s, ugrid, e1,
        "the arc functional against the clock-time form transported to an "
        "arbitrary parameter",
        lag_fn(c.arc),
        [clock = c.clock, cc](ConstSpan x, ConstSpan u) {
          const Vec xs(x.begin() + 1, x.end());
          Vec vs(u.size() - 1);
          for (std::size_t k = 0; k < vs.size(); ++k)
            vs[k] = cc * u[k + 1] / u[0];
          return clock->eval(xs, vs, 0.0) * u[0] / cc;
        }));
  } else {
    plan.edges.push_back(skipped_edge(
        s, e1, "the arc corner degenerates at zero mass"));
  }

  const std::string e2 = id + "/lift(arc-to-quadratic)";
  if (c.arc) {
    const auto lift = tagged(
        e2, [&] { return inverse_jacobi(c.arc, b.energy_quad(), level); });
    plan.edges.push_back(run_edge(
        s, ugrid, e2,
        "fixed-level lift of the arc corner; auxiliary pair instantiated "
        "from the scenario: (energy of the quadratic corner, mass-shell "
        "level)",
        lag_fn(lift), lag_fn(c.quad)));
  } else {
    plan.edges.push_back(skipped_edge(
        s, e2,
        "at zero mass the shell level collapses onto the light cone and the "
        "fixed-level lift of the arc corner degenerates"));
  }

  const std::string e3 = id + "/cyclic-reduce(quadratic)";
  const RouthReduction red =
      tagged(e3, [&] { return routh_reduce(c.quad, 0, s.p0); });
  plan.edges.push_back(run_edge(
      s, sgrid, e3,
      "numeric elimination of the cyclic time coordinate at p0 against the "
      "closed reduced form (mass-free)",
      lag_fn(red.reduced), lag_fn(c.cyclic)));

  plan.edges.push_back(run_edge(
      s, sgrid, id + "/closure(cyclic-reduction-vs-mechanical)",
      "loop closure: the cyclic reduction equals the mechanical corner up to "
      "the additive constant mech_energy + (1/2) epsilon m^2 c^2 recorded by "
      "the scenario",
      [rq = red.reduced, shift = s.routh_constant()](ConstSpan q, ConstSpan v) {
        return rq->eval(q, v, 0.0) - shift;
      },
      lag_fn(c.mech)));

  plan.orbit_names = {"mechanical-vs-affine-projection",
                      "mechanical-vs-cyclic-reduction"};
  plan.drift_names = {"mechanical-energy", "affine-level", "time-momentum",
                      "cyclic-reduction-energy"};
  plan.wants_eps = true;
  return plan;
}

LoopPlan build_cyclic_lift(Bundle& b) {
  const ScenarioSpec& s = b.spec();
  const Corners& c = b.corners();
  const std::string id = loop_name(DiagramLoop::cyclic_lift);
  const SpacetimeGrid ugrid(s);
  const double level = s.quadratic_level();
  LoopPlan plan;

  const std::string e1 = id + "/lift(cyclic-to-quadratic)";
  const auto lift = tagged(e1, [&] {
    return inverse_routh(c.cyclic, cyclic_momentum_fn(c.quad, 0), s.p0, 0);
  });
  plan.edges.push_back(run_edge(
      s, ugrid, e1,
      "rebuild of the quadratic corner from the closed cyclic reduction; "
      "auxiliary pair instantiated from the scenario: (time-momentum profile "
      "of the quadratic corner, p0)",
      lag_fn(lift), lag_fn(c.quad)));

  const std::string e2 = id + "/fixed-level-reduce(quadratic-to-arc)";
  if (c.arc) {
    const JacobiReduction red =
        tagged(e2, [&] { return jacobi_reduce(c.quad, level); });
    plan.edges.push_back(run_edge(
        s, ugrid, e2,
        "numeric fixed-level reduction of the quadratic corner at the "
        "mass-shell level against the arc functional",
        lag_fn(red.reduced), lag_fn(c.arc)));
  } else {
    plan.edges.push_back(skipped_edge(
        s, e2,
        "at zero mass the shell level collapses onto the light cone and the "
        "arc corner degenerates"));
  }

  plan.orbit_names = {"mechanical-vs-affine-projection",
                      "mechanical-vs-cyclic-reduction"};
  plan.drift_names = {"cyclic-reduction-energy", "affine-level",
                      "time-momentum"};
  plan.wants_eps = true;
  return plan;
}

LoopPlan build_plan(Bundle& b, DiagramLoop which) {
  switch (which) {
    case DiagramLoop::fixed_energy_mechanical:
      return build_fixed_energy_mechanical(b);
    case DiagramLoop::fixed_energy_geodesic:
      return build_fixed_energy_geodesic(b);
    case DiagramLoop::affine_lift:
      return build_affine_lift(b);
    case DiagramLoop::cyclic_lift:
      return build_cyclic_lift(b);
  }
  throw PreconditionError("unknown diagram loop");
}

void fill_header(DiagramReport& rep, const ScenarioSpec& s) {
  rep.scenario = s.name;
  rep.mass = s.selector.mass;
  rep.light_speed = s.selector.light_speed;
  rep.epsilon = s.metric.epsilon;
  rep.E = s.E;
  rep.mech_energy = s.mech_energy;
  rep.p0 = s.p0;
  rep.quadratic_level = s.quadratic_level();
  rep.routh_constant = s.routh_constant();
  rep.metric_primary = s.metric_primary;
  rep.grid_points = s.grid_points;
  rep.seed = s.seed;
}

void push_unique(std::vector<std::string>& out,
                 const std::vector<std::string>& names) {
  for (const std::string& n : names)
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
}

DiagramReport assemble(Bundle& b, std::string loop_id, std::string description,
                       std::vector<LoopPlan> plans, bool with_time) {
  DiagramReport rep;
  fill_header(rep, b.spec());
  rep.loop = std::move(loop_id);
  rep.description = std::move(description);

  std::vector<std::string> orbit_names, drift_names;
  bool wants_eps = false;
  for (LoopPlan& plan : plans) {
    for (EdgeReport& e : plan.edges) rep.edges.push_back(std::move(e));
    push_unique(orbit_names, plan.orbit_names);
    push_unique(drift_names, plan.drift_names);
    wants_eps = wants_eps || plan.wants_eps;
  }
  for (const std::string& n : orbit_names)
    rep.orbits.push_back(b.orbit_entry(n));
  for (const std::string& n : drift_names)
    rep.drifts.push_back(b.drift_entry(n));
  if (wants_eps) b.eps_scan(rep);
  if (with_time) rep.time_reconstruction = b.time_entry();

  bool ok = true;
  for (const EdgeReport& e : rep.edges) ok = ok && e.pass;
  for (const OrbitComparison& o : rep.orbits) ok = ok && o.pass;
  for (const ConservationEntry& d : rep.drifts) ok = ok && d.pass;
  ok = ok && (!rep.epsilon_sign_checked || rep.epsilon_sign_preserved);
  ok = ok && rep.time_reconstruction.pass;
  rep.pass = ok;
  return rep;
}

}  // namespace

const std::vector<DiagramLoop>& all_diagram_loops() {
  static const std::vector<DiagramLoop> loops = {
      DiagramLoop::fixed_energy_mechanical,
      DiagramLoop::fixed_energy_geodesic,
      DiagramLoop::affine_lift,
      DiagramLoop::cyclic_lift,
  };
  return loops;
}

std::string loop_name(DiagramLoop which) {
  switch (which) {
    case DiagramLoop::fixed_energy_mechanical:
      return "fixed-energy-mechanical";
    case DiagramLoop::fixed_energy_geodesic:
      return "fixed-energy-geodesic";
    case DiagramLoop::affine_lift:
      return "affine-lift";
    case DiagramLoop::cyclic_lift:
      return "cyclic-lift";
  }
  throw PreconditionError("unknown diagram loop");
}

std::string loop_description(DiagramLoop which) {
  switch (which) {
    case DiagramLoop::fixed_energy_mechanical:
      return "reduce the mechanical corner at its conserved energy, identify "
             "the fixed-energy forms, and lift to the clock-time geodesic "
             "corner";
    case DiagramLoop::fixed_energy_geodesic:
      return "reduce the clock-time geodesic corner at its conserved energy, "
             "identify the fixed-energy forms, and lift to the mechanical "
             "corner";
    case DiagramLoop::affine_lift:
      return "reparametrize the clock-time corner to the arc functional, "
             "lift it to the quadratic form at the mass-shell level, and "
             "close the loop through the cyclic time reduction";
    case DiagramLoop::cyclic_lift:
      return "rebuild the quadratic form from the cyclic time reduction and "
             "its momentum profile, then reduce at the mass-shell level back "
             "to the arc functional";
  }
  throw PreconditionError("unknown diagram loop");
}

DiagramLoop loop_from_name(const std::string& name) {
  for (DiagramLoop which : all_diagram_loops())
    if (loop_name(which) == name) return which;
  std::string known;
  for (DiagramLoop which : all_diagram_loops()) {
    if (!known.empty()) known += ", ";
    known += loop_name(which);
  }
  throw SchemaError("/loop", "unknown loop '" + name + "'; expected one of " +
                                 known + ", or full");
}

nlohmann::ordered_json DiagramReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["loop"] = loop;
  j["description"] = description;
  j["selector"] = {{"mass", mass},
                   {"light_speed", light_speed},
                   {"epsilon", epsilon}};
  j["constants"] = {{"E", E},
                    {"mech_energy", mech_energy},
                    {"p0", p0},
                    {"quadratic_level", quadratic_level},
                    {"routh_constant", routh_constant}};
  j["corner_source"] = metric_primary ? "stationary_metric" : "newtonian";
  j["grid"] = {{"points", grid_points}, {"seed", seed}};

  j["edges"] = nlohmann::ordered_json::array();
  for (const EdgeReport& e : edges) {
    nlohmann::ordered_json je;
    je["name"] = e.name;
    je["applicable"] = e.applicable;
    je["note"] = e.note;
    je["max_discrepancy"] = e.max_discrepancy;
    je["tolerance"] = e.tolerance;
    je["samples"] = e.samples;
    je["skipped"] = e.skipped;
    je["pass"] = e.pass;
    j["edges"].push_back(std::move(je));
  }

  j["orbits"] = nlohmann::ordered_json::array();
  for (const OrbitComparison& o : orbits) {
    nlohmann::ordered_json jo;
    jo["name"] = o.name;
    jo["applicable"] = o.applicable;
    jo["note"] = o.note;
    jo["distance"] = o.distance;
    jo["tolerance"] = o.tolerance;
    jo["pass"] = o.pass;
    j["orbits"].push_back(std::move(jo));
  }

  j["drifts"] = nlohmann::ordered_json::array();
  for (const ConservationEntry& d : drifts) {
    nlohmann::ordered_json jd;
    jd["name"] = d.name;
    jd["applicable"] = d.applicable;
    jd["note"] = d.note;
    jd["expected"] = d.expected;
    jd["initial"] = d.initial;
    jd["drift"] = d.drift;
    jd["tolerance"] = d.tolerance;
    jd["pass"] = d.pass;
    j["drifts"].push_back(std::move(jd));
  }

  j["time_reconstruction"] = {
      {"applicable", time_reconstruction.applicable},
      {"note", time_reconstruction.note},
      {"duration", time_reconstruction.duration},
      {"expected_duration", time_reconstruction.expected_duration},
      {"rel_error", time_reconstruction.rel_error},
      {"tolerance", time_reconstruction.tolerance},
      {"pass", time_reconstruction.pass}};

  j["epsilon_sign"] = {{"checked", epsilon_sign_checked},
                       {"preserved", epsilon_sign_preserved},
                       {"min_value", epsilon_sign_min}};
  j["pass"] = pass;
  return j;
}

DiagramReport run_loop(const ScenarioSpec& spec, DiagramLoop which) {
  Bundle bundle(spec);
  std::vector<LoopPlan> plans;
  plans.push_back(build_plan(bundle, which));
  return assemble(bundle, loop_name(which), loop_description(which),
                  std::move(plans), false);
}

DiagramReport verify_commuting_diagram(const ScenarioSpec& spec) {
  Bundle bundle(spec);
  std::vector<LoopPlan> plans;
  for (DiagramLoop which : all_diagram_loops())
    plans.push_back(build_plan(bundle, which));
  return assemble(bundle, "full",
                  "all four loops plus the cross-corner orbit, conservation, "
                  "sign-preservation, and time-reconstruction checks",
                  std::move(plans), true);
}

DiagramReport audit_conservation(const ScenarioSpec& spec) {
  Bundle bundle(spec);
  LoopPlan plan;
  plan.drift_names = {"mechanical-energy", "clock-time-energy", "affine-level",
                      "time-momentum", "cyclic-reduction-energy"};
  plan.wants_eps = true;
  std::vector<LoopPlan> plans;
  plans.push_back(std::move(plan));
  return assemble(bundle, "energy-audit",
                  "conservation audit: the five corner invariants monitored "
                  "along the integrated runs, the signature-sign scan, and "
                  "the clock reconstruction",
                  std::move(plans), true);
}

namespace {

struct TableTally {
  std::vector<Vec> rows;
  std::size_t skipped = 0;
};

template <typename Grid>
TableTally table_range(const Grid& grid, const PairFn& fa, const PairFn& fb,
                       std::size_t begin, std::size_t end) {
  TableTally t;
  Vec x, y;
  for (std::size_t k = begin; k < end; ++k) {
    if (!grid.sample(k, x, y)) {
      ++t.skipped;
      continue;
    }
    double a, b;
    try {
      a = fa(x, y);
      b = fb(x, y);
    } catch (const DomainError&) {
      ++t.skipped;
      continue;
    } catch (const SolverError&) {
      ++t.skipped;
      continue;
    } catch (const DegenerateInputError&) {
      ++t.skipped;
      continue;
    }
    Vec row;
    row.reserve(x.size() + y.size() + 3);
    row.insert(row.end(), x.begin(), x.end());
    row.insert(row.end(), y.begin(), y.end());
    row.push_back(a);
    row.push_back(b);
    row.push_back(std::abs(a - b));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Rows come back in grid order regardless of the chunking, so the table is
/// identical across thread counts and machines.
template <typename Grid>
void fill_table(SampleTable& out, const Grid& grid, const PairFn& fa,
                const PairFn& fb, std::size_t total) {
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t chunks = hw == 0 ? 1 : std::min<std::size_t>(hw, 16);
  chunks = std::min(chunks, std::max<std::size_t>(total / 256, 1));

  std::vector<TableTally> parts;
  if (chunks <= 1) {
    parts.push_back(table_range(grid, fa, fb, 0, total));
  } else {
    const std::size_t step = (total + chunks - 1) / chunks;
    std::vector<std::future<TableTally>> futs;
    for (std::size_t b = 0; b < total; b += step) {
      const std::size_t e = std::min(b + step, total);
      futs.push_back(std::async(std::launch::async, [&grid, &fa, &fb, b, e] {
        return table_range(grid, fa, fb, b, e);
      }));
    }
    for (auto& f : futs) parts.push_back(f.get());
  }
  for (TableTally& part : parts) {
    out.skipped += part.skipped;
    for (Vec& row : part.rows) {
      out.max_abs_error = std::max(out.max_abs_error, row.back());
      out.rows.push_back(std::move(row));
    }
  }
}

}  // namespace

SampleTable reduction_sample_table(const ScenarioSpec& spec, TableKind kind) {
  const Corners c = make_corners(spec);
  const std::size_t n = spec.dof();
  SampleTable t;
  t.requested = spec.grid_points;
  t.tolerance = spec.tol.lagrangian_edge;

  PairFn numeric, closed;
  bool spacetime = false;
  switch (kind) {
    case TableKind::jacobi_reduce_mechanical: {
      const JacobiReduction red = tagged("table(jacobi-reduce:mechanical)", [&] {
        return jacobi_reduce(c.mech, spec.mech_energy);
      });
      numeric = lag_fn(red.reduced);
      closed = lag_fn(c.fixed_mech);
      t.numeric_label =
          "numeric fixed-energy reduction of the mechanical corner at "
          "mech_energy";
      t.closed_label = "closed-form fixed-energy arc functional";
      break;
    }
    case TableKind::routh_reduce_quadratic: {
      const RouthReduction red = tagged("table(routh-reduce:quadratic)", [&] {
        return routh_reduce(c.quad, 0, spec.p0);
      });
      numeric = lag_fn(red.reduced);
      closed = lag_fn(c.cyclic);
      t.numeric_label =
          "numeric elimination of the cyclic time coordinate of the "
          "quadratic corner at p0";
      t.closed_label = "closed-form cyclic time reduction (mass-free)";
      break;
    }
    case TableKind::jacobi_lift_quadratic: {
      if (!c.arc)
        throw EdgeError("table(jacobi-lift:quadratic)",
                        "the arc corner degenerates at zero mass; the "
                        "fixed-level lift needs a positive mass");
      const EnergyPtr equad = energy_function(c.quad);
      const auto lift = tagged("table(jacobi-lift:quadratic)", [&] {
        return inverse_jacobi(c.arc, equad, spec.quadratic_level());
      });
      numeric = lag_fn(lift);
      closed = lag_fn(c.quad);
      t.numeric_label =
          "fixed-level lift of the arc functional at the mass-shell level";
      t.closed_label = "closed-form quadratic geodesic corner";
      spacetime = true;
      break;
    }
    case TableKind::routh_lift_quadratic: {
      const auto lift = tagged("table(routh-lift:quadratic)", [&] {
        return inverse_routh(c.cyclic, cyclic_momentum_fn(c.quad, 0), spec.p0,
                             0);
      });
      numeric = lag_fn(lift);
      closed = lag_fn(c.quad);
      t.numeric_label =
          "cyclic lift of the time reduction with the quadratic corner's "
          "momentum profile at p0";
      t.closed_label = "closed-form quadratic geodesic corner";
      spacetime = true;
      break;
    }
  }

  if (spacetime) {
    t.columns.push_back("x0");
    for (std::size_t i = 1; i <= n; ++i)
      t.columns.push_back("q" + std::to_string(i));
    t.columns.push_back("u0");
    for (std::size_t i = 1; i <= n; ++i)
      t.columns.push_back("u" + std::to_string(i));
  } else {
    for (std::size_t i = 1; i <= n; ++i)
      t.columns.push_back("q" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i)
      t.columns.push_back("v" + std::to_string(i));
  }
  t.columns.push_back("L_numeric");
  t.columns.push_back("L_closed");
  t.columns.push_back("abs_error");

  if (spacetime)
    fill_table(t, SpacetimeGrid(spec), numeric, closed, t.requested);
  else
    fill_table(t, SpatialGrid(spec), numeric, closed, t.requested);

  t.pass = t.rows.size() >= (t.requested + 1) / 2 &&
           t.max_abs_error <= t.tolerance;
  if (t.rows.size() < (t.requested + 1) / 2)
    t.note = "more than half of the grid fell outside the admissible set";
  return t;
}

}  // namespace varidyn
