#include "varidyn/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace varidyn {

namespace {

double point_distance(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Six-point Lagrange interpolation of arc-uniform samples at fraction
/// u in [0, 1]. Closed curves treat the samples cyclically with period 1.
Vec interp_fraction(const std::vector<Vec>& pts, bool closed, double u) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts[0].size();
  double pos;  // in index units
  long base;
  if (closed) {
    u -= std::floor(u);
    pos = u * static_cast<double>(n);
    base = static_cast<long>(std::floor(pos));
  } else {
    u = std::clamp(u, 0.0, 1.0);
    pos = u * static_cast<double>(n - 1);
    base = static_cast<long>(std::floor(pos));
    base = std::clamp(base, 2L, static_cast<long>(n) - 4);
  }
  double xi = pos - static_cast<double>(base);

  static constexpr double kOffsets[6] = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  double w[6];
  for (int m = 0; m < 6; ++m) {
    double num = 1.0, den = 1.0;
    for (int k = 0; k < 6; ++k) {
      if (k == m) continue;
      num *= xi - kOffsets[k];
      den *= kOffsets[m] - kOffsets[k];
    }
    w[m] = num / den;
  }

  Vec out(dim, 0.0);
  for (int m = 0; m < 6; ++m) {
    long idx = base + static_cast<long>(kOffsets[m]);
    if (closed) {
      idx %= static_cast<long>(n);
      if (idx < 0) idx += static_cast<long>(n);
    }
    const Vec& p = pts[static_cast<std::size_t>(idx)];
    for (std::size_t d = 0; d < dim; ++d) out[d] += w[m] * p[d];
  }
  return out;
}

std::vector<Vec> reversed_points(const std::vector<Vec>& pts, bool closed) {
  std::vector<Vec> out(pts.rbegin(), pts.rend());
  // A closed trace's samples sit at fractions j/n; reversing should keep
  // sample 0 at fraction 0, so rotate the reversed list by one.
  if (closed && !out.empty())
    std::rotate(out.begin(), out.end() - 1, out.end());
  return out;
}

double matched_max_distance(const std::vector<Vec>& a,
                            const std::vector<Vec>& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, point_distance(a[j], b[j]));
  return worst;
}

/// Max distance with b sampled at fractions shifted by phi index units.
double shifted_max_distance(const std::vector<Vec>& a,
                            const std::vector<Vec>& b, double phi) {
  const double n = static_cast<double>(a.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    Vec bp = interp_fraction(b, true, (static_cast<double>(j) + phi) / n);
    worst = std::max(worst, point_distance(a[j], bp));
  }
  return worst;
}

double aligned_closed_distance(const std::vector<Vec>& a,
                               const std::vector<Vec>& b) {
  const std::size_t n = a.size();
  // Coarse integer-shift scan.
  std::size_t best_shift = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t shift = 0; shift < n; ++shift) {
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      worst = std::max(worst, point_distance(a[j], b[(j + shift) % n]));
      if (worst >= best) break;
    }
    if (worst < best) {
      best = worst;
      best_shift = shift;
    }
  }
  // Continuous refinement by golden-section around the best integer shift.
  const double gr = 0.6180339887498949;
  double lo = static_cast<double>(best_shift) - 1.0;
  double hi = static_cast<double>(best_shift) + 1.0;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = shifted_max_distance(a, b, x1);
  double f2 = shifted_max_distance(a, b, x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = shifted_max_distance(a, b, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = shifted_max_distance(a, b, x2);
    }
  }
  return std::min({best, f1, f2});
}

}  // namespace

Orbit orbit_resample(const Trajectory& traj, const OrbitOptions& opt) {
  const auto& nodes = traj.nodes();
  if (nodes.size() < 2) throw PreconditionError("trajectory has no extent");
  if (opt.samples < 8)
    throw PreconditionError("orbit resampling needs at least eight samples");

  std::vector<std::size_t> comps = opt.components;
  if (comps.empty())
    for (std::size_t i = 0; i < traj.dof(); ++i) comps.push_back(i);
  for (std::size_t c : comps)
    if (c >= traj.dof())
      throw DimensionError("projection component out of range");

  const std::size_t K =
      opt.presamples ? opt.presamples
                     : std::max<std::size_t>(4096, 8 * nodes.size());
  if (K < 8) throw PreconditionError("too few pre-samples");

  const double t0 = traj.t_begin();
  const double t1 = traj.t_end();
  const double dt = (t1 - t0) / static_cast<double>(K - 1);

  std::vector<Vec> xs(K);
  Vec speeds(K);
  Vec lo(comps.size(), std::numeric_limits<double>::infinity());
  Vec hi(comps.size(), -std::numeric_limits<double>::infinity());
  Vec q, v;
  for (std::size_t k = 0; k < K; ++k) {
    double t = (k + 1 == K) ? t1 : t0 + dt * static_cast<double>(k);
    traj.state_at(t, q, v);
    Vec x(comps.size());
    double sp = 0.0;
    for (std::size_t d = 0; d < comps.size(); ++d) {
      x[d] = q[comps[d]];
      double vd = v[comps[d]];
      sp += vd * vd;
      lo[d] = std::min(lo[d], x[d]);
      hi[d] = std::max(hi[d], x[d]);
    }
    xs[k] = std::move(x);
    speeds[k] = std::sqrt(sp);
  }

  Vec arc = cumulative_integral_uniform(speeds, dt);
  // A backward window gives negative dt; arc length still accumulates along
  // the traversal.
  if (dt < 0.0)
    for (double& s : arc) s = -s;

  double diameter = 0.0;
  for (std::size_t d = 0; d < comps.size(); ++d) {
    double ext = hi[d] - lo[d];
    diameter += ext * ext;
  }
  diameter = std::sqrt(diameter);

  Orbit orbit;
  orbit.length = arc.back();
  if (!(orbit.length > 1e-12 * (1.0 + diameter)) || diameter == 0.0)
    throw DegenerateInputError("trajectory trace has no spatial extent");

  orbit.closed =
      point_distance(xs.front(), xs.back()) <= opt.closed_tol * diameter;

  const std::size_t N = opt.samples;
  orbit.points.reserve(N);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < N; ++j) {
    double target =
        orbit.closed
            ? orbit.length * static_cast<double>(j) / static_cast<double>(N)
            : orbit.length * static_cast<double>(j) /
                  static_cast<double>(N - 1);
    while (seg + 2 < K && arc[seg + 1] < target) ++seg;
    // Invert the cubic Hermite model of arc(t) on [seg, seg+1].
    double s0 = arc[seg], s1 = arc[seg + 1];
    double w0 = std::fabs(dt) * speeds[seg], w1 = std::fabs(dt) * speeds[seg + 1];
    double lo_x = 0.0, hi_x = 1.0;
    double x = (s1 > s0) ? (target - s0) / (s1 - s0) : 0.5;
    x = std::clamp(x, 0.0, 1.0);
    for (int it = 0; it < 40; ++it) {
      double x2 = x * x, x3 = x2 * x;
      double val = s0 * (2.0 * x3 - 3.0 * x2 + 1.0) +
                   w0 * (x3 - 2.0 * x2 + x) + s1 * (-2.0 * x3 + 3.0 * x2) +
                   w1 * (x3 - x2);
      double err = val - target;
      if (std::fabs(err) <= 1e-14 * (1.0 + std::fabs(target))) break;
      if (err > 0.0)
        hi_x = x;
      else
        lo_x = x;
      double der = s0 * (6.0 * x2 - 6.0 * x) + w0 * (3.0 * x2 - 4.0 * x + 1.0) +
                   s1 * (-6.0 * x2 + 6.0 * x) + w1 * (3.0 * x2 - 2.0 * x);
      double xn = (der != 0.0) ? x - err / der : 0.5 * (lo_x + hi_x);
      if (!(xn > lo_x && xn < hi_x)) xn = 0.5 * (lo_x + hi_x);
      x = xn;
    }
    double t = t0 + dt * (static_cast<double>(seg) + x);
    traj.state_at(t, q, v);
    Vec pt(comps.size());
    for (std::size_t d = 0; d < comps.size(); ++d) pt[d] = q[comps[d]];
    orbit.points.push_back(std::move(pt));
  }
  return orbit;
}

std::vector<Vec> resample_polyline(const std::vector<Vec>& points, bool closed,
                                   std::size_t count) {
  if (points.size() < 8)
    throw UndersampledError("polyline resampling needs at least eight points");
  if (count < 8)
    throw PreconditionError("polyline resampling to fewer than eight points");
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    double u = closed
                   ? static_cast<double>(j) / static_cast<double>(count)
                   : static_cast<double>(j) / static_cast<double>(count - 1);
    out.push_back(interp_fraction(points, closed, u));
  }
  return out;
}

double orbit_distance(const Orbit& a, const Orbit& b) {
  if (a.points.size() < 8 || b.points.size() < 8)
    throw UndersampledError("orbit comparison needs at least eight samples");
  if (a.points[0].size() != b.points[0].size())
    throw DimensionError("orbit comparison across different dimensions");

  std::vector<Vec> bp = b.points;
  bool closed = a.closed && b.closed;
  if (bp.size() != a.points.size())
    bp = resample_polyline(bp, b.closed, a.points.size());

  if (closed) {
    double direct = aligned_closed_distance(a.points, bp);
    double flipped =
        aligned_closed_distance(a.points, reversed_points(bp, true));
    return std::min(direct, flipped);
  }
  double direct = matched_max_distance(a.points, bp);
  double flipped = matched_max_distance(a.points, reversed_points(bp, false));
  return std::min(direct, flipped);
}

}  // namespace varidyn
