#pragma once

#include <cstddef>
#include <vector>

#include "varidyn/integrate.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// Geometric trace of a trajectory: positions resampled uniformly in arc
/// length, so two parametrizations of the same curve produce comparable
/// point sets. Closed traces omit the duplicate endpoint.
struct Orbit {
  std::vector<Vec> points;
  bool closed = false;
  double length = 0.0;
};

struct OrbitOptions {
  std::size_t samples = 512;
  /// Dense pre-sampling count for the arc-length table; 0 picks
  /// max(4096, 8 * node count).
  std::size_t presamples = 0;
  /// Coordinate indices to keep (projections); empty keeps all.
  std::vector<std::size_t> components;
  /// Start/end gap below this fraction of the bounding-box diagonal marks
  /// the trace as closed.
  double closed_tol = 1e-6;
};

/// Resample a trajectory's spatial trace uniformly in arc length.
Orbit orbit_resample(const Trajectory& traj, const OrbitOptions& opt = {});

/// Interpolate arc-uniform samples at new arc-length fractions
/// (six-point Lagrange stencils; cyclic for closed curves).
std::vector<Vec> resample_polyline(const std::vector<Vec>& points, bool closed,
                                   std::size_t count);

/// Largest pointwise separation of two traces compared at matched arc-length
/// fractions, minimized over traversal orientation and, for closed traces,
/// over the continuous starting phase.
double orbit_distance(const Orbit& a, const Orbit& b);

}  // namespace varidyn
