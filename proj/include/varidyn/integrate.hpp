#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "varidyn/lagrangian.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// Extra scalar integrated along the trajectory: s' = f(q, v, t). Carried as
/// additional state components, so its accuracy follows the step tolerance.
using QuadratureChannel = std::function<double(ConstSpan, ConstSpan, double)>;

struct IntegrateOptions {
  double tol = 1e-12;  ///< absolute and relative tolerance per component
  double h_init = 0.0;  ///< 0 selects the starting step automatically
  std::size_t max_steps = 2000000;
  std::vector<QuadratureChannel> quadratures;
};

struct TrajectoryNode {
  double t;
  Vec q;
  Vec v;
  Vec a;          ///< acceleration at the node
  Vec quad;       ///< accumulated quadrature channel values
  Vec quad_rate;  ///< channel integrands at the node
};

/// Result of an adaptive integration. Nodes are stored ascending in t even
/// for backward runs. Dense evaluation uses two-point quintic Hermite
/// interpolation for positions (values, velocities and accelerations at both
/// ends) and cubic Hermite for velocities and quadrature channels.
class Trajectory {
 public:
  /// Assemble a trajectory from explicit nodes (ascending in t, consistent
  /// dimensions). Used when a run is rebuilt in different coordinates.
  Trajectory(std::vector<TrajectoryNode> nodes, bool forward);

  const std::vector<TrajectoryNode>& nodes() const { return nodes_; }
  std::size_t dof() const { return dof_; }
  double t_begin() const { return nodes_.front().t; }
  double t_end() const { return nodes_.back().t; }
  /// Direction of the original run (false when integrated backward in time).
  bool forward() const { return forward_; }

  std::size_t steps_accepted() const { return steps_accepted_; }
  std::size_t steps_rejected() const { return steps_rejected_; }

  void state_at(double t, Vec& q, Vec& v) const;
  Vec position_at(double t) const;
  Vec velocity_at(double t) const;
  Vec quadratures_at(double t) const;

 private:
  friend Trajectory integrate(const LagrangianFn&, ConstSpan, ConstSpan,
                              double, double, const IntegrateOptions&);

  Trajectory() = default;

  std::size_t segment_index(double& t) const;

  std::vector<TrajectoryNode> nodes_;
  std::size_t dof_ = 0;
  bool forward_ = true;
  std::size_t steps_accepted_ = 0;
  std::size_t steps_rejected_ = 0;
};

/// Integrate the equations of motion of a regular Lagrangian from (q0, v0)
/// over [t0, t1] (t1 < t0 runs backward). Domain errors raised by stage
/// evaluations reject the step and retry with a smaller one.
Trajectory integrate(const LagrangianFn& lag, ConstSpan q0, ConstSpan v0,
                     double t0, double t1, const IntegrateOptions& opt = {});

using StateFunction = std::function<double(ConstSpan, ConstSpan, double)>;

struct DriftReport {
  double reference = 0.0;      ///< value at the first node
  double max_abs_drift = 0.0;  ///< worst |f - reference| along the run
};

/// Track how well a supposedly conserved state function holds up along a
/// trajectory, sampling densely plus at every node.
DriftReport monitor_conserved(const Trajectory& traj, const StateFunction& fn,
                              std::size_t samples = 2048);

/// Fourth-order cumulative integral of uniformly spaced samples; out[0] = 0.
Vec cumulative_integral_uniform(ConstSpan values, double h);

}  // namespace varidyn
