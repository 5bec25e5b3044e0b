#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "varidyn/scenario.hpp"

namespace varidyn {

/// The four closed reduction/lift loops through the corner Lagrangians of a
/// scenario: the mechanical system, its fixed-energy (arc) form, the
/// clock-time geodesic form, the reparametrization-invariant arc functional,
/// the quadratic geodesic form, and the cyclic time reduction. Each loop is
/// a composition of the library's reduce/lift operations whose endpoint must
/// reproduce a corner it did not start from.
enum class DiagramLoop {
  /// mechanical -> fixed-energy reduce -> corner identification -> lift to
  /// the clock-time geodesic form.
  fixed_energy_mechanical,
  /// clock-time geodesic form -> fixed-energy reduce -> corner
  /// identification -> lift back to the mechanical system.
  fixed_energy_geodesic,
  /// clock-time form -> reparametrize to the arc functional -> fixed-level
  /// lift to the quadratic form -> cyclic time reduction, closing on the
  /// mechanical system up to a recorded additive constant.
  affine_lift,
  /// cyclic time reduction -> cyclic lift to the quadratic form ->
  /// fixed-level reduce back to the arc functional.
  cyclic_lift,
};

/// All loops in report order.
const std::vector<DiagramLoop>& all_diagram_loops();

/// Stable identifier used in reports and on the command line.
std::string loop_name(DiagramLoop which);

/// One-line summary of the composition the loop executes.
std::string loop_description(DiagramLoop which);

/// Parse a loop identifier; SchemaError on an unknown name.
DiagramLoop loop_from_name(const std::string& name);

/// Pointwise comparison of two Lagrangian presentations along one mapping
/// edge, evaluated over the scenario's quasi-random sample grid.
struct EdgeReport {
  std::string name;
  bool applicable = true;
  /// Which auxiliary data the edge instantiated, or why it was skipped.
  std::string note;
  double max_discrepancy = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;  ///< grid points evaluated
  std::size_t skipped = 0;  ///< grid points outside some admissible set
  bool pass = true;
};

/// Distance between the trace of a corner's integrated run and the
/// mechanical reference orbit, compared over matched arc length.
struct OrbitComparison {
  std::string name;
  bool applicable = true;
  std::string note;
  double distance = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Drift of a corner's conserved quantity along its integrated run, plus the
/// match between its launch value and the scenario constant.
struct ConservationEntry {
  std::string name;
  bool applicable = true;
  std::string note;
  double expected = 0.0;  ///< conserved value declared by the scenario
  double initial = 0.0;   ///< value at the first trajectory node
  double drift = 0.0;     ///< worst |value - initial| along the run
  double tolerance = 0.0;
  bool pass = true;
};

/// Consistency of the clock rebuilt from orbit geometry alone: traversing
/// the reference orbit's full arc must take exactly the scenario window.
struct TimeReconstructionEntry {
  bool applicable = false;
  std::string note;
  double duration = 0.0;
  double expected_duration = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Full outcome of one loop (or of all four). Reproducible bit-for-bit from
/// the scenario and its seed; serialization has a stable key order.
struct DiagramReport {
  std::string scenario;
  std::string loop;  ///< loop identifier, or "full"
  std::string description;

  double mass = 0.0;
  double light_speed = 1.0;
  double epsilon = 1.0;
  double E = 0.0;
  double mech_energy = 0.0;
  double p0 = 0.0;
  double quadratic_level = 0.0;
  double routh_constant = 0.0;
  bool metric_primary = false;

  std::size_t grid_points = 0;
  std::uint64_t seed = 0;

  std::vector<EdgeReport> edges;
  std::vector<OrbitComparison> orbits;
  std::vector<ConservationEntry> drifts;
  TimeReconstructionEntry time_reconstruction;

  /// Sign scan of epsilon * g(u, u) along the quadratic-corner run: the
  /// geodesic type selected by the scenario must survive every mapping.
  bool epsilon_sign_checked = false;
  bool epsilon_sign_preserved = true;
  double epsilon_sign_min = 0.0;

  bool pass = false;

  nlohmann::ordered_json to_json() const;
};

/// Execute one loop: build every corner object along the composition,
/// compare each edge pointwise on the sample grid, integrate the corners the
/// loop touches, and compare orbits and conserved-quantity drifts.
/// Constituent failures surface as EdgeError tagged with the failing stage.
DiagramReport run_loop(const ScenarioSpec& spec, DiagramLoop which);

/// Run all four loops plus the cross-corner checks: every orbit comparison,
/// every conservation drift, the epsilon-sign scan, and the
/// time-reconstruction consistency entry.
DiagramReport verify_commuting_diagram(const ScenarioSpec& spec);

/// Conservation-only report (loop id "energy-audit"): integrate the corner
/// runs and monitor the five conserved quantities, the epsilon-sign scan,
/// and the clock reconstruction, without evaluating the pointwise edges.
DiagramReport audit_conservation(const ScenarioSpec& spec);

/// Which reduction or lift a sample table demonstrates. Each kind compares
/// one numeric operation against the closed-form corner it must reproduce.
enum class TableKind {
  /// jacobi_reduce of the mechanical corner at mech_energy vs the
  /// fixed-energy arc functional, sampled over the (q, v) grid.
  jacobi_reduce_mechanical,
  /// routh_reduce of the quadratic corner at p0 vs the closed cyclic
  /// reduction, sampled over the (q, v) grid.
  routh_reduce_quadratic,
  /// inverse_jacobi of the arc functional at the mass-shell level vs the
  /// quadratic corner, sampled over the spacetime (x, u) grid (needs m > 0).
  jacobi_lift_quadratic,
  /// inverse_routh of the cyclic reduction at p0 vs the quadratic corner,
  /// sampled over the spacetime (x, u) grid.
  routh_lift_quadratic,
};

/// Tabulated pointwise comparison: each row holds the sampled state, the
/// numeric operation's value, the closed-form corner's value, and their
/// absolute difference. Rows follow the quasi-random grid order with
/// inadmissible states dropped, so the table is reproducible bit-for-bit.
struct SampleTable {
  std::vector<std::string> columns;
  std::vector<Vec> rows;
  std::string numeric_label;  ///< what the numeric column evaluates
  std::string closed_label;   ///< the closed form it is compared against
  std::string note;
  std::size_t requested = 0;  ///< grid points drawn
  std::size_t skipped = 0;    ///< grid points outside the admissible set
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Sample one reduction/lift over the scenario grid. Same admissibility,
/// seeding, and pass rule as the diagram edges; spec.grid_points rows are
/// drawn. Failures surface as EdgeError tagged with the operation.
SampleTable reduction_sample_table(const ScenarioSpec& spec, TableKind kind);

}  // namespace varidyn
