#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "varidyn/systems.hpp"
#include "varidyn/types.hpp"

namespace varidyn {

/// Comparison and integration tolerances of a scenario. Every command takes
/// its thresholds from here so reports are self-describing.
struct ScenarioTolerances {
  /// Max pointwise Lagrangian discrepancy allowed on a sample grid.
  double lagrangian_edge = 1e-9;
  /// Max distance between arc-matched orbits of equivalent dynamics.
  double orbit = 1e-6;
  /// Max drift of a conserved quantity along an integrated run.
  double drift = 1e-8;
  /// Step tolerance handed to the integrator.
  double integrate = 1e-12;
};

/// A fully resolved scenario: both the mechanical and the geometric corner
/// exist side by side, one loaded from the file and the other derived from
/// it through the fixed-energy identification at (E, mech_energy).
struct ScenarioSpec {
  std::string name;

  NewtonianSystem system;   ///< mechanical corner
  StationaryMetric metric;  ///< geometric corner
  /// True when the file declared the metric and the system was derived.
  bool metric_primary = false;

  GeodesicSelector selector;
  double E = 1.0;            ///< conserved clock-time energy
  double mech_energy = 0.0;  ///< conserved mechanical energy
  double p0 = -1.0;          ///< time-conjugate momentum; p0 c = -E always
  double coupling = 1.0;     ///< charge multiplying the covector potential

  Vec q0;           ///< launch point
  Vec v0;           ///< launch direction; speeds follow the conserved values
  double t0 = 0.0;  ///< integration window
  double t1 = 1.0;

  /// Sample boxes for pointwise Lagrangian comparisons, declared away from
  /// cones, horizons, and potential singularities.
  Box grid_q;
  Box grid_v;

  ScenarioTolerances tol;
  std::uint64_t seed = 0;         ///< offsets the quasi-random sample index
  std::size_t grid_points = 10000;  ///< sample count for edge comparisons

  std::size_t dof() const { return system.dof(); }
  /// Quadratic-form level set by the selector: -1/2 epsilon m^2 c^2.
  double quadratic_level() const {
    return mass_shell_level(metric, selector);
  }
  /// The additive constant mech_energy + 1/2 epsilon m^2 c^2 separating the
  /// mechanical corner from the cyclic reduction of the quadratic corner.
  double routh_constant() const {
    return mech_energy +
           0.5 * metric.epsilon * selector.mass * selector.mass *
               selector.light_speed * selector.light_speed;
  }
};

/// One documented entry of the built-in scenario catalog.
struct CatalogEntry {
  std::string name;
  std::string summary;
  /// Parameter name -> one-line description including the default.
  std::vector<std::pair<std::string, std::string>> params;
};

/// Built-in scenarios in stable order: flat-newtonian, kepler-2d,
/// harmonic-2d, flat-minkowski-2d, static-weakfield, rotating-frame.
const std::vector<CatalogEntry>& catalog_entries();

/// The scenario document of a built-in catalog entry with the given
/// parameter overrides. Unknown names or parameters raise SchemaError.
nlohmann::ordered_json catalog_scenario_json(
    const std::string& name, const nlohmann::ordered_json& params);

/// Names of scenario files (stems) found in VARIDYN_CATALOG_DIR, sorted.
std::vector<std::string> user_catalog_names();

/// Resolve a scenario document into a ScenarioSpec. Validates the schema
/// (errors carry JSON-pointer paths), the constants' compatibility
/// relations, and both corners.
ScenarioSpec scenario_from_json(const nlohmann::ordered_json& doc,
                                const std::string& name_hint = "scenario");

/// Load a scenario by catalog name (built-in, then VARIDYN_CATALOG_DIR) or
/// by filesystem path to a JSON document.
ScenarioSpec load_scenario(const std::string& name_or_path);

}  // namespace varidyn
