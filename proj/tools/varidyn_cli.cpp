// Command-line driver: scenario ingestion, reduction/lift sample tables,
// trajectory emission, the commuting-diagram verifier, and the conservation
// audit. Exit codes: 0 pass, 2 tolerance failure, 1 error.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "varidyn/diagram.hpp"
#include "varidyn/errors.hpp"
#include "varidyn/integrate.hpp"
#include "varidyn/jacobi.hpp"
#include "varidyn/lagrangian.hpp"
#include "varidyn/scenario.hpp"
#include "varidyn/systems.hpp"

namespace fs = std::filesystem;
using namespace varidyn;
using ojson = nlohmann::ordered_json;

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << body;
  out.flush();
  if (!out) throw Error("failed while writing " + path.string());
}

std::string csv_of(const std::vector<std::string>& columns,
                   const std::vector<Vec>& rows) {
  std::string s;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) s += ',';
    s += columns[i];
  }
  s += '\n';
  for (const Vec& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += num(row[i]);
    }
    s += '\n';
  }
  return s;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char ch : name)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ||
            ch == '_' || ch == '.')
               ? ch
               : '-';
  if (out.empty()) out = "scenario";
  return out;
}

/// Options shared by every scenario-driven subcommand. Presence of --tol,
/// --seed, and --points is tracked so only explicit values override the
/// scenario file.
struct Common {
  std::string scenario;
  std::string out_dir = ".";
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::size_t points = 0;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* points_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, const std::string& tol_doc) {
  cmd->add_option("scenario", c.scenario,
                  "catalog name, VARIDYN_CATALOG_DIR name, or path to a "
                  "scenario JSON file")
      ->required();
  cmd->add_option("--out", c.out_dir,
                  "directory for the emitted artifacts (created if missing)")
      ->capture_default_str();
  c.tol_opt = cmd->add_option("--tol", c.tol, tol_doc)
                  ->check(CLI::PositiveNumber);
  c.seed_opt = cmd->add_option("--seed", c.seed,
                               "override the scenario's sample-grid seed");
  c.points_opt = cmd->add_option("--points", c.points,
                                 "override the scenario's sample count")
                     ->check(CLI::PositiveNumber);
}

enum class TolTarget { edge, drift };

ScenarioSpec prepare(const Common& c, TolTarget target) {
  ScenarioSpec spec = load_scenario(c.scenario);
  if (c.seed_opt->count()) spec.seed = c.seed;
  if (c.points_opt->count()) spec.grid_points = c.points;
  if (c.tol_opt->count()) {
    if (target == TolTarget::edge)
      spec.tol.lagrangian_edge = c.tol;
    else
      spec.tol.drift = c.tol;
  }
  return spec;
}

fs::path ensure_out(const Common& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

// ---- reduce / lift sample tables -------------------------------------------

int run_table(const Common& c, TableKind kind, const std::string& cmd) {
  const ScenarioSpec spec = prepare(c, TolTarget::edge);
  const SampleTable t = reduction_sample_table(spec, kind);
  const fs::path dir = ensure_out(c);
  const std::string stem = sanitize(spec.name) + "-" + cmd;

  const fs::path csv_path = dir / (stem + ".csv");
  write_file(csv_path, csv_of(t.columns, t.rows));

  ojson j;
  j["command"] = cmd;
  j["scenario"] = spec.name;
  j["numeric"] = t.numeric_label;
  j["closed_form"] = t.closed_label;
  j["note"] = t.note;
  j["grid"] = {{"points", spec.grid_points}, {"seed", spec.seed}};
  j["samples"] = t.rows.size();
  j["skipped"] = t.skipped;
  j["max_abs_error"] = t.max_abs_error;
  j["tolerance"] = t.tolerance;
  j["table_csv"] = csv_path.filename().string();
  j["pass"] = t.pass;
  const fs::path json_path = dir / (stem + ".json");
  write_file(json_path, j.dump(2) + "\n");

  std::printf(
      "%s %s: %zu samples (%zu skipped), max |numeric - closed| = %.3e, "
      "tolerance %.3e -> %s\n",
      cmd.c_str(), spec.name.c_str(), t.rows.size(), t.skipped,
      t.max_abs_error, t.tolerance, t.pass ? "PASS" : "FAIL");
  std::printf("wrote %s and %s\n", csv_path.string().c_str(),
              json_path.string().c_str());
  return t.pass ? 0 : 2;
}

// ---- integrate --------------------------------------------------------------

int run_integrate(const Common& c) {
  const ScenarioSpec spec = prepare(c, TolTarget::drift);
  const LagrangianPtr mech = newtonian_lagrangian(spec.system);
  const EnergyPtr efn = energy_function(mech);

  Vec dir = spec.v0;
  double len = 0.0;
  for (double x : dir) len += x * x;
  len = std::sqrt(len);
  for (double& x : dir) x /= len;
  const double phi = solve_theta_prime(*efn, spec.mech_energy, spec.q0, dir);
  Vec v = dir;
  for (double& x : v) x /= phi;

  IntegrateOptions opts;
  opts.tol = spec.tol.integrate;
  const Trajectory traj =
      integrate(*mech, spec.q0, v, spec.t0, spec.t1, opts);

  const std::size_t n = spec.dof();
  std::vector<std::string> columns;
  columns.push_back("param");
  for (std::size_t i = 1; i <= n; ++i)
    columns.push_back("q" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i)
    columns.push_back("v" + std::to_string(i));

  const std::size_t segments = 1000;  // plot-ready uniform sampling
  std::vector<Vec> rows;
  rows.reserve(segments + 1);
  for (std::size_t i = 0; i <= segments; ++i) {
    const double t = spec.t0 + (spec.t1 - spec.t0) *
                                   (static_cast<double>(i) / segments);
    Vec row;
    row.reserve(1 + 2 * n);
    row.push_back(t);
    const Vec q = traj.position_at(t);
    const Vec u = traj.velocity_at(t);
    row.insert(row.end(), q.begin(), q.end());
    row.insert(row.end(), u.begin(), u.end());
    rows.push_back(std::move(row));
  }

  const DriftReport drift = monitor_conserved(
      traj, [efn](ConstSpan q, ConstSpan u, double t) {
        return efn->eval(q, u, t);
      });
  const bool pass =
      drift.max_abs_drift <= spec.tol.drift &&
      std::fabs(drift.reference - spec.mech_energy) <=
          spec.tol.drift * (1.0 + std::fabs(spec.mech_energy));

  const fs::path dir_path = ensure_out(c);
  const std::string stem = sanitize(spec.name) + "-trajectory";
  const fs::path csv_path = dir_path / (stem + ".csv");
  write_file(csv_path, csv_of(columns, rows));

  ojson j;
  j["command"] = "integrate";
  j["scenario"] = spec.name;
  j["window"] = {{"t0", spec.t0}, {"t1", spec.t1}};
  j["nodes"] = traj.nodes().size();
  j["energy"] = {{"expected", spec.mech_energy},
                 {"initial", drift.reference},
                 {"max_abs_drift", drift.max_abs_drift},
                 {"tolerance", spec.tol.drift}};
  j["trajectory_csv"] = csv_path.filename().string();
  j["pass"] = pass;
  const fs::path json_path = dir_path / (sanitize(spec.name) +
                                          "-integrate.json");
  write_file(json_path, j.dump(2) + "\n");

  std::printf(
      "integrate %s: [%g, %g], %zu accepted nodes, energy drift %.3e, "
      "tolerance %.3e -> %s\n",
      spec.name.c_str(), spec.t0, spec.t1, traj.nodes().size(),
      drift.max_abs_drift, spec.tol.drift, pass ? "PASS" : "FAIL");
  std::printf("wrote %s and %s\n", csv_path.string().c_str(),
              json_path.string().c_str());
  return pass ? 0 : 2;
}

// ---- diagram / energy-audit --------------------------------------------------

void print_report(const DiagramReport& rep) {
  for (const EdgeReport& e : rep.edges) {
    if (!e.applicable)
      std::printf("  edge  %s: SKIP (%s)\n", e.name.c_str(), e.note.c_str());
    else
      std::printf("  edge  %s: %s (max %.3e, tol %.3e, %zu samples, %zu "
                  "skipped)\n",
                  e.name.c_str(), e.pass ? "PASS" : "FAIL", e.max_discrepancy,
                  e.tolerance, e.samples, e.skipped);
  }
  for (const OrbitComparison& o : rep.orbits) {
    if (!o.applicable)
      std::printf("  orbit %s: SKIP (%s)\n", o.name.c_str(), o.note.c_str());
    else
      std::printf("  orbit %s: %s (distance %.3e, tol %.3e)\n",
                  o.name.c_str(), o.pass ? "PASS" : "FAIL", o.distance,
                  o.tolerance);
  }
  for (const ConservationEntry& d : rep.drifts) {
    if (!d.applicable)
      std::printf("  drift %s: SKIP (%s)\n", d.name.c_str(), d.note.c_str());
    else
      std::printf("  drift %s: %s (drift %.3e, launch %.9g vs expected "
                  "%.9g, tol %.3e)\n",
                  d.name.c_str(), d.pass ? "PASS" : "FAIL", d.drift,
                  d.initial, d.expected, d.tolerance);
  }
  if (rep.epsilon_sign_checked)
    std::printf("  sign  epsilon*g(u,u) along the quadratic run: %s (min "
                "%.3e)\n",
                rep.epsilon_sign_preserved ? "PASS" : "FAIL",
                rep.epsilon_sign_min);
  if (rep.time_reconstruction.applicable)
    std::printf("  clock reconstruction: %s (duration %.9g vs %.9g, rel "
                "%.3e, tol %.3e)\n",
                rep.time_reconstruction.pass ? "PASS" : "FAIL",
                rep.time_reconstruction.duration,
                rep.time_reconstruction.expected_duration,
                rep.time_reconstruction.rel_error,
                rep.time_reconstruction.tolerance);
}

int emit_report(const Common& c, const DiagramReport& rep,
                const std::string& file_tag, const std::string& headline) {
  const fs::path dir = ensure_out(c);
  const fs::path json_path =
      dir / (sanitize(rep.scenario) + "-" + file_tag + ".json");
  write_file(json_path, rep.to_json().dump(2) + "\n");
  print_report(rep);
  std::printf("%s: %s\n", headline.c_str(), rep.pass ? "PASS" : "FAIL");
  std::printf("wrote %s\n", json_path.string().c_str());
  return rep.pass ? 0 : 2;
}

int run_diagram(const Common& c, const std::string& loop) {
  const ScenarioSpec spec = prepare(c, TolTarget::edge);
  DiagramReport rep;
  if (loop == "full")
    rep = verify_commuting_diagram(spec);
  else
    rep = run_loop(spec, loop_from_name(loop));
  return emit_report(c, rep, "diagram-" + sanitize(loop),
                     "diagram " + spec.name + " [" + loop + "]");
}

int run_audit(const Common& c) {
  const ScenarioSpec spec = prepare(c, TolTarget::drift);
  const DiagramReport rep = audit_conservation(spec);
  return emit_report(c, rep, "energy-audit", "energy-audit " + spec.name);
}

// ---- list-catalog -------------------------------------------------------------

int run_list() {
  std::printf("built-in scenarios:\n");
  for (const CatalogEntry& entry : catalog_entries()) {
    std::printf("  %s\n      %s\n", entry.name.c_str(),
                entry.summary.c_str());
    for (const auto& [pname, pdoc] : entry.params)
      std::printf("      param %s: %s\n", pname.c_str(), pdoc.c_str());
  }
  const std::vector<std::string> user = user_catalog_names();
  if (!user.empty()) {
    std::printf("user scenarios (VARIDYN_CATALOG_DIR):\n");
    for (const std::string& name : user)
      std::printf("  %s\n", name.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Corner Lagrangians of stationary systems: fixed-energy and cyclic "
      "reductions, their inverses, geodesic/mechanical correspondences, and "
      "the commuting-diagram verifier."};
  app.require_subcommand(1);

  const std::string edge_tol_doc =
      "override the pointwise comparison tolerance";
  const std::string drift_tol_doc =
      "override the conserved-quantity drift tolerance";

  Common c_rr, c_rj, c_lr, c_lj, c_in, c_di, c_au;
  std::string loop = "full";

  CLI::App* reduce_routh = app.add_subcommand(
      "reduce-routh",
      "eliminate the cyclic time coordinate of the quadratic geodesic corner "
      "at p0 and tabulate it against the closed reduced form");
  add_common(reduce_routh, c_rr, edge_tol_doc);

  CLI::App* reduce_jacobi = app.add_subcommand(
      "reduce-jacobi",
      "reduce the mechanical corner at fixed energy and tabulate it against "
      "the closed arc functional");
  add_common(reduce_jacobi, c_rj, edge_tol_doc);

  CLI::App* lift_routh = app.add_subcommand(
      "lift-routh",
      "rebuild the quadratic corner from the cyclic reduction and its "
      "momentum profile, tabulated against the closed form");
  add_common(lift_routh, c_lr, edge_tol_doc);

  CLI::App* lift_jacobi = app.add_subcommand(
      "lift-jacobi",
      "lift the arc functional at the mass-shell level back to the quadratic "
      "corner, tabulated against the closed form");
  add_common(lift_jacobi, c_lj, edge_tol_doc);

  CLI::App* integrate_cmd = app.add_subcommand(
      "integrate",
      "integrate the mechanical corner over the scenario window and emit the "
      "trajectory with its energy-drift report");
  add_common(integrate_cmd, c_in, drift_tol_doc);

  CLI::App* diagram_cmd = app.add_subcommand(
      "diagram",
      "verify the commuting diagram of the four corner Lagrangians (or one "
      "loop of it) and emit the JSON report");
  add_common(diagram_cmd, c_di, edge_tol_doc);
  diagram_cmd->add_option(
      "--loop", loop,
      "fixed-energy-mechanical | fixed-energy-geodesic | affine-lift | "
      "cyclic-lift | full")
      ->capture_default_str();

  CLI::App* audit_cmd = app.add_subcommand(
      "energy-audit",
      "monitor the five corner invariants along the integrated runs and "
      "emit the conservation report");
  add_common(audit_cmd, c_au, drift_tol_doc);

  CLI::App* list_cmd = app.add_subcommand(
      "list-catalog", "print the built-in scenarios, their parameters, and "
                      "any VARIDYN_CATALOG_DIR entries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (list_cmd->parsed()) return run_list();
    if (reduce_routh->parsed())
      return run_table(c_rr, TableKind::routh_reduce_quadratic,
                       "reduce-routh");
    if (reduce_jacobi->parsed())
      return run_table(c_rj, TableKind::jacobi_reduce_mechanical,
                       "reduce-jacobi");
    if (lift_routh->parsed())
      return run_table(c_lr, TableKind::routh_lift_quadratic, "lift-routh");
    if (lift_jacobi->parsed())
      return run_table(c_lj, TableKind::jacobi_lift_quadratic, "lift-jacobi");
    if (integrate_cmd->parsed()) return run_integrate(c_in);
    if (diagram_cmd->parsed()) return run_diagram(c_di, loop);
    if (audit_cmd->parsed()) return run_audit(c_au);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 1;
  } catch (const varidyn::ParseError& e) {
    std::fprintf(stderr, "expression error: %s\n", e.what());
    return 1;
  } catch (const EdgeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;  // unreachable: require_subcommand guarantees a dispatch
}
