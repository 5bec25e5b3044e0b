#include "varidyn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <utility>

#include "varidyn/errors.hpp"
#include "varidyn/fields.hpp"

namespace varidyn {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// ----------------------------------------------------- schema access helpers

const ojson& need(const ojson& j, const std::string& path, const char* key) {
  if (!j.is_object())
    throw SchemaError(path.empty() ? "/" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(path + "/" + key, "required key is missing");
  return *it;
}

const ojson* maybe(const ojson& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double as_number(const ojson& j, const std::string& path) {
  if (!j.is_number())
    throw SchemaError(path, "expected a number");
  return j.get<double>();
}

double number_or(const ojson& j, const std::string& path, const char* key,
                 double fallback) {
  const ojson* v = maybe(j, key);
  return v ? as_number(*v, path + "/" + key) : fallback;
}

std::string as_string(const ojson& j, const std::string& path) {
  if (!j.is_string())
    throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

std::size_t as_count(const ojson& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw SchemaError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

Vec as_vector(const ojson& j, const std::string& path, std::size_t dim) {
  if (!j.is_array())
    throw SchemaError(path, "expected an array of numbers");
  if (dim != 0 && j.size() != dim)
    throw SchemaError(path, "expected " + std::to_string(dim) + " entries, found " +
                                std::to_string(j.size()));
  Vec out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], path + "/" + std::to_string(i)));
  return out;
}

Box as_box(const ojson& j, const std::string& path, std::size_t dim) {
  Box box;
  box.lo = as_vector(need(j, path, "lo"), path + "/lo", dim);
  box.hi = as_vector(need(j, path, "hi"), path + "/hi", dim);
  for (std::size_t i = 0; i < box.lo.size(); ++i)
    if (!(box.lo[i] < box.hi[i]))
      throw SchemaError(path, "box side " + std::to_string(i + 1) +
                                  " is empty (lo must be below hi)");
  return box;
}

ScalarField parse_field(const ojson& j, const std::string& path) {
  std::string text = as_string(j, path);
  try {
    return ScalarField::parse(text);
  } catch (const ParseError& e) {
    throw SchemaError(path, e.what());
  }
}

void check_contained(const Box& inner, const Box& outer,
                     const std::string& path) {
  for (std::size_t i = 0; i < inner.lo.size(); ++i)
    if (inner.lo[i] < outer.lo[i] || inner.hi[i] > outer.hi[i])
      throw SchemaError(path,
                        "sample box must lie inside the declared domain");
}

// --------------------------------------------------------- system assembly

NewtonianSystem read_newtonian(const ojson& sys_j, const std::string& path,
                               const std::string& label, double light_speed,
                               double coupling) {
  NewtonianSystem sys;
  const std::size_t n = as_count(need(sys_j, path, "dim"), path + "/dim");
  if (n == 0) throw SchemaError(path + "/dim", "dimension must be positive");
  sys.domain = as_box(need(sys_j, path, "domain"), path + "/domain", n);
  sys.light_speed = light_speed;
  sys.coupling = coupling;
  sys.label = label;

  const ojson& fields = need(sys_j, path, "fields");
  const std::string fpath = path + "/fields";

  if (const ojson* kin = maybe(fields, "kinetic")) {
    sys.kinetic = SymTensorField(n);
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = i; j <= n; ++j) {
        const std::string key = std::to_string(i) + std::to_string(j);
        const ojson* entry = maybe(*kin, key.c_str());
        if (entry)
          sys.kinetic.set(i - 1, j - 1,
                          parse_field(*entry, fpath + "/kinetic/" + key));
        else if (i == j)
          throw SchemaError(fpath + "/kinetic/" + key,
                            "diagonal kinetic entry is required when a "
                            "kinetic block is given");
        else
          sys.kinetic.set(i - 1, j - 1, ScalarField::constant(0.0));
      }
  } else {
    sys.kinetic = SymTensorField::identity(n);
  }

  if (const ojson* pot = maybe(fields, "potential"))
    sys.potential = parse_field(*pot, fpath + "/potential");
  else
    sys.potential = ScalarField::constant(0.0);

  if (const ojson* a = maybe(fields, "A")) {
    if (!a->is_array() || a->size() != n)
      throw SchemaError(fpath + "/A",
                        "expected " + std::to_string(n) +
                            " covector-potential components");
    for (std::size_t k = 0; k < n; ++k)
      sys.vector_potential.push_back(
          parse_field((*a)[k], fpath + "/A/" + std::to_string(k)));
  }
  return sys;
}

StationaryMetric read_metric(const ojson& sys_j, const std::string& path,
                             const std::string& label, double epsilon) {
  StationaryMetric met;
  const std::size_t n = as_count(need(sys_j, path, "dim"), path + "/dim");
  if (n == 0) throw SchemaError(path + "/dim", "dimension must be positive");
  met.spatial_domain = as_box(need(sys_j, path, "domain"), path + "/domain", n);
  met.epsilon = epsilon;
  met.label = label;

  const ojson& fields = need(sys_j, path, "fields");
  const ojson& g = need(fields, path + "/fields", "g");
  const std::string gpath = path + "/fields/g";
  met.g = SymTensorField(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = i; j <= n; ++j) {
      const std::string key = std::to_string(i) + std::to_string(j);
      const ojson* entry = maybe(g, key.c_str());
      if (entry)
        met.g.set(i, j, parse_field(*entry, gpath + "/" + key));
      else if (i == j)
        throw SchemaError(gpath + "/" + key,
                          "diagonal metric entry is required");
      else
        met.g.set(i, j, ScalarField::constant(0.0));
    }
  return met;
}

// --------------------------------------------------------- built-in catalog

ojson box_json(double lo, double hi, std::size_t n) {
  ojson b;
  b["lo"] = ojson::array();
  b["hi"] = ojson::array();
  for (std::size_t i = 0; i < n; ++i) {
    b["lo"].push_back(lo);
    b["hi"].push_back(hi);
  }
  return b;
}

double param_or(const ojson& params, const std::string& name, double fallback,
                const std::vector<std::string>& known) {
  if (!params.is_null() && !params.is_object())
    throw SchemaError("/system/params", "expected an object");
  if (params.is_object()) {
    for (const auto& item : params.items()) {
      bool ok = false;
      for (const auto& k : known) ok = ok || k == item.key();
      if (!ok)
        throw SchemaError("/system/params/" + item.key(),
                          "unknown catalog parameter");
    }
    if (params.contains(name))
      return as_number(params[name], "/system/params/" + name);
  }
  return fallback;
}

ojson common_sections(double E, double calE, double m, double c, double t1,
                      const Vec& q0, const Vec& v0) {
  ojson doc;
  doc["selector"] = {{"m", m}, {"epsilon", 1.0}, {"c", c}};
  doc["constants"] = {{"E", E}, {"calE", calE}};
  doc["initial"] = {{"q", q0}, {"v", v0}, {"t0", 0.0}, {"t1", t1}};
  doc["tolerances"] = {{"lagrangian_edge", 1e-9},
                       {"orbit", 1e-6},
                       {"drift", 1e-8},
                       {"integrate", 1e-12}};
  doc["seed"] = 0;
  doc["points"] = 10000;
  return doc;
}

ojson build_flat_newtonian(const ojson& params) {
  const double extent = param_or(params, "extent", 5.0, {"extent"});
  ojson doc = common_sections(1.0, 0.5, 1.0, 1.0, 3.0, {-1.0, -0.5},
                              {1.0, 0.4});
  doc["name"] = "flat-newtonian";
  doc["system"] = {{"type", "newtonian"},
                   {"dim", 2},
                   {"fields", ojson::object()},
                   {"domain", box_json(-extent, extent, 2)}};
  doc["grid"] = {{"q", box_json(-1.0, 1.0, 2)}, {"v", box_json(-0.4, 0.4, 2)}};
  doc["tolerances"]["lagrangian_edge"] = 1e-10;
  doc["tolerances"]["orbit"] = 1e-9;
  return doc;
}

ojson build_kepler(const ojson& params) {
  const double k = param_or(params, "k", 1.0, {"k"});
  ojson doc = common_sections(1.0, -0.5 * k, 1.0, 1.0,
                              6.283185307179586, {1.2, 0.0}, {0.0, 1.0});
  doc["name"] = "kepler-2d";
  doc["system"] = {
      {"type", "newtonian"},
      {"dim", 2},
      {"fields", {{"potential", "-(" + fmt_num(k) + ")/sqrt(q1^2+q2^2)"}}},
      {"domain", box_json(-1.6, 1.6, 2)}};
  doc["grid"] = {{"q", box_json(0.55, 1.15, 2)},
                 {"v", box_json(-0.35, 0.35, 2)}};
  return doc;
}

ojson build_harmonic(const ojson& params) {
  const double omega = param_or(params, "omega", 1.0, {"omega"});
  ojson doc = common_sections(1.0, 1.0, 1.0, 1.0,
                              6.283185307179586 / omega, {1.0, 0.0},
                              {0.0, 1.0});
  doc["name"] = "harmonic-2d";
  doc["system"] = {
      {"type", "newtonian"},
      {"dim", 2},
      {"fields",
       {{"potential",
         "0.5*(" + fmt_num(omega * omega) + ")*(q1^2+q2^2)"}}},
      {"domain", box_json(-1.2, 1.2, 2)}};
  doc["grid"] = {{"q", box_json(-0.75, 0.75, 2)},
                 {"v", box_json(-0.35, 0.35, 2)}};
  return doc;
}

ojson build_flat_minkowski(const ojson& params) {
  const double extent = param_or(params, "extent", 5.0, {"extent"});
  ojson doc = common_sections(1.25, -0.5, 1.0, 1.0, 3.0, {-1.0, -0.4},
                              {1.0, 0.45});
  doc["name"] = "flat-minkowski-2d";
  doc["system"] = {{"type", "stationary_metric"},
                   {"dim", 2},
                   {"fields",
                    {{"g", {{"00", "1"}, {"11", "-1"}, {"22", "-1"}}}}},
                   {"domain", box_json(-extent, extent, 2)}};
  doc["grid"] = {{"q", box_json(-1.0, 1.0, 2)},
                 {"v", box_json(-0.42, 0.42, 2)}};
  doc["tolerances"]["lagrangian_edge"] = 1e-10;
  doc["tolerances"]["orbit"] = 1e-9;
  return doc;
}

ojson build_static_weakfield(const ojson& params) {
  const double g1 = param_or(params, "g1", 0.1, {"g1"});
  ojson doc = common_sections(1.25, -0.5, 1.0, 1.0, 2.5, {-1.0, -0.5},
                              {1.0, 0.4});
  doc["name"] = "static-weakfield";
  doc["system"] = {
      {"type", "stationary_metric"},
      {"dim", 2},
      {"fields",
       {{"g",
         {{"00", "1+" + fmt_num(2.0 * g1) + "*q1"},
          {"11", "-1"},
          {"22", "-1"}}}}},
      {"domain", box_json(-2.0, 2.0, 2)}};
  doc["grid"] = {{"q", box_json(-1.0, 1.0, 2)},
                 {"v", box_json(-0.4, 0.4, 2)}};
  return doc;
}

ojson build_rotating_frame(const ojson& params) {
  const double omega = param_or(params, "omega", 0.2, {"omega"});
  ojson doc = common_sections(1.25, -0.5, 1.0, 1.0, 3.0, {0.8, 0.0},
                              {0.0, 1.0});
  doc["name"] = "rotating-frame";
  doc["system"] = {
      {"type", "stationary_metric"},
      {"dim", 2},
      {"fields",
       {{"g",
         {{"00", "1-" + fmt_num(omega * omega) + "*(q1^2+q2^2)"},
          {"01", fmt_num(omega) + "*q2"},
          {"02", "-(" + fmt_num(omega) + ")*q1"},
          {"11", "-1"},
          {"22", "-1"}}}}},
      {"domain", box_json(-2.0, 2.0, 2)}};
  doc["grid"] = {{"q", box_json(-1.0, 1.0, 2)},
                 {"v", box_json(-0.35, 0.35, 2)}};
  return doc;
}

}  // namespace

const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"flat-newtonian",
       "free particle on a plane; every mapping is exact",
       {{"extent", "domain half-width (default 5)"}}},
      {"kepler-2d",
       "attracting center -k/r; bound elliptic orbit",
       {{"k", "strength of the attracting center (default 1)"}}},
      {"harmonic-2d",
       "isotropic oscillator; circular orbit at unit radius",
       {{"omega", "angular frequency (default 1)"}}},
      {"flat-minkowski-2d",
       "flat stationary metric in 2+1 dimensions; straight geodesics",
       {{"extent", "spatial domain half-width (default 5)"}}},
      {"static-weakfield",
       "static metric with a uniform weak-field gradient in g00",
       {{"g1", "field gradient; g00 = 1 + 2 g1 q1 (default 0.1)"}}},
      {"rotating-frame",
       "flat metric seen from a rotating frame; nonzero g_0k drift row",
       {{"omega", "frame angular velocity (default 0.2)"}}},
  };
  return entries;
}

nlohmann::ordered_json catalog_scenario_json(
    const std::string& name, const nlohmann::ordered_json& params) {
  if (name == "flat-newtonian") return build_flat_newtonian(params);
  if (name == "kepler-2d") return build_kepler(params);
  if (name == "harmonic-2d") return build_harmonic(params);
  if (name == "flat-minkowski-2d") return build_flat_minkowski(params);
  if (name == "static-weakfield") return build_static_weakfield(params);
  if (name == "rotating-frame") return build_rotating_frame(params);
  throw SchemaError("/system/name", "unknown catalog scenario \"" + name +
                                        "\"; run list-catalog for the "
                                        "available names");
}

std::vector<std::string> user_catalog_names() {
  std::vector<std::string> names;
  const char* dir = std::getenv("VARIDYN_CATALOG_DIR");
  if (!dir || !*dir) return names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json")
      names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

ScenarioSpec scenario_from_json(const nlohmann::ordered_json& doc,
                                const std::string& name_hint) {
  if (!doc.is_object())
    throw SchemaError("/", "scenario document must be a JSON object");

  const ojson& sys_j = need(doc, "", "system");
  const std::string type = as_string(need(sys_j, "/system", "type"),
                                     "/system/type");

  if (type == "catalog") {
    const std::string name =
        as_string(need(sys_j, "/system", "name"), "/system/name");
    const ojson* params = maybe(sys_j, "params");
    ojson merged = catalog_scenario_json(name, params ? *params : ojson());
    for (const auto& item : doc.items()) {
      if (item.key() == "system") continue;
      if (item.value().is_object() && merged.contains(item.key()) &&
          merged[item.key()].is_object()) {
        for (const auto& inner : item.value().items())
          merged[item.key()][inner.key()] = inner.value();
      } else {
        merged[item.key()] = item.value();
      }
    }
    return scenario_from_json(merged, name);
  }

  ScenarioSpec spec;
  spec.name = doc.contains("name") ? as_string(doc["name"], "/name")
                                   : name_hint;

  // selector
  const ojson* sel_j = maybe(doc, "selector");
  const std::string sel_path = "/selector";
  double epsilon = 1.0;
  if (sel_j) {
    spec.selector.mass = number_or(*sel_j, sel_path, "m", 1.0);
    spec.selector.light_speed = number_or(*sel_j, sel_path, "c", 1.0);
    epsilon = number_or(*sel_j, sel_path, "epsilon", 1.0);
  }
  if (spec.selector.mass < 0.0)
    throw SchemaError(sel_path + "/m", "mass must be non-negative");
  if (!(spec.selector.light_speed > 0.0))
    throw SchemaError(sel_path + "/c", "light speed must be positive");
  if (epsilon != 1.0)
    throw PreconditionError(
        "scenarios resolve both the mechanical and the geometric corner, "
        "which assumes the (+, -, ..., -) signature convention "
        "(epsilon = +1); the opposite convention is supported only by the "
        "geometric core");

  // constants
  const ojson& con_j = need(doc, "", "constants");
  const std::string con_path = "/constants";
  spec.E = as_number(need(con_j, con_path, "E"), con_path + "/E");
  spec.mech_energy =
      as_number(need(con_j, con_path, "calE"), con_path + "/calE");
  spec.coupling = number_or(con_j, con_path, "coupling", 1.0);
  spec.p0 = -spec.E / spec.selector.light_speed;
  if (const ojson* p0_j = maybe(con_j, "p0")) {
    const double given = as_number(*p0_j, con_path + "/p0");
    if (std::fabs(given * spec.selector.light_speed + spec.E) >
        1e-9 * (1.0 + std::fabs(spec.E)))
      throw PreconditionError(
          "the declared time-conjugate momentum violates the "
          "momentum-energy coupling p0 c = -E that identifies the covector "
          "potential of the two corners");
    spec.p0 = given;
  }

  // system / metric corner
  if (type == "newtonian") {
    spec.metric_primary = false;
    spec.system = read_newtonian(sys_j, "/system", spec.name,
                                 spec.selector.light_speed, spec.coupling);
    validate_system(spec.system);
    spec.metric = newtonian_to_metric(spec.system, spec.selector, spec.E,
                                      spec.mech_energy);
  } else if (type == "stationary_metric") {
    spec.metric_primary = true;
    spec.metric = read_metric(sys_j, "/system", spec.name, epsilon);
    validate_metric(spec.metric);
    spec.system = metric_to_newtonian(spec.metric, spec.selector, spec.E,
                                      spec.mech_energy, spec.coupling);
  } else {
    throw SchemaError("/system/type",
                      "expected \"newtonian\", \"stationary_metric\", or "
                      "\"catalog\"");
  }
  const std::size_t n = spec.dof();

  // initial data
  const ojson& ini_j = need(doc, "", "initial");
  const std::string ini_path = "/initial";
  spec.q0 = as_vector(need(ini_j, ini_path, "q"), ini_path + "/q", n);
  spec.v0 = as_vector(need(ini_j, ini_path, "v"), ini_path + "/v", n);
  spec.t0 = number_or(ini_j, ini_path, "t0", 0.0);
  spec.t1 = number_or(ini_j, ini_path, "t1", spec.t0 + 1.0);
  if (!(spec.t1 > spec.t0))
    throw SchemaError(ini_path + "/t1",
                      "integration window must have t1 > t0");
  double vnorm = 0.0;
  for (double c : spec.v0) vnorm += c * c;
  if (!(vnorm > 0.0))
    throw SchemaError(ini_path + "/v", "launch direction must be nonzero");

  // sample grid
  const Box& domain = spec.system.domain;
  if (const ojson* grid_j = maybe(doc, "grid")) {
    spec.grid_q = as_box(need(*grid_j, "/grid", "q"), "/grid/q", n);
    spec.grid_v = as_box(need(*grid_j, "/grid", "v"), "/grid/v", n);
  } else {
    spec.grid_q = domain;
    spec.grid_v = Box{Vec(n, -0.3), Vec(n, 0.3)};
  }
  check_contained(spec.grid_q, domain, "/grid/q");

  // tolerances
  if (const ojson* tol_j = maybe(doc, "tolerances")) {
    const std::string tpath = "/tolerances";
    spec.tol.lagrangian_edge =
        number_or(*tol_j, tpath, "lagrangian_edge", spec.tol.lagrangian_edge);
    spec.tol.orbit = number_or(*tol_j, tpath, "orbit", spec.tol.orbit);
    spec.tol.drift = number_or(*tol_j, tpath, "drift", spec.tol.drift);
    spec.tol.integrate =
        number_or(*tol_j, tpath, "integrate", spec.tol.integrate);
    for (double t : {spec.tol.lagrangian_edge, spec.tol.orbit, spec.tol.drift,
                     spec.tol.integrate})
      if (!(t > 0.0))
        throw SchemaError(tpath, "tolerances must be positive");
  }

  if (const ojson* seed_j = maybe(doc, "seed"))
    spec.seed = as_count(*seed_j, "/seed");
  if (const ojson* pts_j = maybe(doc, "points")) {
    spec.grid_points = as_count(*pts_j, "/points");
    if (spec.grid_points == 0)
      throw SchemaError("/points", "sample count must be positive");
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& name_or_path) {
  for (const CatalogEntry& entry : catalog_entries())
    if (entry.name == name_or_path)
      return scenario_from_json(catalog_scenario_json(name_or_path, {}),
                                name_or_path);

  std::filesystem::path candidate;
  const char* dir = std::getenv("VARIDYN_CATALOG_DIR");
  if (dir && *dir) {
    std::filesystem::path p =
        std::filesystem::path(dir) / (name_or_path + ".json");
    if (std::filesystem::exists(p)) candidate = p;
  }
  if (candidate.empty()) {
    if (std::filesystem::exists(name_or_path))
      candidate = name_or_path;
    else
      throw SchemaError("/",
                        "\"" + name_or_path +
                            "\" is neither a catalog scenario nor a readable "
                            "file; run list-catalog for the available names");
  }

  std::ifstream in(candidate);
  if (!in)
    throw SchemaError("/", "cannot open scenario file " + candidate.string());
  ojson doc;
  try {
    doc = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("/", std::string("scenario file is not valid JSON: ") +
                               e.what());
  }
  return scenario_from_json(doc, candidate.stem().string());
}

}  // namespace varidyn
