#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "varidyn/scenario.hpp"

using namespace varidyn;
using ojson = nlohmann::ordered_json;

namespace {

ojson minimal_newtonian_doc() {
  return ojson::parse(R"json({
    "name": "toy",
    "system": {
      "type": "newtonian",
      "dim": 2,
      "fields": {"potential": "0.5*(q1^2+q2^2)"},
      "domain": {"lo": [-1.2, -1.2], "hi": [1.2, 1.2]}
    },
    "selector": {"m": 1.0, "epsilon": 1.0, "c": 1.0},
    "constants": {"E": 1.0, "calE": 1.0},
    "initial": {"q": [1.0, 0.0], "v": [0.0, 1.0], "t0": 0.0, "t1": 6.0},
    "grid": {"q": {"lo": [-0.7, -0.7], "hi": [0.7, 0.7]},
             "v": {"lo": [-0.3, -0.3], "hi": [0.3, 0.3]}}
  })json");
}

}  // namespace

TEST_CASE("every built-in catalog scenario resolves both corners") {
  REQUIRE(catalog_entries().size() == 6);
  const char* expected[] = {"flat-newtonian",   "kepler-2d",
                            "harmonic-2d",      "flat-minkowski-2d",
                            "static-weakfield", "rotating-frame"};
  for (std::size_t i = 0; i < 6; ++i) {
    CAPTURE(expected[i]);
    CHECK(catalog_entries()[i].name == expected[i]);
    CHECK(!catalog_entries()[i].params.empty());
    ScenarioSpec spec = load_scenario(expected[i]);
    CHECK(spec.name == expected[i]);
    CHECK(spec.dof() == 2);
    CHECK(spec.metric.spatial_dim() == 2);
    CHECK(spec.p0 == doctest::Approx(-spec.E).epsilon(1e-15));
    CHECK(spec.q0.size() == 2);
    CHECK(spec.grid_points == 10000);
  }
}

TEST_CASE("kepler catalog entry carries the expected physics") {
  ScenarioSpec spec = load_scenario("kepler-2d");
  CHECK(!spec.metric_primary);
  CHECK(spec.E == 1.0);
  CHECK(spec.mech_energy == -0.5);
  CHECK(spec.quadratic_level() == doctest::Approx(-0.5));
  CHECK(spec.routh_constant() == doctest::Approx(0.0));

  Vec q = {1.2, 0.0};
  CHECK(spec.system.potential.eval<double>(q) ==
        doctest::Approx(-1.0 / 1.2).epsilon(1e-15));
  Vec q1 = {1.0, 0.0};
  CHECK(spec.metric.g.eval<double>(q1)(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-13));

  // parameter override rescales the attracting strength and the lift
  ojson doc = ojson::parse(R"json({
    "system": {"type": "catalog", "name": "kepler-2d", "params": {"k": 2.0}},
    "constants": {"calE": -1.0}
  })json");
  ScenarioSpec strong = scenario_from_json(doc);
  CHECK(strong.mech_energy == -1.0);
  CHECK(strong.system.potential.eval<double>(q1) ==
        doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(strong.metric.g.eval<double>(q1)(0, 0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("metric-primary catalog entries derive the mechanical corner") {
  ScenarioSpec flat = load_scenario("flat-minkowski-2d");
  CHECK(flat.metric_primary);
  Vec q = {0.3, -0.2};
  CHECK(flat.system.potential.eval<double>(q) ==
        doctest::Approx(-0.78125).epsilon(1e-15));
  CHECK(flat.system.vector_potential.empty());
  CHECK(flat.tol.lagrangian_edge == 1e-10);
  CHECK(flat.tol.orbit == 1e-9);

  ScenarioSpec weak = load_scenario("static-weakfield");
  Vec q0 = {0.0, 0.0};
  Vec qp = {1.0, 0.0};
  CHECK(weak.system.potential.eval<double>(q0) ==
        doctest::Approx(-0.78125).epsilon(1e-14));
  CHECK(weak.system.potential.eval<double>(qp) ==
        doctest::Approx(-0.78125 / 1.2).epsilon(1e-14));

  ScenarioSpec rot = load_scenario("rotating-frame");
  REQUIRE(rot.system.vector_potential.size() == 2);
  Vec qr = {0.8, 0.0};
  // A_2 = -(E/coupling) g02/g00 = -1.25 (-0.16) / 0.9744
  CHECK(rot.system.vector_potential[1].eval<double>(qr) ==
        doctest::Approx(1.25 * 0.16 / 0.9744).epsilon(1e-13));
  CHECK(rot.system.vector_potential[0].eval<double>(qr) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("constants must respect the momentum-energy coupling") {
  ojson doc = minimal_newtonian_doc();
  doc["constants"]["p0"] = -1.0;
  CHECK(scenario_from_json(doc).p0 == -1.0);

  doc["constants"]["p0"] = -0.9;
  CHECK_THROWS_AS(scenario_from_json(doc), PreconditionError);

  ojson dual_c = minimal_newtonian_doc();
  dual_c["selector"]["c"] = 2.0;
  dual_c["constants"]["p0"] = -0.5;
  CHECK(scenario_from_json(dual_c).p0 == -0.5);
}

TEST_CASE("schema errors carry JSON-pointer paths") {
  ojson doc = minimal_newtonian_doc();
  doc.erase("constants");
  try {
    scenario_from_json(doc);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/constants");
  }

  doc = minimal_newtonian_doc();
  doc["system"]["fields"]["potential"] = "q1 +";
  try {
    scenario_from_json(doc);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/system/fields/potential");
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }

  doc = minimal_newtonian_doc();
  doc["initial"]["q"] = {1.0, 0.0, 0.0};
  try {
    scenario_from_json(doc);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/initial/q");
  }

  doc = minimal_newtonian_doc();
  doc["grid"]["q"]["hi"] = {5.0, 5.0};
  CHECK_THROWS_AS(scenario_from_json(doc), SchemaError);

  doc = minimal_newtonian_doc();
  doc["initial"]["t1"] = -1.0;
  CHECK_THROWS_AS(scenario_from_json(doc), SchemaError);

  doc = minimal_newtonian_doc();
  doc["initial"]["v"] = {0.0, 0.0};
  CHECK_THROWS_AS(scenario_from_json(doc), SchemaError);

  doc = minimal_newtonian_doc();
  doc["selector"]["epsilon"] = -1.0;
  CHECK_THROWS_AS(scenario_from_json(doc), PreconditionError);

  ojson metric_doc = ojson::parse(R"json({
    "system": {
      "type": "stationary_metric",
      "dim": 1,
      "fields": {"g": {"00": "1"}},
      "domain": {"lo": [-1.0], "hi": [1.0]}
    },
    "constants": {"E": 1.25, "calE": -0.5},
    "initial": {"q": [0.0], "v": [1.0], "t1": 1.0}
  })json");
  try {
    scenario_from_json(metric_doc);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/system/fields/g/11");
  }

  ojson unknown = ojson::parse(
      R"json({"system": {"type": "catalog", "name": "missing-entry"}})json");
  CHECK_THROWS_AS(scenario_from_json(unknown), SchemaError);

  ojson bad_param = ojson::parse(
      R"json({"system": {"type": "catalog", "name": "kepler-2d",
          "params": {"mass": 2.0}}})json");
  CHECK_THROWS_AS(scenario_from_json(bad_param), SchemaError);
}

TEST_CASE("custom metric scenario resolves end to end") {
  ojson doc = ojson::parse(R"json({
    "name": "drift-line",
    "system": {
      "type": "stationary_metric",
      "dim": 1,
      "fields": {"g": {"00": "1", "01": "0.25", "11": "-1"}},
      "domain": {"lo": [-3.0], "hi": [3.0]}
    },
    "selector": {"m": 1.0, "c": 1.0},
    "constants": {"E": 1.25, "calE": -0.5},
    "initial": {"q": [0.0], "v": [1.0], "t0": 0.0, "t1": 2.0},
    "grid": {"q": {"lo": [-1.0], "hi": [1.0]},
             "v": {"lo": [0.2], "hi": [0.6]}},
    "tolerances": {"lagrangian_edge": 5e-10},
    "seed": 3,
    "points": 500
  })json");
  ScenarioSpec spec = scenario_from_json(doc);
  CHECK(spec.name == "drift-line");
  CHECK(spec.metric_primary);
  CHECK(spec.seed == 3);
  CHECK(spec.grid_points == 500);
  CHECK(spec.tol.lagrangian_edge == 5e-10);
  CHECK(spec.tol.orbit == 1e-6);
  REQUIRE(spec.system.vector_potential.size() == 1);
  Vec q = {0.4};
  // A = -(E/coupling) g01 / g00 = -1.25 * 0.25
  CHECK(spec.system.vector_potential[0].eval<double>(q) ==
        doctest::Approx(-0.3125).epsilon(1e-14));
  // gamma = -(g11 - g01^2/g00) = 1 + 0.0625
  CHECK(spec.system.kinetic.eval<double>(q)(0, 0) ==
        doctest::Approx(1.0625).epsilon(1e-14));
}

TEST_CASE("scenarios load from files and the user catalog directory") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "varidyn_catalog_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "my-oscillator.json");
    out << minimal_newtonian_doc().dump(2);
  }

  ScenarioSpec by_path =
      load_scenario((dir / "my-oscillator.json").string());
  CHECK(by_path.name == "toy");

  setenv("VARIDYN_CATALOG_DIR", dir.c_str(), 1);
  std::vector<std::string> names = user_catalog_names();
  REQUIRE(names.size() == 1);
  CHECK(names[0] == "my-oscillator");
  ScenarioSpec by_name = load_scenario("my-oscillator");
  CHECK(by_name.dof() == 2);
  unsetenv("VARIDYN_CATALOG_DIR");
  CHECK(user_catalog_names().empty());

  CHECK_THROWS_AS(load_scenario("no-such-scenario"), SchemaError);

  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario((dir / "broken.json").string()),
                  SchemaError);
  fs::remove_all(dir);
}
