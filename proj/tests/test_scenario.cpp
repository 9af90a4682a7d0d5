#include "wkam/scenario.hpp"

#include <doctest.h>

#include <string>

using namespace wkam;

namespace {

const char* kDiskConfig = R"json({
  "schema_version": 1,
  "name": "disk-basic",
  "domain": {"kind": "disk", "center": [0, 0], "radius": 1.0},
  "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0},
  "boundary": {"kind": "constant", "value": 0.0},
  "grid": {"h": 0.1},
  "seeds": {"master": 7}
})json";

}  // namespace

TEST_CASE("a valid config parses into a scenario") {
  Scenario sc = parse_scenario(kDiskConfig);
  CHECK(sc.name == "disk-basic");
  CHECK(sc.domain.kind() == DomainKind::Disk);
  CHECK(sc.grid_h == 0.1);
  CHECK(sc.master_seed == 7);
  CHECK(sc.lagrangian.mech.has_value());
  CHECK(sc.boundary.nu.has_value());
  CHECK(sc.hash != 0);

  // same text, same digest; different text, different digest
  CHECK(parse_scenario(kDiskConfig).hash == sc.hash);
  std::string other(kDiskConfig);
  other.replace(other.find("0.1"), 3, "0.2");
  CHECK(parse_scenario(other).hash != sc.hash);
}

TEST_CASE("unknown keys are rejected with a path") {
  std::string bad(kDiskConfig);
  bad.insert(bad.rfind('}'), R"(, "tollerances": {})");
  try {
    parse_scenario(bad);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigError);
    CHECK(std::string(e.what()).find("tollerances") != std::string::npos);
  }

  std::string bad2(kDiskConfig);
  bad2.replace(bad2.find("\"radius\""), 8, "\"radus\"");
  CHECK_THROWS_AS(parse_scenario(bad2), Error);
}

TEST_CASE("schema version is mandatory") {
  std::string noversion(kDiskConfig);
  noversion.replace(noversion.find("\"schema_version\": 1,"), 21, "");
  CHECK_THROWS_AS(parse_scenario(noversion), Error);

  std::string wrong(kDiskConfig);
  wrong.replace(wrong.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  CHECK_THROWS_AS(parse_scenario(wrong), Error);
}

TEST_CASE("malformed json reports line and column") {
  try {
    parse_scenario("{\n  \"schema_version\": 1,\n  \"domain\": [}\n}");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("line") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
}

TEST_CASE("domain and lagrangian variants") {
  Scenario rect = parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "rectangle", "min": [0, 0], "max": [2, 1]},
    "lagrangian": {"kind": "mechanical", "potential_constant": -1.0},
    "boundary": {"kind": "constant", "value": 0.0}
  })json");
  CHECK(rect.domain.kind() == DomainKind::Rectangle);
  CHECK(rect.lagrangian.mech->V(Vec::Zero(2)) == -1.0);

  Scenario poly = parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "polygon",
               "vertices": [[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]]},
    "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0},
    "boundary": {"kind": "constant", "value": 0.0},
    "quasiconvexity_hint": 1.6
  })json");
  CHECK(poly.domain.kind() == DomainKind::Polygon);
  CHECK(poly.domain.quasiconvexity_constant() == 1.6);

  Scenario ell = parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "implicit", "name": "ellipse", "center": [0,0],
               "semi_x": 2.0, "semi_y": 1.0},
    "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0},
    "boundary": {"kind": "affine", "gradient": [0.1, 0.0], "offset": 0.0, "nu": 0.5}
  })json");
  CHECK(ell.domain.kind() == DomainKind::Implicit);
  CHECK(*ell.boundary.nu == 0.5);
  BoundaryPoint bp = ell.domain.boundary_point_at_arc(0.0);
  CHECK(ell.boundary.g(bp) == doctest::Approx(0.1 * bp.point[0]));

  // clockwise polygons surface as config errors
  CHECK_THROWS_AS(parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "polygon", "vertices": [[0,0],[0,1],[1,1],[1,0]]},
    "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0},
    "boundary": {"kind": "constant", "value": 0.0}
  })json"),
                  Error);

  // drift dimension mismatch
  CHECK_THROWS_AS(parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "disk", "center": [0, 0], "radius": 1.0},
    "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0, "drift": [1, 0, 0]},
    "boundary": {"kind": "constant", "value": 0.0}
  })json"),
                  Error);
}

TEST_CASE("tolerance overrides land in the option structs") {
  Scenario sc = parse_scenario(R"json({
    "schema_version": 1,
    "domain": {"kind": "disk", "center": [0, 0], "radius": 1.0},
    "lagrangian": {"kind": "kinetic", "kinetic": 0.5, "constant": 1.0},
    "boundary": {"kind": "constant", "value": 0.0},
    "tolerances": {"tol_opt": 1e-9, "m_bd": 128, "eps_crit": 5e-3, "h_flow": 0.002}
  })json");
  CHECK(sc.solver_options.action.tol_opt == 1e-9);
  CHECK(sc.solver_options.refine_action.tol_opt == 1e-9);
  CHECK(sc.solver_options.m_bd == 128);
  CHECK(sc.trace_options.eps_crit == 5e-3);
  CHECK(sc.trace_options.h_flow == 0.002);
}
