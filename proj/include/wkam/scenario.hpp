#pragma once

#include "wkam/singular.hpp"
#include "wkam/solver.hpp"

#include <cstdint>
#include <string>

namespace wkam {

/// A fully parsed scenario config: domain, Lagrangian, boundary data, and
/// every overridable tolerance. Owns the objects the solvers reference.
struct Scenario {
  std::string name;
  Domain domain;
  LagrangianSpec lagrangian;
  BoundaryData boundary;
  SolverOptions solver_options;
  TraceOptions trace_options;
  double grid_h = 0.05;
  std::uint64_t master_seed = 1;
  std::uint64_t hash = 0;       // digest of the canonical config
  std::string canonical;        // canonical serialization (sorted keys)
};

/// Parse a config file. Throws Error(ConfigError) with line/column
/// diagnostics on malformed input and with a key path on schema violations
/// (unknown keys are rejected).
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

}  // namespace wkam
