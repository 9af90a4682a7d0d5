#pragma once

#include "wkam/singular.hpp"

#include <cstdint>
#include <string>

namespace wkam {

struct CheckEntry {
  std::string name;
  int samples = 0;
  double worst = 0.0;
  double tol = 0.0;
  bool pass = false;
  bool applicable = true;
  std::string note;
};

struct VerificationReport {
  std::vector<CheckEntry> checks;
  std::uint64_t scenario_hash = 0;

  bool all_pass() const {
    for (const auto& c : checks)
      if (c.applicable && !c.pass) return false;
    return true;
  }
};

/// Fitted one-sided quadratic constants are outputs, not gates: pass/fail is
/// the stability of the fit under sample doubling (a semiconvex kink makes
/// the fitted constant blow up as the sampling refines).
CheckEntry check_local_semiconcavity(const ValueSolver& solver, double rho, int samples,
                                     std::uint64_t seed);

CheckEntry check_global_semiconcavity(const ValueSolver& solver, int samples, std::uint64_t seed);

CheckEntry check_boundary_semiconvexity(const ValueSolver& solver, const BoundaryPoint& xbar,
                                        int samples, std::uint64_t seed);

CheckEntry check_domination(const ValueSolver& solver, int pairs, std::uint64_t seed);

/// |H(x, Du_h)| at grid points passing the gradient-stability mask;
/// reports the 99th-percentile residual against c_res * h.
CheckEntry check_pde(const ValueSolver& solver, const ValueField& field, double c_res = 3.0);

/// Monotonicity of the value along a mechanical chain and agreement of the
/// discrete growth rate with <p, A^{-1} p>.
CheckEntry check_monotonicity(const SingularChain& chain, const MechanicalSpec& mech);

struct VerifyOptions {
  int samples = 2000;
  int pairs = 2000;
  double rho = 0.0;     // 0: half the sampled inradius
  double grid_h = 0.05;
  double c_res = 3.0;
  std::uint64_t scenario_hash = 0;  // seeds every sampler
};

/// The full battery driven by cmd_verify. `field` may be null (computed at
/// opts.grid_h). Checks whose hypotheses fail are reported inapplicable.
VerificationReport run_standard_checks(const ValueSolver& solver, const SingularTracer& tracer,
                                       const ValueField* field, const VerifyOptions& opts);

}  // namespace wkam
