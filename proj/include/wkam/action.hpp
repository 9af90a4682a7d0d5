#pragma once

#include "wkam/common.hpp"
#include "wkam/geometry.hpp"
#include "wkam/lagrangian.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace wkam {

/// Momentum arc of a discretized minimizer. covector[i] is the Legendre dual
/// of the segment leaving node i (the arriving segment for the last node).
struct DualArc {
  std::vector<Vec> covectors;
};

struct MinimizerResult {
  double value = 0.0;
  Path path;
  DualArc dual;
  std::vector<std::uint8_t> active;  // node touches the boundary
  bool converged = false;
  int iterations = 0;
};

struct ActionOptions {
  int n_nodes = 0;        // 0: max(32, ceil(t / h_path)) with h_path = diameter/64
  int max_nodes = 192;
  int multistart = 3;
  double perturb_scale = 0.1;  // times |x - y|
  double tol_opt = 1e-8;
  int max_iter = 600;
  std::uint64_t seed = 0x9e3779b9ULL;
  const Path* init = nullptr;  // warm start; nodes are resampled to the grid
};

/// Composite midpoint-rule quadrature of L along a piecewise-linear path.
double action_integral(const LagrangianSpec& spec, const Path& path);

/// Locally optimal discretized minimizer of the state-constrained least
/// action from x to y in time t. Projected spectral-gradient descent over the
/// interior nodes, nodes clamped to the closure each step, best of
/// `multistart` perturbed initializations. A result with converged=false is
/// the best iterate when the projected-gradient test was not met.
MinimizerResult fundamental_solution(const LagrangianSpec& spec, const Domain& domain,
                                     const Vec& x, const Vec& y, double t,
                                     const ActionOptions& opts = {});

/// Endpoint derivative formulas, valid while the endpoint-adjacent segment is
/// free of active constraints (ConstrainedEndpoint otherwise).
Vec grad_y(const LagrangianSpec& spec, const MinimizerResult& result);
Vec grad_x(const LagrangianSpec& spec, const MinimizerResult& result);
Vec grad_y(const LagrangianSpec& spec, const Domain& domain, const Vec& x, const Vec& y, double t,
           const ActionOptions& opts = {});
Vec grad_x(const LagrangianSpec& spec, const Domain& domain, const Vec& x, const Vec& y, double t,
           const ActionOptions& opts = {});

/// Certified speed bound kappa(C|x-y|/t) for minimizers, from the
/// superlinear envelope chain.
double lipschitz_bound(const LagrangianSpec& spec, const Domain& domain, const Vec& x,
                       const Vec& y, double t);

/// Minimum over t > 0 of the action along a FIXED unit-speed polyline,
/// reparameterized to constant speed on [0, t]. Closed form for mechanical
/// profiles; golden-section otherwise. Returns {value, argmin time}.
std::pair<double, double> min_time_action_along(const LagrangianSpec& spec, const Path& polyline);

/// CSV polyline dump: t, x1..xn, p1..pn, active.
void write_minimizer_csv(const MinimizerResult& result, std::ostream& os);

}  // namespace wkam
