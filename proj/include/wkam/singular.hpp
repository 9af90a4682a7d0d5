#pragma once

#include "wkam/solver.hpp"

#include <memory>
#include <string>

namespace wkam {

/// Finite vertex set of approximate limiting gradients at a point; the convex
/// hull approximates the superdifferential of the value function there.
struct Superdifferential {
  Vec base;
  std::vector<Vec> vertices;
  double tolerance_radius = 0.0;
};

enum class ChainVerdict {
  Global,          // budget exhausted at interior points
  CriticalPoint,   // minimal selection vanished within eps_crit
  BoundaryApproach // boundary distance fell below delta_bd (general tracer only)
};

const char* verdict_name(ChainVerdict v);

struct SingularChain {
  std::vector<double> step_times;  // per-step horizon t*_k (or h_flow)
  std::vector<double> s;           // cumulative generalized time at each point
  std::vector<Vec> points;
  std::vector<Vec> covectors;      // selected covector at each point
  std::vector<double> u_values;    // value function along the chain (gauge-reduced
                                   // value in mechanical mode)
  ChainVerdict verdict = ChainVerdict::Global;
  bool not_cut_warning = false;
  std::string note;
};

struct TraceOptions {
  int max_steps = 20000;
  double eps_sing = 0.0;    // 0: 1e-4 (1 + Lip)
  double eps_crit = 1e-3;
  double eps_qp = 1e-10;
  double eps_H = 1e-2;      // level-set tolerance reported for vertices
  double h_flow = 0.0;      // 0: 1e-3 * diameter
  double delta_bd = 0.0;    // 0: 2 h_flow
  double t_cap = 0.0;       // 0: 0.05 * diameter
  double eps_gc = 0.05;     // inclusion guard relative to the |H_p| scale
  double step_fraction = 0.1;  // t* = min(step_fraction * d / lambda, t_cap)
  double maximizer_tol = 0.0;  // 0: 1e-5 * diameter
};

/// Singular-set machinery: superdifferentials from retained boundary
/// co-minimizers, cut detection, and the two singular propagation schemes
/// (step-maximizer chains for general Tonelli systems, minimal-selection
/// Euler semiflow for mechanical ones).
class SingularTracer {
 public:
  SingularTracer(const ValueSolver& solver, TraceOptions opts = {});

  /// Approximate D*u(x): backtraced covectors of every boundary co-minimizer
  /// within delta_opt of the optimum, deduplicated within eps_sing.
  /// delta_opt = 0 uses the solver's retention default.
  Superdifferential limiting_gradients(const Vec& x, double delta_opt = 0.0) const;

  bool is_singular(const Superdifferential& sd) const;

  /// Singular, or the unique calibrated curve terminates at x (forward
  /// calibration defect test at horizon 10 h_flow).
  bool is_cut(const Vec& x) const;

  /// 0 lies in co H_p(base, vertices) within eps_crit.
  bool is_critical(const Superdifferential& sd) const;

  /// Unique minimizer of <A^{-1} p, p> over the convex hull of the vertices
  /// (min-norm point in the A^{-1} inner product).
  Vec minimal_selection(const Superdifferential& sd, const Mat& A_at_base) const;

  /// Argmax of u(y) - A_t(x, y) over B(x, lambda t) by multi-start pattern
  /// ascent. AmbiguousMaximizer when the starts disagree (t too large for the
  /// strict-concavity regime); BallTouchesBoundary when B(x, lambda t)
  /// reaches the boundary.
  Vec step_maximizer(const Vec& x, double t, double lambda) const;

  /// Step-maximizer chain with the dichotomy verdicts.
  SingularChain trace_general(const Vec& x0, double budget) const;

  /// Minimal-selection Euler semiflow after gauge reduction; never returns
  /// BoundaryApproach (a boundary hit is an InvariantViolation).
  SingularChain trace_mechanical(const Vec& x0, double budget) const;

  double lambda() const { return lambda_; }
  double eps_sing() const { return eps_sing_; }
  double h_flow() const { return h_flow_; }
  bool mechanical_ready() const { return reduced_solver_ != nullptr; }
  const std::string& mechanical_status() const { return mech_status_; }
  const ValueSolver& reduced_solver() const;

 private:
  Superdifferential gradients_from(const ValueSolver& solver, const Vec& x,
                                   double delta_opt) const;
  std::vector<Vec> hp_vertices(const Superdifferential& sd) const;
  bool cut_test(const ValueSolver& vs, const Vec& x) const;

  const ValueSolver& solver_;
  TraceOptions opts_;
  double eps_sing_ = 0.0;
  double h_flow_ = 0.0;
  double delta_bd_ = 0.0;
  double t_cap_ = 0.0;
  double maximizer_tol_ = 0.0;
  double lambda_ = 0.0;

  // gauge-reduced problem for the mechanical semiflow
  std::unique_ptr<ValueSolver> reduced_solver_;
  std::string mech_status_;
};

/// Distance from a point to the convex hull of a finite set, and the min-norm
/// point of the hull itself (Wolfe's algorithm).
double convex_hull_distance(const std::vector<Vec>& hull_points, const Vec& target,
                            double eps_qp = 1e-10);
Vec min_norm_point(const std::vector<Vec>& hull_points, double eps_qp = 1e-10);

}  // namespace wkam
