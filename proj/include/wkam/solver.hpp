#pragma once

#include "wkam/mane.hpp"

#include <optional>
#include <string>

namespace wkam {

/// Dirichlet data on the boundary. The optional C^{1,1} extension G and its
/// gradient feed the (G2) audit; nu feeds (G1).
struct BoundaryData {
  std::function<double(const BoundaryPoint&)> g;
  std::function<double(const Vec&)> G;
  std::function<Vec(const Vec&)> grad_G;
  std::optional<double> nu;
};

struct CompatibilityEntry {
  std::string name;
  bool applicable = true;
  bool pass = false;
  double worst = 0.0;
  double tol = 0.0;
  int samples = 0;
  std::string note;
};

struct CompatibilityReport {
  std::vector<CompatibilityEntry> entries;
  double c_hat = 0.0;
  bool pass = false;  // over the standing hypotheses (G1/G2 are informational)

  const CompatibilityEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

/// One retained boundary minimizer of g(y) + Phi(y, x).
struct BoundaryCandidate {
  double arc = 0.0;
  double value = 0.0;
  double time = 0.0;
  BoundaryPoint y;
  MinimizerResult minimizer;  // path oriented y -> x on [0, time]
};

struct ValueResult {
  double u = 0.0;
  BoundaryPoint y_star;
  double T = 0.0;
  // All co-minimizers within the retention window, sorted by arc; feeds the
  // superdifferential construction.
  std::vector<BoundaryCandidate> candidates;
};

struct FieldPoint {
  Vec x;
  double u = 0.0;
  double T = 0.0;
  double ystar_arc = 0.0;
  bool singular = false;
  bool shortcut = false;  // near-boundary copy rule applied
  bool failed = false;
  std::vector<std::pair<double, Vec>> covectors;  // (arc, terminal covector) per candidate
};

struct ValueField {
  Vec lo;
  double h = 0.0;
  int nx = 0, ny = 0;
  std::vector<FieldPoint> points;      // the lattice points inside the closure
  std::vector<int> index;              // nx*ny -> points index or -1
  int at(int i, int j) const { return index[static_cast<std::size_t>(j) * nx + i]; }
};

struct SolverOptions {
  int m_bd = 256;           // coarse boundary samples
  int refine_top = 3;       // clusters refined beyond the forced near-ties
  int cluster_cap = 12;
  int plateau_cap = 64;     // candidate cap when the whole boundary co-minimizes
  double delta_opt_scale = 1e-6;  // retention window 1e-6 (1 + |u|)
  double arc_tol_rel = 1e-5;      // golden tolerance relative to perimeter
  int c_samples = 64;
  double near_boundary_fraction = 0.75;  // shortcut band, in grid spacings
  int threads = 1;
  ActionOptions action;         // standalone queries (default multistart)
  ActionOptions refine_action;  // warm-started refinement loops
  SolverOptions() {
    refine_action.multistart = 1;
    refine_action.max_iter = 300;
  }
};

/// Value function u(x) = inf_{y in boundary} { g(y) + Phi(y, x) } and the
/// calibrated-curve machinery built on it. The critical value is estimated
/// once at construction; all queries afterwards are pure and thread-safe.
class ValueSolver {
 public:
  ValueSolver(const LagrangianSpec& spec, const Domain& domain, BoundaryData bd,
              SolverOptions opts = {});

  const LagrangianSpec& spec() const { return spec_; }
  const Domain& domain() const { return domain_; }
  const BoundaryData& boundary_data() const { return bd_; }
  const SolverOptions& options() const { return opts_; }
  const PotentialEngine& engine() const { return engine_; }
  double critical() const { return engine_.critical(); }

  /// Lipschitz bound theta2(1) * C for the potential (and hence u).
  double lipschitz_estimate() const;

  CompatibilityReport check_compatibility(int pairs = 64) const;

  ValueResult value(const Vec& x) const;

  /// Same minimization with a custom absolute co-minimizer retention window
  /// (0 uses the default 1e-6 (1+|u|)); the singular tracers widen it to the
  /// discretization scale of their flow.
  ValueResult value_window(const Vec& x, double retention_abs) const;

  /// Cheaper profile for inner loops (fewer coarse samples, looser arc
  /// tolerance); same representation formula.
  double value_only(const Vec& x) const;

  double exit_time(const Vec& x) const;

  struct Backtrace {
    Path curve;  // on [-T, 0], curve(0) = x
    DualArc dual;
    BoundaryPoint y_star;
    double T = 0.0;
    double defect = 0.0;  // |u(x) - g(y*) - action|
  };
  Backtrace backtrace(const Vec& x) const;

  /// The transversal covector at a boundary point: mu > 0 with
  /// H(y, -mu nu) = 0 and p = -mu nu.
  std::pair<double, Vec> boundary_covector(const BoundaryPoint& y) const;

  ValueField solve_field(double h) const;

 private:
  ValueResult value_impl(const Vec& x, int m_bd, int refine_top, double arc_tol,
                         const ActionOptions& aopts, double retention_abs) const;

  LagrangianSpec spec_;  // owned copies: solvers outlive caller temporaries
  Domain domain_;
  BoundaryData bd_;
  SolverOptions opts_;
  PotentialEngine engine_;
  std::vector<BoundaryPoint> coarse_samples_;
  std::vector<double> coarse_g_;
};

/// Deduplicate covectors within tolerance eps (order-preserving).
std::vector<Vec> dedupe_covectors(const std::vector<Vec>& ps, double eps);

}  // namespace wkam
