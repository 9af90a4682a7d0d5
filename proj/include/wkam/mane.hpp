#pragma once

#include "wkam/action.hpp"

namespace wkam {

struct PotentialQuery {
  Vec x, y;
  double value = 0.0;
  double optimal_time = 0.0;
  MinimizerResult minimizer;
};

struct CriticalValueEstimate {
  double c_hat = 0.0;
  int point_samples = 0;
  int time_samples = 0;
  double t_lo = 0.0, t_hi = 0.0;  // searched horizon grid, reported so callers can tighten
  Vec best_point;
  double best_time = 0.0;
};

/// Relative critical value estimate: -min over sampled base points and a log
/// time grid of (1/t) A_t(x,x).
CriticalValueEstimate critical_value(const LagrangianSpec& spec, const Domain& domain,
                                     int samples = 64, const ActionOptions& opts = {});

/// Horizon bound 2 C1 |x-y| / (-c_hat), C1 = theta2(1) C, below which the
/// potential infimum is attained. Throws SupercriticalViolated for c_hat >= 0.
double time_horizon_bound(const LagrangianSpec& spec, const Domain& domain, double c_hat,
                          const Vec& x, const Vec& y);

/// Deterministic interior samples of a domain closure (bounding-box rejection
/// with a fixed stream seed).
std::vector<Vec> sample_closure(const Domain& domain, int count, std::uint64_t seed);

/// Potential queries against one scenario: the critical value is estimated
/// once at construction and cached (write-once; concurrent queries are pure).
class PotentialEngine {
 public:
  PotentialEngine(const LagrangianSpec& spec, const Domain& domain, ActionOptions action_opts = {},
                  int c_samples = 64);

  double critical() const { return c_.c_hat; }
  const CriticalValueEstimate& critical_estimate() const { return c_; }

  /// True when the supercriticality gate c_hat + 0.05 |c_hat| < 0 holds.
  bool supercritical() const;
  void require_supercritical() const;

  /// Phi(x, y) = inf_{t > 0} A_t(x, y): coarse 24-point log grid on
  /// (0, T_max] then golden section.
  PotentialQuery potential(const Vec& x, const Vec& y) const;

  /// Refinement variant: searches t near t_hint with a warm-started path.
  /// Used by the boundary minimization loops; exact for hints within 4x of
  /// the true optimum (bracket expands otherwise).
  PotentialQuery potential_near(const Vec& x, const Vec& y, double t_hint,
                                const Path* init = nullptr,
                                const ActionOptions* opts = nullptr) const;

  const LagrangianSpec& spec() const { return spec_; }
  const Domain& domain() const { return domain_; }
  const ActionOptions& action_options() const { return opts_; }

 private:
  PotentialQuery run_search(const Vec& x, const Vec& y, double t_lo, double t_hi,
                            const Path* init, const ActionOptions& aopts, int coarse) const;

  /// For mechanical profiles the horizon optimization along a fixed path
  /// shape is closed-form; alternate shape solves with horizon updates.
  PotentialQuery alternate_mech(const Vec& x, const Vec& y, double t_start, const Path* init,
                                const ActionOptions& aopts, double t_max) const;

  LagrangianSpec spec_;  // owned copies: engines outlive caller temporaries
  Domain domain_;
  ActionOptions opts_;
  CriticalValueEstimate c_;
};

}  // namespace wkam
