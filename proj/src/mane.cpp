#include "wkam/mane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {

std::vector<Vec> sample_closure(const Domain& domain, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(count);
  std::uint64_t state = seed;
  const Vec lo = domain.bbox_lo(), hi = domain.bbox_hi();
  int guard = 0;
  while (static_cast<int>(out.size()) < count && guard < 200 * count + 1000) {
    ++guard;
    Vec x(lo.size());
    for (int i = 0; i < lo.size(); ++i) {
      double u = (splitmix64(state) >> 11) * 0x1.0p-53;
      x[i] = lo[i] + u * (hi[i] - lo[i]);
    }
    if (domain.contains(x, 0.0)) out.push_back(x);
  }
  if (out.empty()) out.push_back(0.5 * (lo + hi));
  return out;
}

CriticalValueEstimate critical_value(const LagrangianSpec& spec, const Domain& domain, int samples,
                                     const ActionOptions& opts) {
  if (samples < 1) fail(Err::ConfigError, "critical_value needs samples >= 1");
  CriticalValueEstimate est;
  est.point_samples = samples;
  est.time_samples = 24;
  double diam = domain.diameter();
  est.t_lo = 0.01 * diam;
  est.t_hi = 4.0 * diam;

  ActionOptions aopts = opts;
  aopts.multistart = 1;  // stationary loops seed the scan; perturbations add nothing here
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& x : sample_closure(domain, samples, 0xc0ffee11ULL)) {
    for (int k = 0; k < est.time_samples; ++k) {
      double t = est.t_lo * std::pow(est.t_hi / est.t_lo, double(k) / (est.time_samples - 1));
      MinimizerResult r = fundamental_solution(spec, domain, x, x, t, aopts);
      double avg = r.value / t;
      if (avg < best) {
        best = avg;
        est.best_point = x;
        est.best_time = t;
      }
    }
  }
  est.c_hat = -best;
  return est;
}

double time_horizon_bound(const LagrangianSpec& spec, const Domain& domain, double c_hat,
                          const Vec& x, const Vec& y) {
  if (c_hat >= 0.0)
    fail(Err::SupercriticalViolated, "time horizon bound requires c_hat < 0");
  double c1 = spec.theta2(1.0) * domain.quasiconvexity_constant();
  return 2.0 * c1 * (x - y).norm() / (-c_hat);
}

PotentialEngine::PotentialEngine(const LagrangianSpec& spec, const Domain& domain,
                                 ActionOptions action_opts, int c_samples)
    : spec_(spec), domain_(domain), opts_(action_opts),
      c_(critical_value(spec, domain, c_samples, action_opts)) {}

bool PotentialEngine::supercritical() const {
  return c_.c_hat + 0.05 * std::abs(c_.c_hat) < 0.0;
}

void PotentialEngine::require_supercritical() const {
  if (!supercritical())
    fail(Err::SupercriticalViolated,
         "scenario is not supercritical: c_hat = " + std::to_string(c_.c_hat));
}

namespace {

PotentialQuery trivial_query(const LagrangianSpec& spec, const Vec& x) {
  PotentialQuery q;
  q.x = x;
  q.y = x;
  q.value = 0.0;
  q.optimal_time = 0.0;
  q.minimizer.value = 0.0;
  q.minimizer.converged = true;
  q.minimizer.path.times = {0.0};
  q.minimizer.path.nodes = {x};
  q.minimizer.dual.covectors = {spec.L_v(x, Vec::Zero(spec.dim))};
  q.minimizer.active = {0};
  return q;
}

}  // namespace

PotentialQuery PotentialEngine::run_search(const Vec& x, const Vec& y, double t_lo, double t_hi,
                                           const Path* init, const ActionOptions& aopts,
                                           int coarse) const {
  PotentialQuery q;
  q.x = x;
  q.y = y;

  ActionOptions cur = aopts;
  Path warm;  // best path so far, threaded through as a warm start
  bool have_warm = false;
  if (init && !init->nodes.empty()) {
    warm = *init;
    have_warm = true;
  }

  double best_t = 0.0, best_v = std::numeric_limits<double>::infinity();
  MinimizerResult best_r;
  auto eval = [&](double t) {
    cur.init = have_warm ? &warm : nullptr;
    MinimizerResult r = fundamental_solution(spec_, domain_, x, y, t, cur);
    if (r.value < best_v) {
      best_v = r.value;
      best_t = t;
      best_r = r;
      warm = r.path;
      have_warm = true;
    }
    return r.value;
  };

  for (int k = 0; k < coarse; ++k) {
    double t = t_lo * std::pow(t_hi / t_lo, double(k) / (coarse - 1));
    eval(t);
  }
  double lo = std::max(t_lo, best_t / 3.0);
  double hi = std::min(t_hi, best_t * 3.0);
  golden_min(eval, lo, hi, 1e-7 * (hi - lo) + 1e-14, 80);

  if (!std::isfinite(best_v))
    fail(Err::InvariantViolation, "potential search produced a non-finite value");
  q.value = best_v;
  q.optimal_time = best_t;
  q.minimizer = best_r;
  return q;
}

PotentialQuery PotentialEngine::alternate_mech(const Vec& x, const Vec& y, double t_start,
                                               const Path* init, const ActionOptions& aopts,
                                               double t_max) const {
  PotentialQuery q;
  q.x = x;
  q.y = y;
  ActionOptions cur = aopts;
  Path warm;
  bool have_warm = false;
  if (init && !init->nodes.empty()) {
    warm = *init;
    have_warm = true;
  }
  double t = std::clamp(t_start, 1e-6 * t_max, t_max);
  double best_v = std::numeric_limits<double>::infinity(), best_t = t;
  MinimizerResult best_r;
  for (int it = 0; it < 5; ++it) {
    cur.init = have_warm ? &warm : nullptr;
    MinimizerResult r = fundamental_solution(spec_, domain_, x, y, t, cur);
    warm = r.path;
    have_warm = true;
    if (r.value < best_v) {
      best_v = r.value;
      best_t = t;
      best_r = r;
    }
    auto [v_along, t_along] = min_time_action_along(spec_, r.path);
    (void)v_along;
    double t_next = std::clamp(t_along, 1e-6 * t_max, t_max);
    if (!(t_next > 0.0) || std::abs(t_next - t) <= 1e-10 * (1.0 + t)) break;
    t = t_next;
  }
  if (!std::isfinite(best_v))
    fail(Err::InvariantViolation, "potential search produced a non-finite value");
  q.value = best_v;
  q.optimal_time = best_t;
  q.minimizer = best_r;
  return q;
}

PotentialQuery PotentialEngine::potential(const Vec& x, const Vec& y) const {
  require_supercritical();
  if ((x - y).norm() < 1e-14) return trivial_query(spec_, x);
  double t_max = time_horizon_bound(spec_, domain_, c_.c_hat, x, y);
  if (spec_.mech) {
    auto [poly, len] = domain_.quasiconvex_path(x, y);
    auto [v_seg, t_seg] = min_time_action_along(spec_, poly);
    (void)v_seg;
    return alternate_mech(x, y, t_seg, nullptr, opts_, t_max);
  }
  return run_search(x, y, 1e-3 * t_max, t_max, nullptr, opts_, 24);
}

PotentialQuery PotentialEngine::potential_near(const Vec& x, const Vec& y, double t_hint,
                                               const Path* init,
                                               const ActionOptions* opts) const {
  require_supercritical();
  if ((x - y).norm() < 1e-14) return trivial_query(spec_, x);
  double t_max = time_horizon_bound(spec_, domain_, c_.c_hat, x, y);
  ActionOptions aopts = opts ? *opts : opts_;
  if (spec_.mech) {
    double t0 = t_hint;
    if (!(t0 > 0.0) || !std::isfinite(t0)) {
      auto [poly, len] = domain_.quasiconvex_path(x, y);
      t0 = min_time_action_along(spec_, poly).second;
    }
    return alternate_mech(x, y, t0, init, aopts, t_max);
  }
  if (!(t_hint > 0.0) || !std::isfinite(t_hint))
    return run_search(x, y, 1e-3 * t_max, t_max, init, aopts, 24);

  double lo = std::max(1e-6 * t_max, t_hint / 4.0);
  double hi = std::min(t_max, t_hint * 4.0);
  if (lo >= hi) {
    lo = 1e-3 * t_max;
    hi = t_max;
  }
  PotentialQuery q = run_search(x, y, lo, hi, init, aopts, 6);
  // Expand once if the argmin pinned to an interior bracket edge.
  for (int round = 0; round < 2; ++round) {
    bool at_lo = q.optimal_time <= lo * 1.05 && lo > 1e-6 * t_max * 1.5;
    bool at_hi = q.optimal_time >= hi * 0.95 && hi < t_max * 0.999;
    if (!at_lo && !at_hi) break;
    lo = at_lo ? std::max(1e-6 * t_max, lo / 8.0) : lo;
    hi = at_hi ? std::min(t_max, hi * 8.0) : hi;
    Path warm = q.minimizer.path;
    q = run_search(x, y, lo, hi, &warm, aopts, 6);
  }
  return q;
}

}  // namespace wkam
