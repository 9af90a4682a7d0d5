#include "wkam/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {

const char* verdict_name(ChainVerdict v) {
  switch (v) {
    case ChainVerdict::Global: return "Global";
    case ChainVerdict::CriticalPoint: return "CriticalPoint";
    case ChainVerdict::BoundaryApproach: return "BoundaryApproach";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// min-norm point in a convex hull (Wolfe's algorithm)
// ---------------------------------------------------------------------------

Vec min_norm_point(const std::vector<Vec>& hull_points, double eps_qp) {
  if (hull_points.empty()) fail(Err::SolverFailure, "min_norm_point on an empty set");
  const int m = static_cast<int>(hull_points.size());
  if (m == 1) return hull_points[0];

  int j0 = 0;
  double best = hull_points[0].squaredNorm();
  for (int i = 1; i < m; ++i) {
    double v = hull_points[i].squaredNorm();
    if (v < best) {
      best = v;
      j0 = i;
    }
  }
  std::vector<int> corral{j0};
  std::vector<double> w{1.0};
  Vec x = hull_points[j0];

  for (int major = 0; major < 400; ++major) {
    double xx = x.squaredNorm();
    int jbest = -1;
    double dbest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double d = x.dot(hull_points[i]);
      if (d < dbest) {
        dbest = d;
        jbest = i;
      }
    }
    if (xx - dbest <= eps_qp * (1.0 + xx)) break;  // Frank-Wolfe gap closed
    if (std::find(corral.begin(), corral.end(), jbest) == corral.end()) {
      corral.push_back(jbest);
      w.push_back(0.0);
    }

    for (int minor = 0; minor < 100; ++minor) {
      const int k = static_cast<int>(corral.size());
      Mat M = Mat::Zero(k + 1, k + 1);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) M(a, b) = hull_points[corral[a]].dot(hull_points[corral[b]]);
      for (int a = 0; a < k; ++a) {
        M(a, k) = 1.0;
        M(k, a) = 1.0;
      }
      Vec rhs = Vec::Zero(k + 1);
      rhs[k] = 1.0;
      Vec sol = M.fullPivLu().solve(rhs);
      Vec a = sol.head(k);

      if ((a.array() >= -1e-12).all()) {
        for (int i = 0; i < k; ++i) w[i] = std::max(a[i], 0.0);
        double sum = 0.0;
        for (double wi : w) sum += wi;
        for (double& wi : w) wi /= sum;
        break;
      }
      double theta = 1.0;
      for (int i = 0; i < k; ++i)
        if (a[i] < 0.0 && w[i] - a[i] > 1e-300) theta = std::min(theta, w[i] / (w[i] - a[i]));
      for (int i = 0; i < k; ++i) w[i] += theta * (a[i] - w[i]);
      for (int i = k - 1; i >= 0; --i)
        if (w[i] <= 1e-13) {
          corral.erase(corral.begin() + i);
          w.erase(w.begin() + i);
        }
      if (corral.empty()) {
        corral.push_back(jbest);
        w.push_back(1.0);
        break;
      }
    }
    x.setZero();
    for (std::size_t i = 0; i < corral.size(); ++i) x += w[i] * hull_points[corral[i]];
  }
  return x;
}

double convex_hull_distance(const std::vector<Vec>& hull_points, const Vec& target,
                            double eps_qp) {
  std::vector<Vec> shifted;
  shifted.reserve(hull_points.size());
  for (const auto& q : hull_points) shifted.push_back(q - target);
  return min_norm_point(shifted, eps_qp).norm();
}

// ---------------------------------------------------------------------------
// tracer
// ---------------------------------------------------------------------------

SingularTracer::SingularTracer(const ValueSolver& solver, TraceOptions opts)
    : solver_(solver), opts_(opts) {
  const Domain& dom = solver_.domain();
  const double lip = solver_.lipschitz_estimate();
  eps_sing_ = opts_.eps_sing > 0.0 ? opts_.eps_sing : 1e-4 * (1.0 + lip);
  h_flow_ = opts_.h_flow > 0.0 ? opts_.h_flow : 1e-3 * dom.diameter();
  delta_bd_ = opts_.delta_bd > 0.0 ? opts_.delta_bd : 2.0 * h_flow_;
  t_cap_ = opts_.t_cap > 0.0 ? opts_.t_cap : 0.05 * dom.diameter();
  maximizer_tol_ = opts_.maximizer_tol > 0.0 ? opts_.maximizer_tol : 1e-5 * dom.diameter();

  double min_eig = std::numeric_limits<double>::infinity();
  for (const Vec& x : sample_closure(dom, 16, 0x5eed0003ULL)) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(solver_.spec().L_vv(x, Vec::Zero(solver_.spec().dim)));
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  lambda_ = 2.0 * lip / std::max(min_eig, 1e-8);

  // Gauge reduction for the mechanical semiflow, when the structure and
  // condition (max V < 0, g + S constant on the boundary) allow it.
  if (!solver_.spec().mech) {
    mech_status_ = "lagrangian has no mechanical structure";
    return;
  }
  const MechanicalSpec& m = *solver_.spec().mech;
  double vmax = -std::numeric_limits<double>::infinity();
  for (const Vec& x : sample_closure(dom, 64, 0x5eed0004ULL)) vmax = std::max(vmax, m.V(x));
  if (vmax >= 0.0) {
    mech_status_ = "max V over the closure is not negative (sampled " + std::to_string(vmax) + ")";
    return;
  }
  auto bsamp = dom.boundary_sample(64);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& y : bsamp) {
    double c = solver_.boundary_data().g(y) + m.S(y.point);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (hi - lo > 1e-8 * (1.0 + std::abs(hi))) {
    mech_status_ = "g + S is not constant on the boundary (spread " + std::to_string(hi - lo) + ")";
    return;
  }
  MechanicalSpec reduced = m;
  reduced.S = [](const Vec&) { return 0.0; };
  reduced.DS = [dim = solver_.spec().dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  LagrangianSpec reduced_spec = make_mechanical_lagrangian(reduced, dom);
  BoundaryData bd0;
  auto g = solver_.boundary_data().g;
  auto S = m.S;
  bd0.g = [g, S](const BoundaryPoint& y) { return g(y) + S(y.point); };
  reduced_solver_ = std::make_unique<ValueSolver>(reduced_spec, dom, bd0, solver_.options());
  mech_status_ = "ok";
}

const ValueSolver& SingularTracer::reduced_solver() const {
  if (!reduced_solver_) fail(Err::ConditionMViolated, mech_status_);
  return *reduced_solver_;
}

Superdifferential SingularTracer::gradients_from(const ValueSolver& solver, const Vec& x,
                                                 double delta_opt) const {
  ValueResult r = solver.value_window(x, delta_opt);
  std::vector<Vec> ps;
  ps.reserve(r.candidates.size());
  for (const auto& c : r.candidates) ps.push_back(c.minimizer.dual.covectors.back());
  Superdifferential sd;
  sd.base = x;
  sd.vertices = dedupe_covectors(ps, eps_sing_);
  sd.tolerance_radius = eps_sing_;
  return sd;
}

Superdifferential SingularTracer::limiting_gradients(const Vec& x, double delta_opt) const {
  if (solver_.domain().boundary_distance(x) <= 0.0)
    fail(Err::SolverFailure, "limiting_gradients requires an interior point");
  return gradients_from(solver_, x, delta_opt);
}

bool SingularTracer::is_singular(const Superdifferential& sd) const {
  return sd.vertices.size() >= 2;
}

std::vector<Vec> SingularTracer::hp_vertices(const Superdifferential& sd) const {
  std::vector<Vec> out;
  out.reserve(sd.vertices.size());
  for (const auto& p : sd.vertices) {
    if (solver_.spec().H_p)
      out.push_back(solver_.spec().H_p(sd.base, p));
    else
      out.push_back(hamiltonian_maximizer(solver_.spec(), sd.base, p));
  }
  return out;
}

bool SingularTracer::is_critical(const Superdifferential& sd) const {
  return min_norm_point(hp_vertices(sd), opts_.eps_qp).norm() <= opts_.eps_crit;
}

bool SingularTracer::is_cut(const Vec& x) const { return cut_test(solver_, x); }

bool SingularTracer::cut_test(const ValueSolver& vs, const Vec& x) const {
  Superdifferential sd = gradients_from(vs, x, 0.0);
  if (is_singular(sd)) return true;

  // Unique reachable gradient: push the extremal forward and test whether the
  // calibration identity survives a short horizon.
  const LagrangianSpec& spec = vs.spec();
  const Domain& dom = vs.domain();
  const double eps_fw = 10.0 * h_flow_;
  const int nsub = 32;
  const double dt = eps_fw / nsub;

  Vec xs = x, ps = sd.vertices[0];
  double integral = 0.0;
  auto lag_at = [&](const Vec& xc, const Vec& pc) {
    Vec v = spec.H_p ? spec.H_p(xc, pc) : hamiltonian_maximizer(spec, xc, pc);
    return spec.L(xc, v);
  };
  double l_prev = lag_at(xs, ps);
  for (int k = 0; k < nsub; ++k) {
    auto [k1x, k1p] = hamilton_ode_rhs(spec, xs, ps);
    auto [k2x, k2p] = hamilton_ode_rhs(spec, Vec(xs + 0.5 * dt * k1x), Vec(ps + 0.5 * dt * k1p));
    auto [k3x, k3p] = hamilton_ode_rhs(spec, Vec(xs + 0.5 * dt * k2x), Vec(ps + 0.5 * dt * k2p));
    auto [k4x, k4p] = hamilton_ode_rhs(spec, Vec(xs + dt * k3x), Vec(ps + dt * k3p));
    xs += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    ps += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    if (!dom.contains(xs, dom.geom_tol() * (1.0 + dom.diameter()))) return true;
    double l_cur = lag_at(xs, ps);
    integral += 0.5 * dt * (l_prev + l_cur);
    l_prev = l_cur;
  }
  double u0 = vs.value(x).u;
  double u1 = vs.value(xs).u;
  double eps_cal = 10.0 * vs.options().action.tol_opt * (1.0 + std::abs(u0));
  return (u1 - u0 - integral) < -eps_cal;
}

Vec SingularTracer::minimal_selection(const Superdifferential& sd, const Mat& A_at_base) const {
  if (sd.vertices.empty()) fail(Err::SolverFailure, "minimal_selection on an empty set");
  if (sd.vertices.size() == 1) return sd.vertices[0];
  Eigen::LLT<Mat> llt(A_at_base);
  if (llt.info() != Eigen::Success)
    fail(Err::ConfigError, "minimal_selection requires a positive definite metric");
  // <A^{-1} p, p> = |L^{-1} p|^2 for A = L L^T; min-norm point in q = L^{-1} p.
  std::vector<Vec> qs;
  qs.reserve(sd.vertices.size());
  for (const auto& p : sd.vertices)
    qs.push_back(llt.matrixL().solve(p));
  Vec qbar = min_norm_point(qs, opts_.eps_qp);
  return Mat(llt.matrixL()) * qbar;
}

Vec SingularTracer::step_maximizer(const Vec& x, double t, double lambda) const {
  const Domain& dom = solver_.domain();
  const double d = dom.boundary_distance(x);
  if (lambda * t >= d)
    fail(Err::BallTouchesBoundary, "B(x, lambda t) reaches the boundary; reduce t");

  const double radius = 0.98 * lambda * t;
  auto clamp_ball = [&](Vec y) {
    Vec r = y - x;
    double len = r.norm();
    if (len > radius) y = x + (radius / len) * r;
    return y;
  };

  ActionOptions aopts = solver_.options().refine_action;
  aopts.n_nodes = 16;
  Path warm;
  bool have_warm = false;
  auto objective = [&](const Vec& y) {
    double u = solver_.value_only(y);
    aopts.init = have_warm ? &warm : nullptr;
    MinimizerResult r = fundamental_solution(solver_.spec(), dom, x, y, t, aopts);
    warm = r.path;
    have_warm = true;
    return u - r.value;
  };

  Superdifferential sd = limiting_gradients(x);
  std::vector<Vec> seeds{x};
  for (const auto& q : hp_vertices(sd)) seeds.push_back(clamp_ball(x + t * q));

  std::vector<Vec> dirs;
  const int n = solver_.spec().dim;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  if (n == 2) {
    Vec e(2);
    e << M_SQRT1_2, M_SQRT1_2;
    dirs.push_back(e);
    dirs.push_back(-e);
    e << M_SQRT1_2, -M_SQRT1_2;
    dirs.push_back(e);
    dirs.push_back(-e);
  }

  std::vector<std::pair<Vec, double>> results;
  for (const auto& seed : seeds) {
    Vec y = seed;
    double f = objective(y);
    double step = 0.25 * radius;
    while (step > maximizer_tol_) {
      bool improved = false;
      for (const auto& dir : dirs) {
        Vec trial = clamp_ball(y + step * dir);
        double ft = objective(trial);
        if (ft > f + 1e-15) {
          y = trial;
          f = ft;
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    results.push_back({y, f});
  }

  const Vec* best = &results[0].first;
  double fbest = results[0].second;
  for (const auto& [y, f] : results) {
    if (f > fbest) {
      fbest = f;
      best = &y;
    }
  }
  for (const auto& [y, f] : results)
    if ((y - *best).norm() > 10.0 * eps_sing_)
      fail(Err::AmbiguousMaximizer, "pattern-ascent starts disagree; t exceeds the concavity regime");
  return *best;
}

SingularChain SingularTracer::trace_general(const Vec& x0, double budget) const {
  const Domain& dom = solver_.domain();
  if (dom.boundary_distance(x0) <= delta_bd_)
    fail(Err::BallTouchesBoundary, "trace_general requires an interior seed");

  SingularChain chain;
  chain.not_cut_warning = !is_cut(x0);
  if (chain.not_cut_warning) chain.note = "seed failed the cut-point test";

  const double win = std::max(2.0 * solver_.lipschitz_estimate() * maximizer_tol_, 0.0);
  auto record = [&](const Vec& x, double s) {
    ValueResult r = solver_.value_window(x, win);
    std::vector<Vec> ps;
    for (const auto& c : r.candidates) ps.push_back(c.minimizer.dual.covectors.back());
    Superdifferential sd;
    sd.base = x;
    sd.vertices = dedupe_covectors(ps, eps_sing_);
    sd.tolerance_radius = eps_sing_;
    chain.points.push_back(x);
    chain.s.push_back(s);
    chain.u_values.push_back(r.u);
    chain.covectors.push_back(min_norm_point(sd.vertices, opts_.eps_qp));
    return sd;
  };

  Vec x = x0;
  double s = 0.0;
  Superdifferential sd = record(x, s);
  if (is_critical(sd)) {
    chain.verdict = ChainVerdict::CriticalPoint;
    return chain;
  }

  for (int k = 0; k < opts_.max_steps; ++k) {
    if (s >= budget) {
      chain.verdict = ChainVerdict::Global;
      return chain;
    }
    double d = dom.boundary_distance(x);
    if (d < delta_bd_) {
      chain.verdict = ChainVerdict::BoundaryApproach;
      return chain;
    }

    double t = std::min(opts_.step_fraction * d / lambda_, t_cap_);
    Vec y;
    bool accepted = false;
    for (int half = 0; half < 14 && !accepted; ++half) {
      Vec cand;
      try {
        cand = step_maximizer(x, t, lambda_);
      } catch (const Error& e) {
        if (e.code() == Err::AmbiguousMaximizer) {
          t *= 0.5;
          continue;
        }
        throw;
      }
      // Generalized-characteristic guard: the chord velocity must stay inside
      // co H_p(x, D+u(x)); a kink inside the step shows up here and the step
      // is shortened until the chord is admissible.
      Vec v = (cand - x) / t;
      auto hull = hp_vertices(sd);
      double scale = 1e-12;
      for (const auto& q : hull) scale = std::max(scale, q.norm());
      if (convex_hull_distance(hull, v, opts_.eps_qp) <= opts_.eps_gc * scale) {
        y = cand;
        accepted = true;
      } else {
        t *= 0.5;
      }
    }
    if (!accepted) {
      chain.verdict = is_critical(sd) ? ChainVerdict::CriticalPoint : ChainVerdict::Global;
      if (chain.verdict == ChainVerdict::Global) chain.note = "step validation stalled";
      return chain;
    }

    if ((y - x).norm() <= maximizer_tol_) {
      // stationary maximizer: the chain can only halt at a critical point
      Superdifferential sdy = gradients_from(solver_, y, win);
      if (is_critical(sdy)) {
        chain.verdict = ChainVerdict::CriticalPoint;
        return chain;
      }
    }

    s += t;
    chain.step_times.push_back(t);
    x = y;
    sd = record(x, s);
    if (is_critical(sd)) {
      chain.verdict = ChainVerdict::CriticalPoint;
      return chain;
    }
  }
  chain.verdict = ChainVerdict::Global;
  chain.note = "step budget exhausted";
  return chain;
}

SingularChain SingularTracer::trace_mechanical(const Vec& x0, double budget) const {
  if (!reduced_solver_) fail(Err::ConditionMViolated, mech_status_);
  const ValueSolver& rs = *reduced_solver_;
  const Domain& dom = rs.domain();
  const MechanicalSpec& mech = *solver_.spec().mech;

  if (dom.boundary_distance(x0) <= delta_bd_)
    fail(Err::BallTouchesBoundary, "trace_mechanical requires an interior seed");

  SingularChain chain;
  if (!cut_test(rs, x0)) {
    chain.not_cut_warning = true;
    chain.note = "seed failed the cut-point test";
  }

  // Retention window at the discretization scale of the Euler flow: the
  // discrete semiflow cannot see value gaps below Lip(v) * h_flow.
  const double win = 2.0 * rs.lipschitz_estimate() * h_flow_;

  Vec x = x0;
  double s = 0.0;
  for (int k = 0; k < opts_.max_steps; ++k) {
    if (dom.boundary_distance(x) < delta_bd_)
      fail(Err::InvariantViolation,
           "BoundaryHit: mechanical singular chain approached the boundary");

    ValueResult r = rs.value_window(x, win);
    std::vector<Vec> ps;
    for (const auto& c : r.candidates) ps.push_back(c.minimizer.dual.covectors.back());
    Superdifferential sd;
    sd.base = x;
    sd.vertices = dedupe_covectors(ps, eps_sing_);
    sd.tolerance_radius = eps_sing_;

    Mat A = mech.A(x);
    Vec p = minimal_selection(sd, A);
    Vec vel = A.ldlt().solve(p);

    chain.points.push_back(x);
    chain.s.push_back(s);
    chain.u_values.push_back(r.u);
    chain.covectors.push_back(p);

    if (std::sqrt(p.dot(vel)) <= opts_.eps_crit) {
      chain.verdict = ChainVerdict::CriticalPoint;
      return chain;
    }
    if (s >= budget) {
      chain.verdict = ChainVerdict::Global;
      return chain;
    }

    Vec xn = x + h_flow_ * vel;
    dom.clamp_inside(xn);
    x = xn;
    s += h_flow_;
    chain.step_times.push_back(h_flow_);
  }
  chain.verdict = ChainVerdict::Global;
  chain.note = "step budget exhausted";
  return chain;
}

}  // namespace wkam
