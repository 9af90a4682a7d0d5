#include "wkam/solver.hpp"

#include "wkam/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {
namespace {

BoundaryCandidate trivial_candidate(const LagrangianSpec& spec, const BoundaryPoint& y,
                                    double value) {
  BoundaryCandidate c;
  c.arc = y.arc;
  c.value = value;
  c.time = 0.0;
  c.y = y;
  c.minimizer.value = 0.0;
  c.minimizer.converged = true;
  c.minimizer.path.times = {0.0};
  c.minimizer.path.nodes = {y.point};
  c.minimizer.dual.covectors = {spec.L_v(y.point, Vec::Zero(spec.dim))};
  c.minimizer.active = {1};
  return c;
}

}  // namespace

std::vector<Vec> dedupe_covectors(const std::vector<Vec>& ps, double eps) {
  std::vector<Vec> out;
  for (const auto& p : ps) {
    bool fresh = true;
    for (const auto& q : out)
      if ((p - q).norm() <= eps) {
        fresh = false;
        break;
      }
    if (fresh) out.push_back(p);
  }
  return out;
}

ValueSolver::ValueSolver(const LagrangianSpec& spec, const Domain& domain, BoundaryData bd,
                         SolverOptions opts)
    : spec_(spec), domain_(domain), bd_(std::move(bd)), opts_(opts),
      engine_(spec, domain, opts.action, opts.c_samples) {
  coarse_samples_ = domain_.boundary_sample(opts_.m_bd);
  coarse_g_.reserve(coarse_samples_.size());
  for (const auto& s : coarse_samples_) coarse_g_.push_back(bd_.g(s));
}

double ValueSolver::lipschitz_estimate() const {
  return spec_.theta2(1.0) * domain_.quasiconvexity_constant();
}

// ---------------------------------------------------------------------------
// representation formula
// ---------------------------------------------------------------------------

ValueResult ValueSolver::value_impl(const Vec& x, int m_bd, int refine_top, double arc_tol,
                                    const ActionOptions& aopts, double retention_abs) const {
  engine_.require_supercritical();
  const double tau = domain_.geom_tol() * (1.0 + domain_.diameter());
  const double sd = domain_.signed_distance(x);
  if (sd > 100.0 * tau) fail(Err::SolverFailure, "query point lies outside the domain closure");

  if (sd >= -tau) {
    BoundaryPoint y = domain_.project_to_boundary(x);
    ValueResult r;
    r.u = bd_.g(y);
    r.y_star = y;
    r.T = 0.0;
    r.candidates = {trivial_candidate(spec_, y, r.u)};
    return r;
  }

  const double per = domain_.perimeter();
  const int stride = std::max(1, static_cast<int>(coarse_samples_.size()) / std::max(m_bd, 8));
  const int m = static_cast<int>(coarse_samples_.size()) / stride;

  // Coarse pass: action profile along the quasiconvex polyline to each sample.
  std::vector<double> w(m), t_hint(m), arcs(m);
  for (int j = 0; j < m; ++j) {
    const BoundaryPoint& y = coarse_samples_[j * stride];
    auto [poly, len] = domain_.quasiconvex_path(y.point, x);
    auto [val, ts] = min_time_action_along(spec_, poly);
    w[j] = coarse_g_[j * stride] + val;
    t_hint[j] = ts;
    arcs[j] = y.arc;
  }

  double w_min = *std::min_element(w.begin(), w.end());
  double w_max = *std::max_element(w.begin(), w.end());
  const double ptol = 1e-9 * (1.0 + std::abs(w_min));

  struct Cluster {
    int rep;
    double w;
    bool plateau = false;
  };
  std::vector<Cluster> clusters;

  if (w_max - w_min <= ptol) {
    // The whole boundary co-minimizes (e.g. the center of a disk): keep a
    // capped spread of representatives, no arc refinement.
    int step = std::max(1, m / opts_.plateau_cap);
    for (int j = 0; j < m; j += step) clusters.push_back({j, w[j], true});
  } else {
    // circular local minima, grouping flat runs
    std::vector<char> is_min(m, 0);
    for (int j = 0; j < m; ++j) {
      double prev = w[(j + m - 1) % m], next = w[(j + 1) % m];
      if (w[j] <= prev + ptol && w[j] <= next + ptol) is_min[j] = 1;
    }
    std::vector<char> seen(m, 0);
    for (int j = 0; j < m; ++j) {
      if (!is_min[j] || seen[j]) continue;
      int a = j;
      while (is_min[(a + m - 1) % m] && !seen[(a + m - 1) % m] && (a + m - 1) % m != j)
        a = (a + m - 1) % m;
      int rep = a, cur = a;
      for (;;) {
        seen[cur] = 1;
        if (w[cur] < w[rep]) rep = cur;
        int nxt = (cur + 1) % m;
        if (!is_min[nxt] || seen[nxt]) break;
        cur = nxt;
      }
      clusters.push_back({rep, w[rep], false});
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.w < b.w; });
    std::vector<double> ws(w);
    std::nth_element(ws.begin(), ws.begin() + m / 2, ws.end());
    double margin = std::max(0.25 * (ws[m / 2] - w_min), 10.0 * ptol);
    std::vector<Cluster> kept;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      if (static_cast<int>(kept.size()) >= opts_.cluster_cap) break;
      if (static_cast<int>(k) < refine_top || clusters[k].w <= w_min + margin)
        kept.push_back(clusters[k]);
    }
    clusters = std::move(kept);
  }

  // Refinement: 1-D search in arc coordinate around each cluster.
  std::vector<BoundaryCandidate> cands;
  const double gap = per * stride / coarse_samples_.size();
  for (const Cluster& cl : clusters) {
    double arc0 = arcs[cl.rep];
    double hint = t_hint[cl.rep];
    Path warm;
    bool have_warm = false;

    BoundaryCandidate best;
    best.value = std::numeric_limits<double>::infinity();
    auto eval = [&](double arc) {
      BoundaryPoint y = domain_.boundary_point_at_arc(arc);
      PotentialQuery q =
          engine_.potential_near(y.point, x, hint, have_warm ? &warm : nullptr, &aopts);
      hint = q.optimal_time > 0.0 ? q.optimal_time : hint;
      warm = q.minimizer.path;
      have_warm = true;
      double val = bd_.g(y) + q.value;
      if (val < best.value) {
        best.value = val;
        best.arc = y.arc;
        best.time = q.optimal_time;
        best.y = y;
        best.minimizer = q.minimizer;
      }
      return val;
    };

    if (cl.plateau) {
      eval(arc0);
    } else {
      golden_min(eval, arc0 - gap, arc0 + gap, arc_tol * per, 80);
    }
    if (std::isfinite(best.value)) cands.push_back(std::move(best));
  }
  if (cands.empty()) fail(Err::SolverFailure, "boundary minimization produced no candidate");

  // Merge refinements that converged to the same boundary point.
  std::sort(cands.begin(), cands.end(),
            [](const BoundaryCandidate& a, const BoundaryCandidate& b) { return a.arc < b.arc; });
  std::vector<BoundaryCandidate> merged;
  const double arc_merge = std::max(4.0 * arc_tol * per, 1e-12 * per);
  for (auto& c : cands) {
    if (!merged.empty() && std::abs(c.arc - merged.back().arc) <= arc_merge) {
      if (c.value < merged.back().value) merged.back() = std::move(c);
    } else {
      merged.push_back(std::move(c));
    }
  }
  if (merged.size() > 1 &&
      std::abs((merged.front().arc + per) - merged.back().arc) <= arc_merge) {
    if (merged.back().value < merged.front().value) merged.front() = std::move(merged.back());
    merged.pop_back();
  }

  double u = std::numeric_limits<double>::infinity();
  for (const auto& c : merged) u = std::min(u, c.value);

  // Exact co-minimizer tie-break: smallest arc within the tie window.
  const double tie = std::max(1e-12 * (1.0 + std::abs(u)), ptol);
  const BoundaryCandidate* star = nullptr;
  for (const auto& c : merged)
    if (c.value <= u + tie && (star == nullptr || c.arc < star->arc)) star = &c;

  ValueResult r;
  r.u = u;
  r.y_star = star->y;
  r.T = star->time;
  const double delta = retention_abs > 0.0 ? retention_abs
                                           : opts_.delta_opt_scale * (1.0 + std::abs(u));
  for (auto& c : merged)
    if (c.value <= u + delta) r.candidates.push_back(std::move(c));
  return r;
}

ValueResult ValueSolver::value(const Vec& x) const {
  return value_impl(x, opts_.m_bd, opts_.refine_top, opts_.arc_tol_rel, opts_.refine_action, 0.0);
}

ValueResult ValueSolver::value_window(const Vec& x, double retention_abs) const {
  return value_impl(x, opts_.m_bd, opts_.refine_top, opts_.arc_tol_rel, opts_.refine_action,
                    retention_abs);
}

double ValueSolver::value_only(const Vec& x) const {
  return value_impl(x, opts_.m_bd, 2, std::max(1e-4, opts_.arc_tol_rel), opts_.refine_action, 0.0)
      .u;
}

double ValueSolver::exit_time(const Vec& x) const { return value(x).T; }

ValueSolver::Backtrace ValueSolver::backtrace(const Vec& x) const {
  ValueResult r = value(x);
  Backtrace b;
  b.y_star = r.y_star;
  b.T = r.T;
  if (r.T <= 0.0) {
    b.curve.times = {0.0};
    b.curve.nodes = {x};
    b.dual.covectors = {spec_.L_v(x, Vec::Zero(spec_.dim))};
    b.defect = std::abs(r.u - bd_.g(r.y_star));
    return b;
  }
  const BoundaryCandidate* star = nullptr;
  for (const auto& c : r.candidates)
    if (std::abs(c.arc - r.y_star.arc) < 1e-12 * (1.0 + domain_.perimeter())) star = &c;
  if (!star) star = &r.candidates.front();
  b.curve = star->minimizer.path;
  for (auto& t : b.curve.times) t -= star->time;  // orient on [-T, 0]
  b.dual = star->minimizer.dual;
  b.defect = std::abs(r.u - bd_.g(star->y) - star->minimizer.value);
  return b;
}

std::pair<double, Vec> ValueSolver::boundary_covector(const BoundaryPoint& y) const {
  auto f = [&](double mu) { return hamiltonian(spec_, y.point, Vec(-mu * y.normal)); };
  if (f(0.0) >= 0.0)
    fail(Err::RootNotBracketed, "H(y, 0) >= 0: no positive root along the inward conormal");
  double hi = 1.0;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e9) fail(Err::RootNotBracketed, "no sign change of H(y, -mu nu) below mu = 1e9");
  }
  double lo = hi * 0.5 > 1.0 ? hi * 0.5 : 0.0;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  double mu = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {  // Newton polish on the residual
    double val = f(mu);
    if (std::abs(val) <= 1e-10) break;
    Vec p = -mu * y.normal;
    double slope = hamiltonian_maximizer(spec_, y.point, p).dot(-y.normal);
    if (std::abs(slope) < 1e-14) break;
    mu -= val / slope;
  }
  if (std::abs(f(mu)) > 1e-10)
    fail(Err::RootNotBracketed, "transversality root did not reach residual 1e-10");
  return {mu, Vec(-mu * y.normal)};
}

// ---------------------------------------------------------------------------
// compatibility audit
// ---------------------------------------------------------------------------

CompatibilityReport ValueSolver::check_compatibility(int pairs) const {
  CompatibilityReport rep;
  rep.c_hat = engine_.critical();

  {
    CompatibilityEntry e;
    e.name = "SH1-bounded-lipschitz-domain";
    e.pass = true;
    e.samples = 1;
    e.note = "bounding box diameter " + std::to_string(domain_.diameter());
    rep.entries.push_back(e);
  }
  {
    CompatibilityEntry e;
    e.name = "SH2-tonelli";
    TonelliReport t = tonelli_check(spec_, domain_, 16);
    e.pass = t.pass;
    e.samples = t.samples;
    e.worst = std::max(t.worst_envelope_gap, std::max(0.0, -t.min_hessian_eig));
    e.tol = 0.0;
    e.note = "min L_vv eigenvalue " + std::to_string(t.min_hessian_eig);
    rep.entries.push_back(e);
  }

  const int nb = 64;
  auto bsamples = domain_.boundary_sample(nb);
  std::uint64_t state = 0xfeedbead1234ULL;
  std::vector<std::pair<int, int>> idx;
  for (int k = 0; k < pairs; ++k) {
    int i = static_cast<int>(splitmix64(state) % nb);
    int j = static_cast<int>(splitmix64(state) % nb);
    if (i == j) j = (j + 1 + static_cast<int>(splitmix64(state) % (nb - 1))) % nb;
    idx.push_back({i, j});
  }

  const double tol_opt = opts_.action.tol_opt;
  const bool gate = engine_.supercritical();  // potential queries need the gate
  {
    CompatibilityEntry e;
    e.name = "SH3-boundary-compatibility";
    e.samples = pairs;
    if (!gate) {
      e.pass = false;
      e.note = "skipped: scenario is not supercritical";
    } else {
      double gscale = 0.0;
      for (const auto& s : bsamples) gscale = std::max(gscale, std::abs(bd_.g(s)));
      e.tol = 3.0 * tol_opt * (1.0 + gscale) + 1e-9;
      e.worst = -std::numeric_limits<double>::infinity();
      for (auto [i, j] : idx) {
        double phi = engine_.potential(bsamples[j].point, bsamples[i].point).value;
        e.worst = std::max(e.worst, bd_.g(bsamples[i]) - bd_.g(bsamples[j]) - phi);
      }
      e.pass = e.worst <= e.tol;
    }
    rep.entries.push_back(e);
  }
  {
    CompatibilityEntry e;
    e.name = "SH4-supercritical";
    e.samples = engine_.critical_estimate().point_samples;
    e.worst = engine_.critical();
    e.tol = 0.0;
    e.pass = engine_.supercritical();
    e.note = "gate uses c_hat + 0.05 |c_hat|";
    rep.entries.push_back(e);
  }
  {
    CompatibilityEntry e;
    e.name = "G1-strict-compatibility";
    e.applicable = bd_.nu.has_value() && gate;
    if (e.applicable) {
      double nu = *bd_.nu;
      e.samples = pairs;
      e.tol = 3.0 * tol_opt + 1e-9;
      e.worst = -std::numeric_limits<double>::infinity();
      for (auto [i, j] : idx) {
        double phi = engine_.potential(bsamples[j].point, bsamples[i].point).value;
        e.worst = std::max(e.worst, bd_.g(bsamples[i]) - bd_.g(bsamples[j]) - nu * phi);
      }
      e.pass = e.worst <= e.tol;
      e.note = "nu = " + std::to_string(nu);
    }
    rep.entries.push_back(e);
  }
  {
    CompatibilityEntry e;
    e.name = "G2-extension-gradient";
    e.applicable = static_cast<bool>(bd_.grad_G);
    if (e.applicable) {
      // Fitted C on well-separated pairs must be stable against close pairs,
      // otherwise <grad G(x), x-y> is not O(|x-y|^2) along the boundary.
      auto fit = [&](double min_sep, double max_sep) {
        double c = 0.0;
        for (int i = 0; i < nb; ++i)
          for (int j = 0; j < nb; ++j) {
            if (i == j) continue;
            double sep = (bsamples[i].point - bsamples[j].point).norm();
            if (sep < min_sep || sep > max_sep) continue;
            double num = bd_.grad_G(bsamples[i].point).dot(bsamples[i].point - bsamples[j].point);
            c = std::max(c, num / (sep * sep));
          }
        return c;
      };
      double diam = domain_.diameter();
      double c_far = fit(0.05 * diam, diam + 1.0);
      double c_close = 0.0;
      for (int i = 0; i < nb; ++i) {
        BoundaryPoint a = bsamples[i];
        BoundaryPoint b = domain_.boundary_point_at_arc(a.arc + 1e-3 * domain_.perimeter());
        double sep = (a.point - b.point).norm();
        if (sep < 1e-12) continue;
        c_close = std::max(c_close, bd_.grad_G(a.point).dot(a.point - b.point) / (sep * sep));
      }
      e.samples = nb;
      e.worst = std::max(c_far, c_close);
      e.tol = 0.0;
      e.pass = c_close <= 4.0 * c_far + 1e-6;
      e.note = "fitted C = " + std::to_string(e.worst);
    }
    rep.entries.push_back(e);
  }

  rep.pass = true;
  for (const auto& e : rep.entries)
    if (e.applicable && e.name.rfind("SH", 0) == 0 && !e.pass) rep.pass = false;
  return rep;
}

// ---------------------------------------------------------------------------
// field solve
// ---------------------------------------------------------------------------

ValueField ValueSolver::solve_field(double h) const {
  if (!(h > 0.0)) fail(Err::ConfigError, "grid spacing must be positive");
  engine_.require_supercritical();

  ValueField field;
  field.lo = domain_.bbox_lo();
  field.h = h;
  field.nx = static_cast<int>(std::floor((domain_.bbox_hi()[0] - field.lo[0]) / h + 1e-9)) + 1;
  field.ny = static_cast<int>(std::floor((domain_.bbox_hi()[1] - field.lo[1]) / h + 1e-9)) + 1;
  field.index.assign(static_cast<std::size_t>(field.nx) * field.ny, -1);

  const double tau = domain_.geom_tol() * (1.0 + domain_.diameter());
  std::vector<std::pair<int, int>> cells;
  for (int j = 0; j < field.ny; ++j)
    for (int i = 0; i < field.nx; ++i) {
      Vec x(2);
      x << field.lo[0] + i * h, field.lo[1] + j * h;
      if (domain_.signed_distance(x) <= tau) {
        field.index[static_cast<std::size_t>(j) * field.nx + i] =
            static_cast<int>(cells.size());
        cells.push_back({i, j});
      }
    }

  field.points.resize(cells.size());
  const double eps_sing = 1e-4 * (1.0 + lipschitz_estimate());

  parallel_for(
      cells.size(),
      [&](std::size_t k) {
        auto [i, j] = cells[k];
        FieldPoint& fp = field.points[k];
        fp.x = Vec(2);
        fp.x << field.lo[0] + i * h, field.lo[1] + j * h;
        try {
          double sd = domain_.signed_distance(fp.x);
          if (sd >= -tau) {
            BoundaryPoint y = domain_.project_to_boundary(fp.x);
            fp.u = bd_.g(y);
            fp.T = 0.0;
            fp.ystar_arc = y.arc;
            return;
          }
          double bdist = -sd;
          if (bdist < opts_.near_boundary_fraction * h) {
            // Near-boundary copy rule: projected boundary value plus one
            // short potential query.
            BoundaryPoint y = domain_.project_to_boundary(fp.x);
            auto [poly, len] = domain_.quasiconvex_path(y.point, fp.x);
            auto [val, ts] = min_time_action_along(spec_, poly);
            PotentialQuery q =
                engine_.potential_near(y.point, fp.x, ts, nullptr, &opts_.refine_action);
            fp.u = bd_.g(y) + q.value;
            fp.T = q.optimal_time;
            fp.ystar_arc = y.arc;
            fp.shortcut = true;
            return;
          }
          ValueResult r = value(fp.x);
          fp.u = r.u;
          fp.T = r.T;
          fp.ystar_arc = r.y_star.arc;
          std::vector<Vec> covs;
          for (const auto& c : r.candidates) {
            fp.covectors.push_back({c.arc, c.minimizer.dual.covectors.back()});
            covs.push_back(c.minimizer.dual.covectors.back());
          }
          fp.singular = dedupe_covectors(covs, eps_sing).size() >= 2;
        } catch (const Error&) {
          fp.failed = true;
        }
      },
      opts_.threads);
  return field;
}

}  // namespace wkam
