#include "wkam/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace wkam {
namespace {

/// Resample a polyline at uniform parameter values (by arc length) onto
/// count+1 nodes; degenerate polylines collapse to a constant path.
std::vector<Vec> resample_polyline(const std::vector<Vec>& nodes, int count) {
  std::vector<Vec> out;
  out.reserve(count + 1);
  if (nodes.size() == 1) {
    out.assign(count + 1, nodes[0]);
    return out;
  }
  std::vector<double> cum(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    cum[i] = cum[i - 1] + (nodes[i] - nodes[i - 1]).norm();
  double total = cum.back();
  if (total < 1e-300) {
    out.assign(count + 1, nodes[0]);
    return out;
  }
  std::size_t seg = 0;
  for (int k = 0; k <= count; ++k) {
    double s = total * k / count;
    while (seg + 2 < nodes.size() && cum[seg + 1] < s) ++seg;
    double d = cum[seg + 1] - cum[seg];
    double f = d > 0.0 ? (s - cum[seg]) / d : 0.0;
    out.push_back(nodes[seg] + f * (nodes[seg + 1] - nodes[seg]));
  }
  return out;
}

/// Discrete action objective over the stacked interior nodes.
class TranscriptionProblem {
 public:
  TranscriptionProblem(const LagrangianSpec& spec, const Domain& domain, const Vec& x0,
                       const Vec& xN, double t, int segments)
      : spec_(spec), domain_(domain), x0_(x0), xN_(xN), n_(spec.dim), N_(segments),
        dt_(t / segments) {}

  int free_vars() const { return (N_ - 1) * n_; }

  double value(const Vec& z) const {
    double total = 0.0;
    for (int i = 0; i < N_; ++i) {
      node(z, i, a_);
      node(z, i + 1, b_);
      v_ = (b_ - a_) / dt_;
      m_ = 0.5 * (a_ + b_);
      total += dt_ * spec_.L(m_, v_);
    }
    return total;
  }

  double value_grad(const Vec& z, Vec& grad) const {
    grad.setZero();
    double total = 0.0;
    for (int i = 0; i < N_; ++i) {
      node(z, i, a_);
      node(z, i + 1, b_);
      v_ = (b_ - a_) / dt_;
      m_ = 0.5 * (a_ + b_);
      total += dt_ * spec_.L(m_, v_);
      Vec lx = spec_.L_x(m_, v_);
      Vec lv = spec_.L_v(m_, v_);
      if (i >= 1) grad.segment((i - 1) * n_, n_) += 0.5 * dt_ * lx - lv;
      if (i + 1 <= N_ - 1) grad.segment(i * n_, n_) += 0.5 * dt_ * lx + lv;
    }
    return total;
  }

  void project(Vec& z) const {
    for (int i = 0; i < N_ - 1; ++i) {
      w_ = z.segment(i * n_, n_);
      domain_.clamp_inside(w_);
      z.segment(i * n_, n_) = w_;
    }
  }

  void node(const Vec& z, int i, Vec& out) const {
    if (i == 0)
      out = x0_;
    else if (i == N_)
      out = xN_;
    else
      out = z.segment((i - 1) * n_, n_);
  }

  int segments() const { return N_; }
  double dt() const { return dt_; }

 private:
  const LagrangianSpec& spec_;
  const Domain& domain_;
  Vec x0_, xN_;
  int n_, N_;
  double dt_;
  mutable Vec a_, b_, v_, m_, w_;
};

struct SpgOutcome {
  Vec z;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Nodes are kept feasible by projection, but a chord between consecutive
/// nodes can still cut a reflex feature. Replace such chords by the
/// quasiconvex polyline between their endpoints, splitting the segment time
/// by arc length. Returns true when anything changed.
bool repair_chords(const Domain& domain, Path& path) {
  const double tol = 1e-9 * (1.0 + domain.diameter());
  bool changed = false;
  Path out;
  out.times.push_back(path.times.front());
  out.nodes.push_back(path.nodes.front());
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const Vec& a = path.nodes[i];
    const Vec& b = path.nodes[i + 1];
    Vec mid = 0.5 * (a + b);
    if (!domain.contains(mid, tol) && (b - a).norm() > 1e-14) {
      auto [qp, len] = domain.quasiconvex_path(a, b);
      double t0 = path.times[i], dt = path.times[i + 1] - path.times[i];
      for (std::size_t k = 1; k + 1 < qp.nodes.size(); ++k) {
        out.nodes.push_back(qp.nodes[k]);
        out.times.push_back(t0 + dt * qp.times[k] / len);
      }
      changed = true;
    }
    out.nodes.push_back(b);
    out.times.push_back(path.times[i + 1]);
  }
  if (changed) path = std::move(out);
  return changed;
}

/// Spectral projected gradient (Barzilai-Borwein steps, nonmonotone Armijo).
SpgOutcome spg_minimize(const TranscriptionProblem& prob, Vec z0, double tol, int max_iter) {
  SpgOutcome out;
  prob.project(z0);
  Vec z = z0;
  Vec g(prob.free_vars()), g_new(prob.free_vars());
  double f = prob.value_grad(z, g);
  double alpha = 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-6);
  constexpr int memory = 6;
  double recent[memory];
  std::fill(recent, recent + memory, f);
  Vec trial(prob.free_vars()), d(prob.free_vars()), z_new(prob.free_vars());

  int it = 0;
  for (; it < max_iter; ++it) {
    // stationarity: unit-step projected gradient
    trial = z - g;
    prob.project(trial);
    double pg = (trial - z).lpNorm<Eigen::Infinity>();
    if (pg <= tol * (1.0 + std::abs(f))) {
      out.converged = true;
      break;
    }

    trial = z - alpha * g;
    prob.project(trial);
    d = trial - z;
    double gTd = g.dot(d);
    if (gTd > -1e-18) {  // no descent left at this scale
      alpha = 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-6);
      trial = z - alpha * g;
      prob.project(trial);
      d = trial - z;
      gTd = g.dot(d);
      if (gTd > -1e-18) {
        out.converged = pg <= 10.0 * tol * (1.0 + std::abs(f));
        break;
      }
    }

    double f_ref = *std::max_element(recent, recent + memory);
    double lambda = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      z_new = z + lambda * d;
      f_new = prob.value(z_new);
      if (f_new <= f_ref + 1e-4 * lambda * gTd) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;

    double f_old = f;
    (void)f_old;
    f = prob.value_grad(z_new, g_new);
    Vec s = z_new - z;
    Vec yv = g_new - g;
    double sy = s.dot(yv);
    alpha = sy > 1e-300 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : 1.0;
    z.swap(z_new);
    g.swap(g_new);
    recent[it % memory] = f;
  }
  out.z = z;
  out.value = f;
  out.iterations = it;
  return out;
}

}  // namespace

double action_integral(const LagrangianSpec& spec, const Path& path) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    double dt = path.times[i + 1] - path.times[i];
    Vec v = (path.nodes[i + 1] - path.nodes[i]) / dt;
    Vec m = 0.5 * (path.nodes[i] + path.nodes[i + 1]);
    total += dt * spec.L(m, v);
  }
  return total;
}

MinimizerResult fundamental_solution(const LagrangianSpec& spec, const Domain& domain,
                                     const Vec& x, const Vec& y, double t,
                                     const ActionOptions& opts) {
  if (!(t > 0.0)) fail(Err::InvalidTime, "fundamental_solution requires t > 0");

  int N;
  if (opts.n_nodes > 0) {
    N = opts.n_nodes;
  } else {
    double h_path = domain.diameter() / 64.0;
    N = std::max(32, static_cast<int>(std::ceil(t / h_path)));
  }
  N = std::min(N, opts.max_nodes);

  TranscriptionProblem prob(spec, domain, x, y, t, N);
  const int n = spec.dim;

  // Seed path: caller-provided warm start, else the quasiconvex polyline.
  std::vector<Vec> seed_nodes;
  if (opts.init && opts.init->nodes.size() >= 1) {
    seed_nodes = resample_polyline(opts.init->nodes, N);
    // blend the seed onto the requested endpoints (warm starts may come from
    // a nearby endpoint pair)
    Vec d0 = x - seed_nodes.front(), d1 = y - seed_nodes.back();
    if (d0.norm() + d1.norm() > 0.0) {
      for (int i = 0; i <= N; ++i) {
        double s = static_cast<double>(i) / N;
        seed_nodes[i] += (1.0 - s) * d0 + s * d1;
        domain.clamp_inside(seed_nodes[i]);
      }
    }
  } else {
    auto [qp, len] = domain.quasiconvex_path(x, y);
    seed_nodes = resample_polyline(qp.nodes, N);
  }
  Vec z0(prob.free_vars());
  for (int i = 1; i < N; ++i) z0.segment((i - 1) * n, n) = seed_nodes[i];

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double noise = opts.perturb_scale * (x - y).norm();

  SpgOutcome best;
  bool have_best = false;
  int total_iter = 0;
  for (int run = 0; run < std::max(1, opts.multistart); ++run) {
    Vec z = z0;
    if (run > 0 && noise > 0.0) {
      for (int i = 0; i < z.size(); ++i) z[i] += noise * gauss(rng);
    }
    SpgOutcome r = spg_minimize(prob, z, opts.tol_opt, opts.max_iter);
    total_iter += r.iterations;
    bool better = !have_best || r.value < best.value - 1e-15 ||
                  (r.converged && !best.converged && r.value < best.value + 1e-12);
    if (better) {
      best = r;
      have_best = true;
    }
    if (run == 0 && r.converged && r.iterations <= 2 && opts.perturb_scale <= 0.0) break;
  }

  auto path_of = [&](const Vec& z) {
    Path p;
    p.times.resize(N + 1);
    p.nodes.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      p.times[i] = t * i / N;
      Vec node;
      prob.node(z, i, node);
      p.nodes[i] = node;
    }
    return p;
  };

  Path path = path_of(best.z);
  // Reflex features: repair cutting chords and re-optimize from the repaired
  // geometry (no-op on convex domains).
  for (int round = 0; round < 2; ++round) {
    Path probe = path;
    if (!repair_chords(domain, probe)) break;
    std::vector<Vec> reseed = resample_polyline(probe.nodes, N);
    Vec z(prob.free_vars());
    for (int i = 1; i < N; ++i) z.segment((i - 1) * n, n) = reseed[i];
    SpgOutcome r = spg_minimize(prob, z, opts.tol_opt, opts.max_iter);
    total_iter += r.iterations;
    best = r;
    path = path_of(best.z);
  }
  repair_chords(domain, path);  // the returned polyline is always feasible

  MinimizerResult res;
  res.converged = best.converged;
  res.iterations = total_iter;
  res.path = std::move(path);
  res.value = action_integral(spec, res.path);

  const std::size_t M = res.path.nodes.size() - 1;
  res.dual.covectors.resize(M + 1);
  for (std::size_t i = 0; i < M; ++i) {
    double dt = res.path.times[i + 1] - res.path.times[i];
    Vec v = (res.path.nodes[i + 1] - res.path.nodes[i]) / dt;
    Vec m = 0.5 * (res.path.nodes[i] + res.path.nodes[i + 1]);
    res.dual.covectors[i] = spec.L_v(m, v);
  }
  res.dual.covectors[M] = spec.L_v(
      0.5 * (res.path.nodes[M - 1] + res.path.nodes[M]),
      (res.path.nodes[M] - res.path.nodes[M - 1]) /
          (res.path.times[M] - res.path.times[M - 1]));

  const double tau_act = 1e-7 * (1.0 + domain.diameter());
  res.active.resize(M + 1);
  for (std::size_t i = 0; i <= M; ++i)
    res.active[i] = domain.contains(res.path.nodes[i], -tau_act) ? 0 : 1;
  return res;
}

Vec grad_y(const LagrangianSpec& spec, const MinimizerResult& result) {
  const std::size_t N = result.path.nodes.size() - 1;
  if (result.active[N] || result.active[N - 1])
    fail(Err::ConstrainedEndpoint, "terminal segment touches the boundary");
  return result.dual.covectors[N];
}

Vec grad_x(const LagrangianSpec& spec, const MinimizerResult& result) {
  if (result.active[0] || result.active[1])
    fail(Err::ConstrainedEndpoint, "initial segment touches the boundary");
  return Vec(-result.dual.covectors[0]);
}

Vec grad_y(const LagrangianSpec& spec, const Domain& domain, const Vec& x, const Vec& y, double t,
           const ActionOptions& opts) {
  return grad_y(spec, fundamental_solution(spec, domain, x, y, t, opts));
}

Vec grad_x(const LagrangianSpec& spec, const Domain& domain, const Vec& x, const Vec& y, double t,
           const ActionOptions& opts) {
  return grad_x(spec, fundamental_solution(spec, domain, x, y, t, opts));
}

double lipschitz_bound(const LagrangianSpec& spec, const Domain& domain, const Vec& x,
                       const Vec& y, double t) {
  if (!(t > 0.0)) fail(Err::InvalidTime, "lipschitz_bound requires t > 0");
  double arg = domain.quasiconvexity_constant() * (x - y).norm() / t;
  double m = spec.theta2(arg) + theta_conjugate(spec.theta1, 1.0) + spec.c0;
  return theta_inverse(spec.theta1, m + spec.c0 + 1.0);
}

std::pair<double, double> min_time_action_along(const LagrangianSpec& spec, const Path& polyline) {
  double len = polyline.length();
  if (len < 1e-300) return {0.0, 0.0};

  if (spec.mech) {
    // action(T) = a_bar len^2 / (2T) - (S(end)-S(start)) - v_bar T with
    // a_bar, v_bar the path averages of <A tau, tau> and V.
    const auto& m = *spec.mech;
    double a_bar = 0.0, v_bar = 0.0;
    for (std::size_t i = 0; i + 1 < polyline.nodes.size(); ++i) {
      Vec d = polyline.nodes[i + 1] - polyline.nodes[i];
      double seg = d.norm();
      if (seg < 1e-300) continue;
      Vec tau = d / seg;
      Vec mid = 0.5 * (polyline.nodes[i] + polyline.nodes[i + 1]);
      a_bar += seg * tau.dot(m.A(mid) * tau);
      v_bar += seg * m.V(mid);
    }
    a_bar /= len;
    v_bar /= len;
    double dS = m.S(polyline.nodes.back()) - m.S(polyline.nodes.front());
    if (-v_bar > 1e-12) {
      double t_star = len * std::sqrt(a_bar / (-2.0 * v_bar));
      double value = len * std::sqrt(2.0 * a_bar * (-v_bar)) - dS;
      return {value, t_star};
    }
  }

  auto profile = [&](double t) {
    Path scaled = polyline;
    double total = polyline.times.back() - polyline.times.front();
    for (auto& s : scaled.times) s = (s - polyline.times.front()) * (t / total);
    return action_integral(spec, scaled);
  };
  // log-grid bracket then golden section
  double t_ref = std::max(len, 1e-9);
  double best_t = t_ref, best_v = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 24; ++k) {
    double t = t_ref * std::pow(10.0, -3.0 + 4.0 * k / 23.0);
    double v = profile(t);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  auto [t_opt, v_opt] = golden_min(profile, best_t / 3.0, best_t * 3.0, 1e-10 * t_ref, 120);
  return {v_opt, t_opt};
}

void write_minimizer_csv(const MinimizerResult& result, std::ostream& os) {
  const int n = result.path.nodes.empty() ? 0 : static_cast<int>(result.path.nodes[0].size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",p" << i;
  os << ",active\n";
  char buf[64];
  for (std::size_t k = 0; k < result.path.nodes.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", result.path.times[k]);
    os << buf;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", result.path.nodes[k][i]);
      os << ',' << buf;
    }
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", result.dual.covectors[k][i]);
      os << ',' << buf;
    }
    os << ',' << static_cast<int>(result.active[k]) << '\n';
  }
}

}  // namespace wkam
