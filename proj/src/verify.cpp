#include "wkam/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {
namespace {

Vec random_unit(std::uint64_t& state, int dim) {
  Vec v(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i)
      v[i] = 2.0 * ((splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
    double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

double uniform(std::uint64_t& state) { return (splitmix64(state) >> 11) * 0x1.0p-53; }

/// Fit the max of scale * Delta / |z|^2 over midpoint triples generated by
/// `gen`, with the value-accuracy slack subtracted from Delta.
template <class Gen>
double fit_quadratic_constant(const ValueSolver& solver, int samples, Gen&& gen, double scale,
                              bool convexity_side) {
  double c_fit = 0.0;
  const double slack = 5e-9;
  int produced = 0;
  int guard = 0;
  while (produced < samples && guard < 50 * samples + 100) {
    ++guard;
    Vec x, z;
    if (!gen(x, z)) continue;
    ++produced;
    double u0 = solver.value(x).u;
    double up = solver.value(Vec(x + z)).u;
    double um = solver.value(Vec(x - z)).u;
    double delta = convexity_side ? (2.0 * u0 - up - um) : (up + um - 2.0 * u0);
    delta -= slack * (1.0 + std::abs(u0));
    c_fit = std::max(c_fit, scale * delta / z.squaredNorm());
  }
  return c_fit;
}

bool fit_is_stable(double c1, double c2, double floor_c) {
  if (c1 <= floor_c && c2 <= floor_c) return true;
  return c2 <= 1.2 * std::max(c1, floor_c);
}

}  // namespace

CheckEntry check_local_semiconcavity(const ValueSolver& solver, double rho, int samples,
                                     std::uint64_t seed) {
  CheckEntry e;
  e.name = "local-semiconcavity";
  if (!(rho > 0.0)) fail(Err::ConfigError, "local semiconcavity needs rho > 0");
  const Domain& dom = solver.domain();
  const int dim = solver.spec().dim;

  auto make_gen = [&](std::uint64_t s) {
    auto state = std::make_shared<std::uint64_t>(s);
    return [&, state](Vec& x, Vec& z) {
      Vec c(dim);
      for (int i = 0; i < dim; ++i)
        c[i] = dom.bbox_lo()[i] + uniform(*state) * (dom.bbox_hi()[i] - dom.bbox_lo()[i]);
      if (dom.boundary_distance(c) < rho) return false;
      double r = (rho / 8.0) * std::pow(10.0, -2.0 * uniform(*state));  // log spread of |z|
      x = c;
      z = r * random_unit(*state, dim);
      return true;
    };
  };

  double c1 = fit_quadratic_constant(solver, samples, make_gen(seed ^ 0x11ULL), rho, false);
  double c2 = fit_quadratic_constant(solver, 2 * samples, make_gen(seed ^ 0x22ULL), rho, false);
  double floor_c = 1e-2 * (1.0 + solver.lipschitz_estimate());
  e.samples = 3 * samples;
  e.worst = c2;
  e.tol = std::max(1.2 * std::max(c1, 0.0), floor_c);
  e.pass = fit_is_stable(c1, c2, floor_c);
  e.note = "fitted C_bar = " + std::to_string(std::max(c2, 0.0));
  return e;
}

CheckEntry check_global_semiconcavity(const ValueSolver& solver, int samples, std::uint64_t seed) {
  CheckEntry e;
  e.name = "global-semiconcavity";
  const Domain& dom = solver.domain();
  const int dim = solver.spec().dim;

  // Hypotheses: exterior sphere, inf L > 0, (G1) data, (G2) extension.
  auto rho_ext = dom.exterior_sphere_radius();
  if (!rho_ext) {
    e.applicable = false;
    e.note = "HypothesisUnmet: exterior sphere condition fails";
    return e;
  }
  double inf_l = std::numeric_limits<double>::infinity();
  std::uint64_t st = seed ^ 0x33ULL;
  for (const Vec& x : sample_closure(dom, 32, st))
    for (int k = 0; k < 8; ++k) {
      Vec v = (2.0 * uniform(st)) * random_unit(st, dim);
      inf_l = std::min(inf_l, solver.spec().L(x, v));
    }
  if (!(inf_l > 0.0)) {
    e.applicable = false;
    e.note = "HypothesisUnmet: inf L = " + std::to_string(inf_l) + " is not positive";
    return e;
  }
  if (!solver.boundary_data().nu.has_value() || !solver.boundary_data().grad_G) {
    e.applicable = false;
    e.note = "HypothesisUnmet: boundary data lacks (G1) nu or (G2) extension";
    return e;
  }

  auto make_gen = [&](std::uint64_t s) {
    auto state = std::make_shared<std::uint64_t>(s);
    const double tau = dom.geom_tol() * (1.0 + dom.diameter());
    return [&, state, tau](Vec& x, Vec& z) {
      // segments anywhere in the closure, boundary-touching included
      Vec a(dim), b(dim);
      for (int i = 0; i < dim; ++i) {
        a[i] = dom.bbox_lo()[i] + uniform(*state) * (dom.bbox_hi()[i] - dom.bbox_lo()[i]);
        b[i] = dom.bbox_lo()[i] + uniform(*state) * (dom.bbox_hi()[i] - dom.bbox_lo()[i]);
      }
      if (uniform(*state) < 0.3) a = dom.project_to_boundary(a).point;  // touch the boundary
      if (!dom.contains(a, tau) || !dom.contains(b, tau)) return false;
      if ((a - b).norm() < 1e-5) return false;
      x = 0.5 * (a + b);
      if (!dom.contains(x, tau)) return false;
      z = 0.5 * (b - a);
      return true;
    };
  };
  double c1 = fit_quadratic_constant(solver, samples, make_gen(seed ^ 0x44ULL), 1.0, false);
  double c2 = fit_quadratic_constant(solver, 2 * samples, make_gen(seed ^ 0x55ULL), 1.0, false);
  double floor_c = 1e-2 * (1.0 + solver.lipschitz_estimate());
  e.samples = 3 * samples;
  e.worst = c2;
  e.tol = std::max(1.2 * std::max(c1, 0.0), floor_c);
  e.pass = fit_is_stable(c1, c2, floor_c);
  e.note = "fitted C = " + std::to_string(std::max(c2, 0.0)) +
           ", exterior sphere rho = " + std::to_string(*rho_ext);
  return e;
}

CheckEntry check_boundary_semiconvexity(const ValueSolver& solver, const BoundaryPoint& xbar,
                                        int samples, std::uint64_t seed) {
  CheckEntry e;
  e.name = "boundary-semiconvexity";
  const Domain& dom = solver.domain();
  const int dim = solver.spec().dim;
  if (!dom.smooth_boundary()) {
    e.applicable = false;
    e.note = "HypothesisUnmet: boundary is not C^2 (polygonal domain)";
    return e;
  }
  double inf_l = std::numeric_limits<double>::infinity();
  std::uint64_t st = seed ^ 0x66ULL;
  for (const Vec& x : sample_closure(dom, 16, st))
    for (int k = 0; k < 4; ++k)
      inf_l = std::min(inf_l, solver.spec().L(x, Vec(uniform(st) * random_unit(st, dim))));
  if (!(inf_l > 0.0)) {
    e.applicable = false;
    e.note = "HypothesisUnmet: inf L is not positive";
    return e;
  }

  const double tau = dom.geom_tol() * (1.0 + dom.diameter());
  double eta = 0.1 * dom.diameter();
  const double eta_floor = 0.01 * dom.diameter();
  double c1 = 0.0, c2 = 0.0;
  bool stable = false;
  double floor_c = 1e-2 * (1.0 + solver.lipschitz_estimate());
  while (eta >= eta_floor) {
    auto make_gen = [&](std::uint64_t s) {
      auto state = std::make_shared<std::uint64_t>(s);
      return [&, state](Vec& x, Vec& z) {
        Vec c = xbar.point + eta * uniform(*state) * random_unit(*state, dim);
        double r = 0.25 * eta * std::pow(10.0, -1.5 * uniform(*state));
        Vec dir = random_unit(*state, dim);
        if (!dom.contains(Vec(c + r * dir), tau) || !dom.contains(Vec(c - r * dir), tau) ||
            !dom.contains(c, tau))
          return false;
        x = c;
        z = r * dir;
        return true;
      };
    };
    c1 = fit_quadratic_constant(solver, samples, make_gen(seed ^ 0x77ULL), 1.0, true);
    c2 = fit_quadratic_constant(solver, 2 * samples, make_gen(seed ^ 0x88ULL), 1.0, true);
    if (fit_is_stable(c1, c2, floor_c)) {
      stable = true;
      break;
    }
    eta *= 0.5;
  }
  e.samples = 3 * samples;
  e.worst = c2;
  e.tol = std::max(1.2 * std::max(c1, 0.0), floor_c);
  e.pass = stable;
  e.note = "fitted C_tilde = " + std::to_string(std::max(c2, 0.0)) +
           " on collar eta = " + std::to_string(eta);
  return e;
}

CheckEntry check_domination(const ValueSolver& solver, int pairs, std::uint64_t seed) {
  CheckEntry e;
  e.name = "domination";
  const Domain& dom = solver.domain();
  std::uint64_t st = seed ^ 0x99ULL;
  auto xs = sample_closure(dom, pairs, st);
  auto ys = sample_closure(dom, pairs, st ^ 0xabcdULL);
  e.samples = pairs;
  e.tol = 3.0 * solver.options().action.tol_opt * (1.0 + solver.lipschitz_estimate());
  e.worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const Vec& x = xs[k % xs.size()];
    const Vec& xp = ys[k % ys.size()];
    double phi = solver.engine().potential(x, xp).value;
    double viol = solver.value(xp).u - solver.value(x).u - phi;
    e.worst = std::max(e.worst, viol);
  }
  e.pass = e.worst <= e.tol;
  return e;
}

CheckEntry check_pde(const ValueSolver& solver, const ValueField& field, double c_res) {
  CheckEntry e;
  e.name = "pde-residual";
  const double h = field.h;
  std::vector<double> residuals;
  int excluded_singular = 0, excluded_stencil = 0, excluded_unstable = 0;

  for (int j = 1; j + 1 < field.ny; ++j)
    for (int i = 1; i + 1 < field.nx; ++i) {
      int c = field.at(i, j);
      if (c < 0) continue;
      const FieldPoint& fp = field.points[c];
      if (fp.failed) continue;
      if (fp.singular) {
        ++excluded_singular;
        continue;
      }
      int e_ = field.at(i + 1, j), w = field.at(i - 1, j);
      int nb = field.at(i, j + 1), sb = field.at(i, j - 1);
      if (e_ < 0 || w < 0 || nb < 0 || sb < 0) {
        ++excluded_stencil;
        continue;
      }
      const FieldPoint& pe = field.points[e_];
      const FieldPoint& pw = field.points[w];
      const FieldPoint& pn = field.points[nb];
      const FieldPoint& ps = field.points[sb];
      if (pe.failed || pw.failed || pn.failed || ps.failed) {
        ++excluded_stencil;
        continue;
      }
      // gradient-stability mask: one-sided slopes must agree
      auto stable = [&](double fwd, double bwd) {
        double scale = std::max({std::abs(fwd), std::abs(bwd), 1e-8});
        return std::abs(fwd - bwd) <= 0.5 * scale;
      };
      double fx_f = (pe.u - fp.u) / h, fx_b = (fp.u - pw.u) / h;
      double fy_f = (pn.u - fp.u) / h, fy_b = (fp.u - ps.u) / h;
      if (!stable(fx_f, fx_b) || !stable(fy_f, fy_b)) {
        ++excluded_unstable;
        continue;
      }
      Vec grad(2);
      grad << 0.5 * (fx_f + fx_b), 0.5 * (fy_f + fy_b);
      residuals.push_back(std::abs(hamiltonian(solver.spec(), fp.x, grad)));
    }

  e.samples = static_cast<int>(residuals.size());
  e.tol = c_res * h;
  if (residuals.empty()) {
    e.applicable = false;
    e.note = "no stencil survived the masks";
    return e;
  }
  std::sort(residuals.begin(), residuals.end());
  std::size_t idx = static_cast<std::size_t>(std::floor(0.99 * (residuals.size() - 1)));
  e.worst = residuals[idx];
  e.pass = e.worst <= e.tol;
  e.note = "p99 of " + std::to_string(residuals.size()) + " pts; excluded " +
           std::to_string(excluded_singular) + " singular, " + std::to_string(excluded_stencil) +
           " stencil, " + std::to_string(excluded_unstable) + " unstable";
  return e;
}

CheckEntry check_monotonicity(const SingularChain& chain, const MechanicalSpec& mech) {
  CheckEntry e;
  e.name = "mechanical-monotonicity";
  const std::size_t n = chain.points.size();
  if (n < 2) {
    e.pass = true;
    e.samples = static_cast<int>(n);
    e.note = "chain has no motion; vacuously monotone";
    return e;
  }
  double u_scale = 1.0;
  for (double u : chain.u_values) u_scale = std::max(u_scale, std::abs(u));
  double worst_drop = 0.0;
  double measured = 0.0, predicted = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double du = chain.u_values[k + 1] - chain.u_values[k];
    worst_drop = std::max(worst_drop, -du);
    double dt = chain.step_times[k];
    Mat A = mech.A(chain.points[k]);
    double rate = chain.covectors[k].dot(A.ldlt().solve(chain.covectors[k]));
    measured += du;
    predicted += rate * dt;
  }
  e.samples = static_cast<int>(n - 1);
  e.worst = worst_drop;
  e.tol = 1e-7 * u_scale;
  bool monotone = worst_drop <= e.tol;
  bool rate_ok;
  if (predicted <= 1e-9) {
    rate_ok = std::abs(measured) <= 1e-6 * u_scale;
  } else {
    rate_ok = std::abs(measured - predicted) <= 0.1 * predicted;
  }
  e.pass = monotone && rate_ok;
  e.note = "total du = " + std::to_string(measured) + ", integrated <p,A^-1 p> = " +
           std::to_string(predicted);
  return e;
}

VerificationReport run_standard_checks(const ValueSolver& solver, const SingularTracer& tracer,
                                       const ValueField* field, const VerifyOptions& opts) {
  VerificationReport rep;
  rep.scenario_hash = opts.scenario_hash;
  std::uint64_t seed = opts.scenario_hash ^ 0xd1ce5eedULL;

  double rho = opts.rho;
  if (rho <= 0.0) {
    double inradius = 0.0;
    for (const Vec& x : sample_closure(solver.domain(), 128, seed ^ 0x1234ULL))
      inradius = std::max(inradius, solver.domain().boundary_distance(x));
    rho = 0.5 * inradius;
  }

  rep.checks.push_back(check_local_semiconcavity(solver, rho, opts.samples, seed));
  rep.checks.push_back(check_global_semiconcavity(solver, opts.samples, seed));
  rep.checks.push_back(
      check_boundary_semiconvexity(solver, solver.domain().boundary_point_at_arc(0.0),
                                   std::max(64, opts.samples / 8), seed));
  rep.checks.push_back(check_domination(solver, opts.pairs, seed));

  ValueField local_field;
  const ValueField* f = field;
  if (!f) {
    local_field = solver.solve_field(opts.grid_h);
    f = &local_field;
  }
  rep.checks.push_back(check_pde(solver, *f, opts.c_res));

  CheckEntry mono;
  mono.name = "mechanical-monotonicity";
  if (!tracer.mechanical_ready()) {
    mono.applicable = false;
    mono.note = "HypothesisUnmet: " + tracer.mechanical_status();
  } else {
    const FieldPoint* seed_pt = nullptr;
    for (const auto& fp : f->points)
      if (fp.singular) {
        seed_pt = &fp;
        break;
      }
    if (!seed_pt) {
      mono.applicable = false;
      mono.note = "no singular grid point found to seed a chain";
    } else {
      SingularChain chain = tracer.trace_mechanical(seed_pt->x, 5.0 * solver.domain().diameter());
      mono = check_monotonicity(chain, *solver.spec().mech);
      mono.note += "; verdict " + std::string(verdict_name(chain.verdict));
    }
  }
  rep.checks.push_back(mono);
  return rep;
}

}  // namespace wkam
