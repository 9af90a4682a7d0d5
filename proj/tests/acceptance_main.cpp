// Acceptance battery: one pass/fail line per criterion, nonzero exit on any
// failure. Expected values come from the closed-form oracles in oracles.hpp.

#include "wkam/scenario.hpp"
#include "wkam/verify.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace wkam;
using oracle::v2;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

LagrangianSpec kinetic() { return make_kinetic_lagrangian(2, 0.5, Vec::Zero(2), 1.0); }
Domain unit_disk() { return Domain::disk(Vec::Zero(2), 1.0); }
Domain unit_square() { return Domain::rectangle(v2(-1, -1), v2(1, 1)); }
Domain rect21() { return Domain::rectangle(v2(0, 0), v2(2, 1)); }

BoundaryData zero_data() {
  BoundaryData bd;
  bd.g = [](const BoundaryPoint&) { return 0.0; };
  bd.G = [](const Vec&) { return 0.0; };
  bd.grad_G = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  bd.nu = 0.0;
  return bd;
}

struct Harness {
  int failures = 0;
  void run(int id, const std::string& label, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", id, label.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

double field_max_error(const ValueField& field, const std::function<double(const Vec&)>& exact) {
  double worst = 0.0;
  for (const auto& fp : field.points) {
    if (fp.failed) return 1e300;
    worst = std::max(worst, std::abs(fp.u - exact(fp.x)));
  }
  return worst;
}

/// Symmetric Hausdorff distance between the flagged cloud and axis samples.
double hausdorff(const std::vector<Vec>& flagged, const std::vector<Vec>& axis,
                 const std::function<double(const Vec&)>& axis_distance) {
  if (flagged.empty()) return 1e300;
  double d_flag_to_axis = 0.0;
  for (const auto& p : flagged) d_flag_to_axis = std::max(d_flag_to_axis, axis_distance(p));
  double d_axis_to_flag = 0.0;
  for (const auto& a : axis) {
    double best = 1e300;
    for (const auto& p : flagged) best = std::min(best, (a - p).norm());
    d_axis_to_flag = std::max(d_axis_to_flag, best);
  }
  return std::max(d_flag_to_axis, d_axis_to_flag);
}

std::vector<Vec> flagged_points(const ValueField& field) {
  std::vector<Vec> out;
  for (const auto& fp : field.points)
    if (fp.singular && !fp.failed) out.push_back(fp.x);
  return out;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  Harness h;
  LagrangianSpec spec = kinetic();

  ValueSolver disk_solver(spec, unit_disk(), zero_data());
  ValueSolver square_solver(spec, unit_square(), zero_data());
  ValueSolver rect_solver(spec, rect21(), zero_data());

  // Criteria 1-2: analytic fields at h = 0.05 within 0.01, under two minutes.
  ValueField disk_field, square_field;
  h.run(1, "disk field max error <= 0.01 at h = 0.05 within 120 s", [&](std::string& d) {
    auto t0 = Clock::now();
    disk_field = disk_solver.solve_field(0.05);
    double secs = seconds_since(t0);
    double err = field_max_error(disk_field, oracle::disk_u);
    d = "max error " + fmt2(err) + ", " + fmt2(secs) + " s";
    return err <= 0.01 && secs <= 120.0;
  });
  h.run(2, "square field max error <= 0.01 at h = 0.05 within 120 s", [&](std::string& d) {
    auto t0 = Clock::now();
    square_field = square_solver.solve_field(0.05);
    double secs = seconds_since(t0);
    double err = field_max_error(square_field, oracle::square_u);
    d = "max error " + fmt2(err) + ", " + fmt2(secs) + " s";
    return err <= 0.01 && secs <= 120.0;
  });

  h.run(3, "potential matches sqrt(2)|x-y| to 1e-4 relative on 50 pairs", [&](std::string& d) {
    oracle::Rng rng(101);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      Vec x = rng.in_disk(1.0, 0.02), y = rng.in_disk(1.0, 0.02);
      if ((x - y).norm() < 0.05) {
        --k;
        continue;
      }
      double got = disk_solver.engine().potential(x, y).value;
      double want = oracle::quad_potential(x, y);
      worst = std::max(worst, std::abs(got - want) / want);
    }
    d = "worst relative error " + fmt2(worst);
    return worst <= 1e-4;
  });

  h.run(4, "critical value within 0.02 (stationary-loop and max-V oracles)", [&](std::string& d) {
    double c_kin = disk_solver.critical();
    MechanicalSpec m;
    m.dim = 2;
    m.A = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
    m.S = [](const Vec&) { return 0.0; };
    m.DS = [](const Vec&) { return Vec(Vec::Zero(2)); };
    m.V = [](const Vec&) { return -1.0; };
    m.A_constant = m.DS_constant = m.V_constant = true;
    double c_mech = critical_value(make_mechanical_lagrangian(m, unit_disk()), unit_disk(), 64)
                        .c_hat;
    d = "kinetic " + fmt2(c_kin) + ", mechanical " + fmt2(c_mech) + " (both expect -1)";
    return std::abs(c_kin + 1.0) <= 0.02 && std::abs(c_mech + 1.0) <= 0.02;
  });

  ValueField square_fine, rect_fine;
  h.run(5, "skeleton within Hausdorff 2h of the medial axis at h = 0.02", [&](std::string& d) {
    const double grid = 0.02;
    square_fine = square_solver.solve_field(grid);
    double hs = hausdorff(flagged_points(square_fine), oracle::square_axis_points(grid),
                          oracle::square_axis_distance);
    rect_fine = rect_solver.solve_field(grid);
    double hr = hausdorff(flagged_points(rect_fine), oracle::rect_axis_points(grid),
                          oracle::rect_axis_distance);
    d = "square " + fmt2(hs) + ", rectangle " + fmt2(hr) + " vs bound " + fmt2(2.0 * grid);
    return hs <= 2.0 * grid && hr <= 2.0 * grid;
  });

  SingularTracer square_tracer(square_solver);
  h.run(6, "mechanical chain from (0.5,0.5) reaches the center at unit rate",
        [&](std::string& d) {
          SingularChain chain = square_tracer.trace_mechanical(v2(0.5, 0.5), 10.0);
          if (chain.verdict != ChainVerdict::CriticalPoint) {
            d = std::string("verdict ") + verdict_name(chain.verdict);
            return false;
          }
          double dist = chain.points.back().norm();
          bool monotone = true;
          for (std::size_t k = 0; k + 1 < chain.u_values.size(); ++k)
            if (chain.u_values[k + 1] < chain.u_values[k] - 1e-9) monotone = false;
          double du = chain.u_values.back() - chain.u_values.front();
          double ds = chain.s.back() - chain.s.front();
          double rate = ds > 0 ? du / ds : 0.0;
          d = "final distance " + fmt2(dist) + ", rate " + fmt2(rate) + " (expect 1)";
          return dist <= 0.02 && monotone && std::abs(rate - 1.0) <= 0.10;
        });

  SingularTracer disk_tracer(disk_solver);
  SingularTracer rect_tracer(rect_solver);
  h.run(7, "20 mechanical chains from sampled cut points all reach critical points",
        [&](std::string& d) {
          struct Seed {
            SingularTracer* tracer;
            Vec x;
          };
          std::vector<Seed> seeds;
          auto add_from = [&](SingularTracer& tracer, const ValueField& field, int want) {
            int added = 0;
            int step = 1;
            auto flags = flagged_points(field);
            if (flags.empty()) return;
            step = std::max(1, static_cast<int>(flags.size()) / want);
            for (std::size_t i = 0; i < flags.size() && added < want; i += step) {
              seeds.push_back({&tracer, flags[i]});
              ++added;
            }
          };
          add_from(square_tracer, square_fine, 8);
          add_from(rect_tracer, rect_fine, 8);
          add_from(disk_tracer, disk_field, 4);
          if (seeds.size() < 20) {
            d = "only " + std::to_string(seeds.size()) + " cut-point seeds found";
            return false;
          }
          seeds.resize(20);
          int critical = 0;
          for (const auto& s : seeds) {
            try {
              SingularChain c = s.tracer->trace_mechanical(s.x, 20.0);
              if (c.verdict == ChainVerdict::CriticalPoint) ++critical;
              if (c.verdict == ChainVerdict::BoundaryApproach) {
                d = "a chain reported BoundaryApproach";
                return false;
              }
            } catch (const Error& e) {
              d = std::string("boundary-hit alarm: ") + e.what();
              return false;  // any BoundaryHit is a build-failing alarm
            }
          }
          d = std::to_string(critical) + "/20 chains reached a critical point";
          return critical == 20;
        });

  h.run(8, "traced steps stay in the convex hull of H_p over the superdifferential",
        [&](std::string& d) {
          double worst = 0.0;
          int steps = 0;
          auto audit = [&](ValueSolver& solver, SingularTracer& tracer,
                           const SingularChain& chain, double win) {
            for (std::size_t k = 0; k + 1 < chain.points.size(); ++k) {
              Vec v = (chain.points[k + 1] - chain.points[k]) / chain.step_times[k];
              Superdifferential sd = tracer.limiting_gradients(chain.points[k], win);
              std::vector<Vec> hull;
              double scale = 1e-12;
              for (const auto& p : sd.vertices) {
                hull.push_back(solver.spec().H_p(chain.points[k], p));
                scale = std::max(scale, hull.back().norm());
              }
              worst = std::max(worst, convex_hull_distance(hull, v) / scale);
              ++steps;
            }
          };
          SingularChain mech = square_tracer.trace_mechanical(v2(0.5, 0.5), 10.0);
          audit(square_solver, square_tracer,
                mech, 2.0 * square_solver.lipschitz_estimate() * square_tracer.h_flow());
          SingularChain mech_r = rect_tracer.trace_mechanical(v2(0.3, 0.3), 10.0);
          audit(rect_solver, rect_tracer, mech_r,
                2.0 * rect_solver.lipschitz_estimate() * rect_tracer.h_flow());
          SingularChain gen = square_tracer.trace_general(v2(0.5, 0.5), 10.0);
          audit(square_solver, square_tracer, gen,
                2.0 * square_solver.lipschitz_estimate() * 1e-5 * unit_square().diameter());
          d = "worst hull distance " + fmt2(worst) + " over " + std::to_string(steps) +
              " steps (tol 0.05)";
          return worst <= 0.05;
        });

  h.run(9, "structural inequality suite at 2000 samples", [&](std::string& d) {
    const double tol_opt = 1e-8;
    oracle::Rng rng(202);
    const PotentialEngine& eng = disk_solver.engine();
    double c1 = disk_solver.lipschitz_estimate();
    double c_hat = disk_solver.critical();
    double kappa1 = theta_inverse(
        spec.theta1, spec.theta2(1.0) + theta_conjugate(spec.theta1, 1.0) + 2.0 * spec.c0 + 1.0);
    double c2 = theta_conjugate(spec.theta1, spec.theta2(kappa1) + 1.0) + spec.c0;

    // triangle inequality of the potential
    for (int k = 0; k < 2000; ++k) {
      Vec x = rng.in_disk(1.0), y = rng.in_disk(1.0), z = rng.in_disk(1.0);
      if (eng.potential(x, z).value >
          eng.potential(x, y).value + eng.potential(y, z).value + 3.0 * tol_opt) {
        d = "triangle inequality violated";
        return false;
      }
    }
    // domination + exit-time bounds
    for (int k = 0; k < 2000; ++k) {
      Vec x = rng.in_disk(1.0), xp = rng.in_disk(1.0);
      ValueResult rx = disk_solver.value(x);
      if (disk_solver.value(xp).u - rx.u > eng.potential(x, xp).value + 3.0 * tol_opt) {
        d = "domination violated";
        return false;
      }
      double dist = unit_disk().boundary_distance(x);
      if (dist > c2 * rx.T + 1e-6) {
        d = "lower exit-time bound violated";
        return false;
      }
      if (rx.T > 2.0 * c1 * (rx.y_star.point - x).norm() / (-c_hat) + 1e-6) {
        d = "upper exit-time bound violated";
        return false;
      }
    }
    // boundary agreement
    for (const auto& bp : unit_disk().boundary_sample(2000)) {
      if (std::abs(disk_solver.value(bp.point).u) > 1e-9) {
        d = "boundary agreement violated";
        return false;
      }
    }
    // local semiconcavity midpoint inequality (stability-of-fit gate)
    CheckEntry lsc = check_local_semiconcavity(disk_solver, 0.4, 2000, 202);
    if (!lsc.pass) {
      d = "local semiconcavity fit unstable";
      return false;
    }
    // Fenchel-Young and Legendre round trip
    LagrangianSpec numeric = spec;
    numeric.H = nullptr;
    numeric.H_p = nullptr;
    numeric.H_x = nullptr;
    numeric.mech.reset();
    for (int k = 0; k < 2000; ++k) {
      Vec x = rng.in_disk(1.0);
      Vec v = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
      Vec p = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
      if (p.dot(v) > spec.L(x, v) + hamiltonian(spec, x, p) + 1e-8) {
        d = "Fenchel-Young violated";
        return false;
      }
      Vec peq = legendre(spec, x, v);
      if (std::abs(peq.dot(v) - spec.L(x, v) - hamiltonian(spec, x, peq)) > 1e-8) {
        d = "Fenchel-Young equality violated at the Legendre point";
        return false;
      }
      if ((legendre(numeric, x, hamiltonian_maximizer(numeric, x, p)) - p).norm() > 1e-8) {
        d = "Legendre round trip violated";
        return false;
      }
    }
    d = "triangle, domination, boundary, exit-time, semiconcavity, Fenchel-Young all clean";
    return true;
  });

  h.run(10, "pde residual p99 <= 3h with first-order decay", [&](std::string& d) {
    ValueField disk_fine = disk_solver.solve_field(0.025);
    ValueField square_half = square_solver.solve_field(0.025);
    CheckEntry d05 = check_pde(disk_solver, disk_field, 3.0);
    CheckEntry d025 = check_pde(disk_solver, disk_fine, 3.0);
    CheckEntry s05 = check_pde(square_solver, square_field, 3.0);
    CheckEntry s025 = check_pde(square_solver, square_half, 3.0);
    bool within = d05.pass && d025.pass && s05.pass && s025.pass;
    const double floor_res = 1e-6;
    bool decay = (d025.worst <= 0.75 * d05.worst + floor_res) &&
                 (s025.worst <= 0.75 * s05.worst + floor_res);
    d = "disk p99 " + fmt2(d05.worst) + " -> " + fmt2(d025.worst) + ", square p99 " +
        fmt2(s05.worst) + " -> " + fmt2(s025.worst);
    return within && decay;
  });

  h.run(11, "gauge covariance: fields of (L,g) and (L1,g1) differ by S", [&](std::string& d) {
    Domain disk = unit_disk();
    LagrangianSpec drifted = make_kinetic_lagrangian(2, 0.5, v2(-1, 0), 1.0);
    LagrangianSpec reduced = gauge_transform(
        drifted, [](const Vec& x) { return -x[0]; }, [](const Vec&) { return v2(-1, 0); }, disk);
    BoundaryData g1;
    g1.g = [](const BoundaryPoint& y) { return y.point[0]; };  // g1 = g - S
    g1.G = [](const Vec& x) { return x[0]; };
    g1.grad_G = [](const Vec&) { return v2(1, 0); };
    g1.nu = 1.0 / oracle::kSqrt2;

    ValueSolver a(drifted, disk, zero_data());
    ValueSolver b(reduced, disk, g1);
    ValueField fa = a.solve_field(0.05);
    ValueField fb = b.solve_field(0.05);
    if (fa.points.size() != fb.points.size()) {
      d = "grid mismatch";
      return false;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < fa.points.size(); ++k) {
      double u = fa.points[k].u;
      double u1 = fb.points[k].u;
      double S = -fa.points[k].x[0];
      worst = std::max(worst, std::abs(u1 - (u - S)));
    }
    d = "worst |u1 - (u - S)| = " + fmt2(worst);
    return worst <= 3e-8;
  });

  h.run(12, "backtrace duals end at the transversal covector -sqrt(2) nu",
        [&](std::string& d) {
          oracle::Rng rng(303);
          double worst = 0.0;
          for (int k = 0; k < 50; ++k) {
            Vec x = rng.in_disk(1.0, 0.1);
            auto bt = disk_solver.backtrace(x);
            auto [mu, p] = disk_solver.boundary_covector(bt.y_star);
            if (std::abs(mu - oracle::kSqrt2) > 1e-9) {
              d = "transversality root off";
              return false;
            }
            worst = std::max(worst, (bt.dual.covectors.front() - p).norm());
          }
          d = "worst |p(-T) + sqrt(2) nu| = " + fmt2(worst) + " (tol 0.05)";
          return worst <= 0.05;
        });

  h.run(13, "boundary semiconvexity: stable fit on the disk collar, unmet on the square",
        [&](std::string& d) {
          CheckEntry smooth = check_boundary_semiconvexity(
              disk_solver, unit_disk().boundary_point_at_arc(0.0), 250, 404);
          CheckEntry doubled = check_boundary_semiconvexity(
              disk_solver, unit_disk().boundary_point_at_arc(0.0), 500, 404);
          CheckEntry poly = check_boundary_semiconvexity(
              square_solver, unit_square().boundary_point_at_arc(0.0), 250, 404);
          bool stable =
              smooth.applicable && smooth.pass && doubled.pass &&
              (std::max(doubled.worst, 0.0) <= 1.2 * std::max({smooth.worst, 0.0, smooth.tol}));
          d = "disk C_fit " + fmt2(smooth.worst) + " -> " + fmt2(doubled.worst) +
              (poly.applicable ? ", square unexpectedly applicable" : ", square HypothesisUnmet");
          return stable && !poly.applicable;
        });

  std::printf("%s: %d of 13 criteria failed\n", h.failures == 0 ? "OK" : "FAILED", h.failures);
  return h.failures == 0 ? 0 : 1;
}
