#include "wkam/lagrangian.hpp"

#include <algorithm>
#include <cmath>

namespace wkam {
namespace {

double fd_step(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  double h = fd_step(x);
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

/// Deterministic interior samples of the domain closure.
std::vector<Vec> domain_samples(const Domain& domain, int count) {
  std::vector<Vec> out;
  out.reserve(count);
  std::uint64_t state = 0x5eed0001ULL;
  const Vec lo = domain.bbox_lo(), hi = domain.bbox_hi();
  int guard = 0;
  while (static_cast<int>(out.size()) < count && guard < 100 * count + 1000) {
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

const double kSpeedGrid[] = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0, 12.0, 16.0};

}  // namespace

Vec legendre(const LagrangianSpec& spec, const Vec& x, const Vec& v) { return spec.L_v(x, v); }

Vec hamiltonian_maximizer(const LagrangianSpec& spec, const Vec& x, const Vec& p) {
  if (spec.H_p) return spec.H_p(x, p);
  // Damped Newton on the strictly concave inner problem: solve L_v(x,v) = p.
  Vec v = Vec::Zero(spec.dim);
  if (spec.mech) {
    Mat A = spec.mech->A(x);
    v = A.ldlt().solve(p + spec.mech->DS(x));
  }
  double res = (p - spec.L_v(x, v)).norm();
  const double tol = 1e-10;
  for (int it = 0; it < 100; ++it) {
    if (res <= tol) return v;
    Mat Hvv = spec.L_vv(x, v);
    Vec r = p - spec.L_v(x, v);
    Vec d = Hvv.ldlt().solve(r);
    double step = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      double trial = (p - spec.L_v(x, v + step * d)).norm();
      if (trial <= (1.0 - 0.25 * step) * res) {
        v += step * d;
        res = trial;
        break;
      }
      step *= 0.5;
      if (ls == 39) fail(Err::NewtonDivergence, "legendre inversion line search stalled");
    }
  }
  if (res > tol) fail(Err::NewtonDivergence, "legendre inversion did not reach residual 1e-10");
  return v;
}

double hamiltonian(const LagrangianSpec& spec, const Vec& x, const Vec& p) {
  if (spec.H) return spec.H(x, p);
  Vec v = hamiltonian_maximizer(spec, x, p);
  return p.dot(v) - spec.L(x, v);
}

TonelliReport tonelli_check(const LagrangianSpec& spec, const Domain& domain, int samples) {
  if (samples < 1) fail(Err::ConfigError, "tonelli_check needs samples >= 1");
  TonelliReport rep;
  rep.min_hessian_eig = std::numeric_limits<double>::infinity();
  const auto xs = domain_samples(domain, samples);
  std::vector<Vec> dirs;
  const int ndir = 8;
  for (int k = 0; k < ndir; ++k) {
    Vec d = Vec::Zero(spec.dim);
    if (spec.dim == 2) {
      double a = 2.0 * 3.14159265358979323846 * k / ndir;
      d << std::cos(a), std::sin(a);
    } else {
      d[k % spec.dim] = (k / spec.dim) % 2 == 0 ? 1.0 : -1.0;
    }
    dirs.push_back(d);
  }
  const double slack = 1e-9;
  for (const auto& x : xs) {
    for (const auto& dir : dirs) {
      for (double s : kSpeedGrid) {
        Vec v = s * dir;
        ++rep.samples;
        Eigen::SelfAdjointEigenSolver<Mat> eig(spec.L_vv(x, v));
        double lmin = eig.eigenvalues().minCoeff();
        rep.min_hessian_eig = std::min(rep.min_hessian_eig, lmin);
        if (lmin <= 0.0) ++rep.convexity_violations;
        double val = spec.L(x, v);
        double hi = spec.theta2(s), lo = spec.theta1(s) - spec.c0;
        double gap = std::max(val - hi, lo - val);
        if (gap > slack * (1.0 + std::abs(val))) {
          ++rep.envelope_violations;
          rep.worst_envelope_gap = std::max(rep.worst_envelope_gap, gap);
        }
      }
    }
  }
  rep.pass = rep.convexity_violations == 0 && rep.envelope_violations == 0;
  return rep;
}

LagrangianSpec gauge_transform(const LagrangianSpec& spec,
                               const std::function<double(const Vec&)>& S,
                               const std::function<Vec(const Vec&)>& DS, const Domain& domain,
                               int samples) {
  // Exactness hypothesis: the 1-form being removed is L_v(x, 0).
  for (const auto& x : domain_samples(domain, samples)) {
    Vec want = spec.L_v(x, Vec::Zero(spec.dim));
    Vec got = DS(x);
    if ((want - got).norm() > 1e-6 * (1.0 + want.norm()))
      fail(Err::ExactnessViolated, "gauge transform requires L_v(x,0) = DS(x)");
  }

  if (spec.mech) {
    // Mechanical case: removing the exact 1-form zeroes the S field.
    MechanicalSpec reduced = *spec.mech;
    reduced.S = [](const Vec&) { return 0.0; };
    reduced.DS = [dim = spec.dim](const Vec&) { return Vec::Zero(dim); };
    return make_mechanical_lagrangian(reduced, domain);
  }

  LagrangianSpec out = spec;
  auto baseL = spec.L;
  auto baseLv = spec.L_v;
  auto baseLx = spec.L_x;
  out.L = [baseL, DS](const Vec& x, const Vec& v) { return baseL(x, v) - DS(x).dot(v); };
  out.L_v = [baseLv, DS](const Vec& x, const Vec& v) { return Vec(baseLv(x, v) - DS(x)); };
  out.L_x = [baseLx, DS](const Vec& x, const Vec& v) {
    Vec correction = fd_gradient([&](const Vec& z) { return DS(z).dot(v); }, x);
    return Vec(baseLx(x, v) - correction);
  };
  // Envelope bookkeeping: |<DS,v>| <= s_max |v| costs half of theta1.
  double s_max = 0.0;
  for (const auto& x : domain_samples(domain, samples)) s_max = std::max(s_max, DS(x).norm());
  auto t1 = spec.theta1;
  auto t2 = spec.theta2;
  out.theta1 = [t1](double r) { return 0.5 * t1(r); };
  out.theta2 = [t2, s_max](double r) { return t2(r) + s_max * r; };
  out.c0 = spec.c0 + theta_conjugate([t1](double r) { return 0.5 * t1(r); }, s_max);
  out.H = nullptr;
  out.H_p = nullptr;
  out.H_x = nullptr;
  out.v_symmetric = false;
  return out;
}

double euler_lagrange_residual(const LagrangianSpec& spec, const Path& path) {
  const std::size_t n = path.nodes.size();
  if (n < 3) fail(Err::ConfigError, "euler_lagrange_residual needs at least 3 nodes");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double dt0 = path.times[i] - path.times[i - 1];
    double dt1 = path.times[i + 1] - path.times[i];
    Vec v0 = (path.nodes[i] - path.nodes[i - 1]) / dt0;
    Vec v1 = (path.nodes[i + 1] - path.nodes[i]) / dt1;
    Vec m0 = 0.5 * (path.nodes[i - 1] + path.nodes[i]);
    Vec m1 = 0.5 * (path.nodes[i] + path.nodes[i + 1]);
    Vec dLv = (spec.L_v(m1, v1) - spec.L_v(m0, v0)) / (0.5 * (dt0 + dt1));
    Vec Lx = spec.L_x(path.nodes[i], 0.5 * (v0 + v1));
    worst = std::max(worst, (dLv - Lx).norm());
  }
  return worst;
}

std::pair<Vec, Vec> hamilton_ode_rhs(const LagrangianSpec& spec, const Vec& x, const Vec& p) {
  Vec dx = spec.H_p ? spec.H_p(x, p) : hamiltonian_maximizer(spec, x, p);
  Vec hx;
  if (spec.H_x) {
    hx = spec.H_x(x, p);
  } else {
    hx = fd_gradient([&](const Vec& z) { return hamiltonian(spec, z, p); }, x);
  }
  return {dx, Vec(-hx)};
}

double theta_conjugate(const std::function<double(double)>& theta, double k) {
  auto f = [&](double r) { return k * r - theta(r); };
  double b = 1.0;
  while (f(2.0 * b) > f(b) && b < 1e12) b *= 2.0;
  auto [r, val] = golden_max(f, 0.0, 2.0 * b, 1e-11 * (1.0 + 2.0 * b), 300);
  return std::max(val, f(0.0));
}

double theta_inverse(const std::function<double(double)>& theta, double y) {
  if (theta(0.0) >= y) return 0.0;
  return bisect_increasing(theta, y, 0.0, 1.0, 1e12, 1e-12);
}

LagrangianSpec make_kinetic_lagrangian(int dim, double kinetic_coef, const Vec& drift,
                                       double constant) {
  if (kinetic_coef <= 0.0) fail(Err::ConfigError, "kinetic coefficient must be positive");
  const double k = kinetic_coef;
  const double c = constant;
  const Vec b = drift.size() == dim ? drift : Vec(Vec::Zero(dim));

  LagrangianSpec spec;
  spec.dim = dim;
  spec.L = [k, b, c](const Vec&, const Vec& v) { return k * v.squaredNorm() + b.dot(v) + c; };
  spec.L_v = [k, b](const Vec&, const Vec& v) { return Vec(2.0 * k * v + b); };
  spec.L_x = [dim](const Vec&, const Vec&) { return Vec(Vec::Zero(dim)); };
  spec.L_vv = [k, dim](const Vec&, const Vec&) { return Mat(2.0 * k * Mat::Identity(dim, dim)); };
  spec.H = [k, b, c](const Vec&, const Vec& p) { return (p - b).squaredNorm() / (4.0 * k) - c; };
  spec.H_p = [k, b](const Vec&, const Vec& p) { return Vec((p - b) / (2.0 * k)); };
  spec.H_x = [dim](const Vec&, const Vec&) { return Vec(Vec::Zero(dim)); };
  spec.v_symmetric = b.norm() == 0.0;

  double bn = b.norm();
  if (bn == 0.0 && c >= 0.0) {
    spec.theta1 = [k, c](double r) { return k * r * r + c; };
    spec.theta2 = spec.theta1;
    spec.c0 = 0.0;
  } else {
    spec.theta1 = [k](double r) { return 0.5 * k * r * r; };
    spec.theta2 = [k, bn, c](double r) { return k * r * r + bn * r + std::max(c, 0.0); };
    spec.c0 = std::max(bn * bn / (2.0 * k) - c, 0.0);
  }

  MechanicalSpec mech;
  mech.dim = dim;
  mech.A = [k, dim](const Vec&) { return Mat(2.0 * k * Mat::Identity(dim, dim)); };
  mech.S = [b](const Vec& x) { return -b.dot(x); };
  mech.DS = [b](const Vec&) { return Vec(-b); };
  mech.V = [c](const Vec&) { return -c; };
  mech.DV = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  mech.A_constant = true;
  mech.DS_constant = true;
  mech.V_constant = true;
  spec.mech = mech;
  return spec;
}

LagrangianSpec make_mechanical_lagrangian(const MechanicalSpec& mech, const Domain& domain) {
  MechanicalSpec m = mech;
  if (!m.DV) {
    auto V = m.V;
    m.DV = [V](const Vec& x) { return fd_gradient(V, x); };
  }

  LagrangianSpec spec;
  spec.dim = m.dim;
  spec.mech = m;
  spec.L = [m](const Vec& x, const Vec& v) {
    return 0.5 * v.dot(m.A(x) * v) - m.DS(x).dot(v) - m.V(x);
  };
  spec.L_v = [m](const Vec& x, const Vec& v) { return Vec(m.A(x) * v - m.DS(x)); };
  spec.L_vv = [m](const Vec& x, const Vec&) { return m.A(x); };
  if (m.A_constant && m.DS_constant) {
    spec.L_x = [m](const Vec& x, const Vec&) { return Vec(-m.DV(x)); };
    Vec anchor = Vec::Zero(m.dim);
    Mat A0 = m.A(anchor);
    Mat A0inv = A0.inverse();
    spec.L = [m, A0](const Vec& x, const Vec& v) {
      return 0.5 * v.dot(A0 * v) - m.DS(x).dot(v) - m.V(x);
    };
    spec.L_v = [m, A0](const Vec& x, const Vec& v) { return Vec(A0 * v - m.DS(x)); };
    spec.L_vv = [A0](const Vec&, const Vec&) { return A0; };
    spec.H = [m, A0inv](const Vec& x, const Vec& p) {
      Vec q = p + m.DS(x);
      return 0.5 * q.dot(A0inv * q) + m.V(x);
    };
    spec.H_p = [m, A0inv](const Vec& x, const Vec& p) { return Vec(A0inv * (p + m.DS(x))); };
    spec.H_x = [m](const Vec& x, const Vec&) { return m.DV(x); };
  } else {
    spec.L_x = [m](const Vec& x, const Vec& v) {
      Vec g =
          fd_gradient([&](const Vec& z) { return 0.5 * v.dot(m.A(z) * v) - m.DS(z).dot(v); }, x);
      return Vec(g - m.DV(x));
    };
    spec.H = [m](const Vec& x, const Vec& p) {
      Vec q = p + m.DS(x);
      return 0.5 * q.dot(m.A(x).ldlt().solve(q)) + m.V(x);
    };
    spec.H_p = [m](const Vec& x, const Vec& p) { return Vec(m.A(x).ldlt().solve(p + m.DS(x))); };
    spec.H_x = nullptr;  // finite differences of the closed form
  }
  spec.v_symmetric = true;

  // Envelope constants from eigenvalue and field bounds over bbox samples.
  double a_min = std::numeric_limits<double>::infinity(), a_max = 0.0;
  double s_max = 0.0, v_lo = std::numeric_limits<double>::infinity(), v_hi = -v_lo;
  std::uint64_t state = 0x5eed0002ULL;
  const Vec lo = domain.bbox_lo(), hi = domain.bbox_hi();
  for (int k = 0; k < 64; ++k) {
    Vec x(lo.size());
    for (int i = 0; i < lo.size(); ++i) {
      double u = (splitmix64(state) >> 11) * 0x1.0p-53;
      x[i] = lo[i] + u * (hi[i] - lo[i]);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(m.A(x));
    a_min = std::min(a_min, eig.eigenvalues().minCoeff());
    a_max = std::max(a_max, eig.eigenvalues().maxCoeff());
    s_max = std::max(s_max, m.DS(x).norm());
    double vx = m.V(x);
    v_lo = std::min(v_lo, vx);
    v_hi = std::max(v_hi, vx);
  }
  if (a_min <= 0.0) fail(Err::ConfigError, "mechanical metric must be positive definite");
  spec.v_symmetric = s_max == 0.0;
  if (s_max == 0.0 && v_lo == v_hi && v_lo <= 0.0) {
    // constant metric bounds with nonpositive V: tight quadratic envelopes
    double c = -v_hi;
    spec.theta1 = [a_min, c](double r) { return 0.5 * a_min * r * r + c; };
    spec.theta2 = [a_max, c](double r) { return 0.5 * a_max * r * r + c; };
    spec.c0 = 0.0;
  } else {
    spec.theta1 = [a_min](double r) { return 0.25 * a_min * r * r; };
    spec.theta2 = [a_max, s_max, v_lo](double r) {
      return 0.5 * a_max * r * r + s_max * r + std::max(-v_lo, 0.0);
    };
    spec.c0 = std::max(s_max * s_max / a_min + v_hi, 0.0);
  }
  return spec;
}

}  // namespace wkam
