#pragma once

#include "wkam/common.hpp"
#include "wkam/geometry.hpp"

#include <functional>
#include <optional>

namespace wkam {

/// Mechanical form L(x,v) = 1/2 <A(x)v, v> - <DS(x), v> - V(x) with A(x)
/// symmetric positive definite. Doubles as metadata on a LagrangianSpec:
/// when present it unlocks closed-form action profiles along fixed paths.
struct MechanicalSpec {
  int dim = 2;
  std::function<Mat(const Vec&)> A;
  std::function<double(const Vec&)> S;
  std::function<Vec(const Vec&)> DS;
  std::function<double(const Vec&)> V;
  std::function<Vec(const Vec&)> DV;  // optional; finite differences otherwise
  // Structure flags set by constructors that know them; they unlock exact
  // derivative shortcuts in the hot evaluation paths.
  bool A_constant = false;
  bool DS_constant = false;
  bool V_constant = false;
};

/// Tonelli Lagrangian with the derivative and envelope data the variational
/// code consumes. Immutable after construction; all evaluations are pure.
///
/// theta1/theta2 with offset c0 bound the Lagrangian by superlinear envelopes
/// of the speed: theta2(|v|) >= L(x,v) >= theta1(|v|) - c0.
struct LagrangianSpec {
  int dim = 2;
  std::function<double(const Vec&, const Vec&)> L;
  std::function<Vec(const Vec&, const Vec&)> L_v;
  std::function<Vec(const Vec&, const Vec&)> L_x;
  std::function<Mat(const Vec&, const Vec&)> L_vv;

  std::function<double(double)> theta1;
  std::function<double(double)> theta2;
  double c0 = 0.0;

  // Optional closed-form Hamiltonian; the numerical Legendre transform is
  // used when absent.
  std::function<double(const Vec&, const Vec&)> H;
  std::function<Vec(const Vec&, const Vec&)> H_p;
  std::function<Vec(const Vec&, const Vec&)> H_x;

  bool v_symmetric = false;  // L(x,v) = L(x,-v)
  std::optional<MechanicalSpec> mech;

  bool has_closed_hamiltonian() const { return static_cast<bool>(H); }
};

struct TonelliReport {
  bool pass = false;
  double min_hessian_eig = 0.0;
  int convexity_violations = 0;
  int envelope_violations = 0;
  double worst_envelope_gap = 0.0;
  int samples = 0;
};

/// p = dL/dv(x, v).
Vec legendre(const LagrangianSpec& spec, const Vec& x, const Vec& v);

/// H(x,p) = sup_v <p,v> - L(x,v). Uses the closed form when available,
/// otherwise damped Newton on v to residual 1e-10 (NewtonDivergence after
/// 100 iterations).
double hamiltonian(const LagrangianSpec& spec, const Vec& x, const Vec& p);

/// The maximizing velocity of the Legendre supremum (equals H_p(x,p)).
Vec hamiltonian_maximizer(const LagrangianSpec& spec, const Vec& x, const Vec& p);

/// Sampled convexity + superlinear-envelope audit of conditions on L.
TonelliReport tonelli_check(const LagrangianSpec& spec, const Domain& domain, int samples);

/// Subtract the exact 1-form <DS, v>: L1 = L - <DS,v> with g transformed by
/// the caller as g1 = g - S. Requires L_v(x,0) = DS(x) at sampled points.
LagrangianSpec gauge_transform(const LagrangianSpec& spec,
                               const std::function<double(const Vec&)>& S,
                               const std::function<Vec(const Vec&)>& DS, const Domain& domain,
                               int samples = 32);

/// Max finite-difference Euler-Lagrange defect |d/dt L_v - L_x| over the
/// interior nodes of a discretized curve.
double euler_lagrange_residual(const LagrangianSpec& spec, const Path& path);

/// Right-hand side (H_p, -H_x) of the Hamiltonian system.
std::pair<Vec, Vec> hamilton_ode_rhs(const LagrangianSpec& spec, const Vec& x, const Vec& p);

/// Fenchel conjugate value sup_{r>=0} (k r - theta(r)) of a superlinear envelope.
double theta_conjugate(const std::function<double(double)>& theta, double k);

/// Smallest r with theta(r) = y for nondecreasing theta.
double theta_inverse(const std::function<double(double)>& theta, double y);

/// L = kinetic_coef |v|^2 + <drift, v> + constant.
LagrangianSpec make_kinetic_lagrangian(int dim, double kinetic_coef, const Vec& drift,
                                       double constant);

/// Mechanical Lagrangian; envelope constants are derived from samples over
/// the domain bounding box.
LagrangianSpec make_mechanical_lagrangian(const MechanicalSpec& mech, const Domain& domain);

}  // namespace wkam
