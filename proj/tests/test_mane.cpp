#include "wkam/mane.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace wkam;
using oracle::v2;

namespace {

LagrangianSpec kinetic() { return make_kinetic_lagrangian(2, 0.5, Vec::Zero(2), 1.0); }
Domain unit_disk() { return Domain::disk(Vec::Zero(2), 1.0); }

Domain lshape() {
  return Domain::polygon({v2(0, 0), v2(2, 0), v2(2, 1), v2(1, 1), v2(1, 2), v2(0, 2)});
}

}  // namespace

TEST_CASE("critical value estimates") {
  Domain disk = unit_disk();
  // stationary loops are optimal: (1/t) A_t(x,x) = 1 for every t
  CHECK(critical_value(kinetic(), disk, 16).c_hat == doctest::Approx(-1.0).epsilon(1e-8));

  // mechanical with A = I, S = 0, V = -1: critical value is max V
  MechanicalSpec m;
  m.dim = 2;
  m.A = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  m.S = [](const Vec&) { return 0.0; };
  m.DS = [](const Vec&) { return Vec(Vec::Zero(2)); };
  m.V = [](const Vec&) { return -1.0; };
  m.A_constant = m.DS_constant = m.V_constant = true;
  CHECK(critical_value(make_mechanical_lagrangian(m, disk), disk, 16).c_hat ==
        doctest::Approx(-1.0).epsilon(1e-8));

  CHECK(critical_value(make_kinetic_lagrangian(2, 0.25, Vec::Zero(2), 1.0), disk, 16).c_hat ==
        doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("horizon bound for the potential infimum") {
  LagrangianSpec spec = kinetic();
  Domain disk = unit_disk();
  // theta2(1) = 1.5, C = 1, c = -1, separation 1: bound 3
  CHECK(time_horizon_bound(spec, disk, -1.0, v2(0, 0), v2(1, 0)) == doctest::Approx(3.0));
  CHECK(time_horizon_bound(spec, disk, -1.0, v2(0.3, 0), v2(0.3, 0)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(time_horizon_bound(spec, disk, 0.5, v2(0, 0), v2(1, 0)), Error);
}

TEST_CASE("potential values against the closed form") {
  LagrangianSpec spec = kinetic();
  Domain disk = unit_disk();
  PotentialEngine eng(spec, disk);

  PotentialQuery q = eng.potential(v2(0, 0), v2(1, 0));
  CHECK(q.value == doctest::Approx(oracle::kSqrt2).epsilon(1e-6));
  CHECK(q.optimal_time == doctest::Approx(oracle::quad_optimal_time(1.0)).epsilon(1e-4));

  PotentialQuery same = eng.potential(v2(0.3, 0.4), v2(0.3, 0.4));
  CHECK(same.value == 0.0);
  CHECK(same.optimal_time == 0.0);

  // around the reflex corner the potential follows the geodesic length
  Domain l = lshape();
  PotentialEngine engl(spec, l);
  Vec a = v2(0.5, 1.8), b = v2(1.8, 0.5);
  PotentialQuery ql = engl.potential(a, b);
  CHECK(ql.value ==
        doctest::Approx(oracle::quad_potential_of_length(oracle::lshape_corner_length(a, b)))
            .epsilon(1e-4));
}

TEST_CASE("potential structure: triangle, bound, symmetry, finiteness") {
  LagrangianSpec spec = kinetic();
  Domain disk = unit_disk();
  PotentialEngine eng(spec, disk);
  double c1 = spec.theta2(1.0) * disk.quasiconvexity_constant();
  double tol = 3.0 * 1e-8;

  oracle::Rng rng(31);
  for (int k = 0; k < 40; ++k) {
    Vec x = rng.in_disk(1.0), y = rng.in_disk(1.0), z = rng.in_disk(1.0);
    double pxz = eng.potential(x, z).value;
    double pxy = eng.potential(x, y).value;
    double pyz = eng.potential(y, z).value;
    CHECK(pxz <= pxy + pyz + tol);

    CHECK(std::abs(pxy) <= c1 * (x - y).norm() + tol);
    CHECK(pxy >= -c1 * (x - y).norm() - tol);
    CHECK(std::isfinite(pxy));

    // v-symmetric Lagrangian: the potential is symmetric
    double pyx = eng.potential(y, x).value;
    CHECK(pxy == doctest::Approx(pyx).epsilon(2e-8));
  }
}

TEST_CASE("refinement variant matches the full search") {
  LagrangianSpec spec = kinetic();
  Domain disk = unit_disk();
  PotentialEngine eng(spec, disk);
  oracle::Rng rng(37);
  for (int k = 0; k < 20; ++k) {
    Vec x = rng.in_disk(1.0, 0.02), y = rng.in_disk(1.0, 0.02);
    PotentialQuery full = eng.potential(x, y);
    // hint off by 3x in both directions still converges
    PotentialQuery lo = eng.potential_near(x, y, full.optimal_time / 3.0);
    PotentialQuery hi = eng.potential_near(x, y, full.optimal_time * 3.0);
    CHECK(lo.value == doctest::Approx(full.value).epsilon(1e-7));
    CHECK(hi.value == doctest::Approx(full.value).epsilon(1e-7));
  }
}
