#include "wkam/geometry.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace wkam;
using oracle::v2;

namespace {

Domain unit_disk() { return Domain::disk(Vec::Zero(2), 1.0); }
Domain unit_square() { return Domain::rectangle(v2(-1, -1), v2(1, 1)); }

Domain lshape() {
  return Domain::polygon({v2(0, 0), v2(2, 0), v2(2, 1), v2(1, 1), v2(1, 2), v2(0, 2)});
}

}  // namespace

TEST_CASE("signed distance on the analytic kinds") {
  Domain disk = unit_disk();
  CHECK(disk.signed_distance(v2(0, 0)) == doctest::Approx(-1.0));
  CHECK(disk.signed_distance(v2(1, 0)) == doctest::Approx(0.0));
  CHECK(disk.signed_distance(v2(2, 0)) == doctest::Approx(1.0));

  Domain sq = unit_square();
  CHECK(sq.signed_distance(v2(0.5, 0.5)) == doctest::Approx(-0.5));
  CHECK(sq.signed_distance(v2(1, 1)) == doctest::Approx(0.0));
  CHECK(sq.signed_distance(v2(2, 0)) == doctest::Approx(1.0));

  Domain l = lshape();
  CHECK(l.signed_distance(v2(0.5, 0.5)) == doctest::Approx(-0.5));
  CHECK(l.signed_distance(v2(1.5, 1.5)) == doctest::Approx(0.5).epsilon(1e-9));  // in the notch
}

TEST_CASE("projection realizes the boundary distance") {
  Domain disk = unit_disk();
  BoundaryPoint bp = disk.project_to_boundary(v2(0.5, 0));
  CHECK(bp.point[0] == doctest::Approx(1.0));
  CHECK(bp.point[1] == doctest::Approx(0.0));
  CHECK(bp.normal[0] == doctest::Approx(1.0));

  // boundary point projects to itself
  BoundaryPoint self = disk.project_to_boundary(v2(1, 0));
  CHECK((self.point - v2(1, 0)).norm() < 1e-12);

  // center of the square: four equidistant feet, smallest arc wins
  Domain sq = unit_square();
  BoundaryPoint tie = sq.project_to_boundary(v2(0, 0));
  CHECK(tie.point[0] == doctest::Approx(-1.0));
  CHECK(tie.point[1] == doctest::Approx(0.0));

  // |x - projection| = |signed distance| on random samples
  oracle::Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    Vec x = rng.in_box(v2(-1.5, -1.5), v2(1.5, 1.5));
    for (const Domain* d : {&disk, &sq}) {
      BoundaryPoint p = d->project_to_boundary(x);
      CHECK((x - p.point).norm() ==
            doctest::Approx(std::abs(d->signed_distance(x))).epsilon(1e-9));
    }
  }
}

TEST_CASE("quasiconvex paths") {
  Domain disk = unit_disk();
  auto [p1, len1] = disk.quasiconvex_path(v2(0, 0), v2(0.5, 0));
  CHECK(len1 == doctest::Approx(0.5));
  CHECK(p1.nodes.size() == 2);

  auto [p0, len0] = disk.quasiconvex_path(v2(0.3, 0.1), v2(0.3, 0.1));
  CHECK(len0 == 0.0);

  Domain l = lshape();
  Vec a = v2(0.5, 1.8), b = v2(1.8, 0.5);
  auto [pl, lenl] = l.quasiconvex_path(a, b);
  CHECK(lenl == doctest::Approx(oracle::lshape_corner_length(a, b)).epsilon(1e-9));
  CHECK(pl.nodes.size() == 3);  // bends at the reflex corner
  CHECK((pl.nodes[1] - v2(1, 1)).norm() < 1e-9);

  // sampled: |x-y| <= length <= C |x-y|
  double C = l.quasiconvexity_constant();
  CHECK(C >= 1.0);
  oracle::Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    Vec x = rng.in_box(v2(0, 0), v2(2, 2));
    Vec y = rng.in_box(v2(0, 0), v2(2, 2));
    if (l.signed_distance(x) > -1e-6 || l.signed_distance(y) > -1e-6) continue;
    auto [p, len] = l.quasiconvex_path(x, y);
    CHECK(len >= (x - y).norm() - 1e-12);
    CHECK(len <= C * (x - y).norm() + 1e-12);
  }
}

TEST_CASE("exterior sphere condition") {
  CHECK(unit_disk().exterior_sphere_radius().value() == doctest::Approx(1.0));
  auto sq = unit_square().exterior_sphere_radius();
  REQUIRE(sq.has_value());
  CHECK(*sq >= 1.0);
  CHECK_FALSE(lshape().exterior_sphere_radius().has_value());
}

TEST_CASE("boundary sampling") {
  Domain disk = unit_disk();
  auto s4 = disk.boundary_sample(4);
  REQUIRE(s4.size() == 4);
  CHECK((s4[0].point - v2(1, 0)).norm() < 1e-12);
  CHECK((s4[1].point - v2(0, 1)).norm() < 1e-12);
  CHECK((s4[2].point - v2(-1, 0)).norm() < 1e-12);
  CHECK((s4[3].point - v2(0, -1)).norm() < 1e-12);

  // square m=8: corners + edge midpoints
  auto s8 = unit_square().boundary_sample(8);
  REQUIRE(s8.size() == 8);
  int corners = 0, midpoints = 0;
  for (const auto& bp : s8) {
    double ax = std::abs(bp.point[0]), ay = std::abs(bp.point[1]);
    if (ax == doctest::Approx(1.0) && ay == doctest::Approx(1.0)) ++corners;
    if ((ax == doctest::Approx(1.0) && ay == doctest::Approx(0.0)) ||
        (ax == doctest::Approx(0.0) && ay == doctest::Approx(1.0)))
      ++midpoints;
  }
  CHECK(corners == 4);
  CHECK(midpoints == 4);

  // rectangle of perimeter 6 at m=6: uniform spacing 1
  Domain rect = Domain::rectangle(v2(0, 0), v2(2, 1));
  auto s6 = rect.boundary_sample(6);
  REQUIRE(s6.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    Vec a = s6[i].point, b = s6[(i + 1) % 6].point;
    CHECK((a - b).norm() == doctest::Approx(1.0));
  }

  // max gap bound for the implicit catalog
  Domain ell = Domain::implicit(make_ellipse(Vec::Zero(2), 2.0, 1.0), v2(-2.2, -1.2), v2(2.2, 1.2));
  auto se = ell.boundary_sample(64);
  double per = ell.perimeter();
  for (std::size_t i = 0; i < se.size(); ++i) {
    double gap = (se[i].point - se[(i + 1) % se.size()].point).norm();
    CHECK(gap <= 2.0 * per / 64 + 1e-9);
  }
}

TEST_CASE("implicit domains: distance, normals, projection") {
  Domain ell = Domain::implicit(make_ellipse(Vec::Zero(2), 2.0, 1.0), v2(-2.2, -1.2), v2(2.2, 1.2));
  CHECK(ell.signed_distance(v2(0, 0)) < 0.0);
  CHECK(ell.signed_distance(v2(3, 0)) > 0.0);
  CHECK(std::abs(ell.signed_distance(v2(2, 0))) < 1e-6);

  // the normal is orthogonal to a finite-difference boundary tangent
  for (double arc : {0.3, 1.7, 4.1, 6.0}) {
    BoundaryPoint bp = ell.boundary_point_at_arc(arc);
    BoundaryPoint bq = ell.boundary_point_at_arc(arc + 1e-5 * ell.perimeter());
    Vec tangent = (bq.point - bp.point).normalized();
    CHECK(std::abs(bp.normal.dot(tangent)) < 1e-3);
    CHECK(std::abs(bp.normal.norm() - 1.0) < 1e-12);
  }

  // projection lands on the zero level and realizes the distance
  oracle::Rng rng(23);
  auto surf = make_ellipse(Vec::Zero(2), 2.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    Vec x = rng.in_box(v2(-1.8, -0.9), v2(1.8, 0.9));
    BoundaryPoint bp = ell.project_to_boundary(x);
    CHECK(std::abs(surf.phi(bp.point)) < 1e-7);
    CHECK((x - bp.point).norm() ==
          doctest::Approx(std::abs(ell.signed_distance(x))).epsilon(1e-6));
  }

  // exterior sphere radius limited by the curvature at the flat ends
  auto rho = ell.exterior_sphere_radius();
  REQUIRE(rho.has_value());
  CHECK(*rho == doctest::Approx(0.5).epsilon(0.05));

  Domain ss = Domain::implicit(make_smoothed_square(Vec::Zero(2), 1.0, 6), v2(-1.1, -1.1),
                               v2(1.1, 1.1));
  CHECK(ss.signed_distance(v2(0, 0)) < -0.9);
  CHECK(ss.smooth_boundary());
}

TEST_CASE("construction contracts") {
  CHECK_THROWS_AS(Domain::disk(Vec::Zero(2), -1.0), Error);
  CHECK_THROWS_AS(Domain::rectangle(v2(1, 1), v2(0, 0)), Error);
  // clockwise vertex order rejected
  CHECK_THROWS_AS(Domain::polygon({v2(0, 0), v2(0, 1), v2(1, 1), v2(1, 0)}), Error);
  CHECK_THROWS_AS(unit_disk().boundary_sample(2), Error);

  // arc coordinate wraps
  Domain sq = unit_square();
  BoundaryPoint a = sq.boundary_point_at_arc(1.0);
  BoundaryPoint b = sq.boundary_point_at_arc(1.0 + 8.0);
  CHECK((a.point - b.point).norm() < 1e-12);
}
