#pragma once

// Independent closed-form and brute-force oracles for the test suites. These
// never call the library's optimization paths; expected values are computed
// here and the implementations are checked against them.

#include "wkam/common.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

using wkam::Vec;

constexpr double kSqrt2 = 1.4142135623730951;

inline Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

/// Value function of the unit-disk battery (kinetic 1/2 |v|^2 + 1, zero data).
inline double disk_u(const Vec& x) { return kSqrt2 * (1.0 - x.norm()); }

/// Value function of the [-1,1]^2 battery.
inline double square_u(const Vec& x) {
  return kSqrt2 * (1.0 - std::max(std::abs(x[0]), std::abs(x[1])));
}

/// Value function of the [0,2]x[0,1] battery.
inline double rect_u(const Vec& x) {
  double d = std::min(std::min(x[0], 2.0 - x[0]), std::min(x[1], 1.0 - x[1]));
  return kSqrt2 * d;
}

/// Unconstrained least action of 1/2 |v|^2 + 1 between points in time t.
inline double quad_action(const Vec& x, const Vec& y, double t) {
  return (x - y).squaredNorm() / (2.0 * t) + t;
}

/// inf_t of quad_action: the kinetic-plus-constant potential.
inline double quad_potential_of_length(double len) { return kSqrt2 * len; }
inline double quad_potential(const Vec& x, const Vec& y) {
  return quad_potential_of_length((x - y).norm());
}
inline double quad_optimal_time(double len) { return len / kSqrt2; }

/// Geodesic length in the L-shaped domain [0,2]^2 minus (1,2]x(1,2] for
/// endpoints on opposite legs of the notch (visibility through (1,1)).
inline double lshape_corner_length(const Vec& a, const Vec& b) {
  Vec corner = v2(1.0, 1.0);
  return (a - corner).norm() + (corner - b).norm();
}

/// Least constrained action through the reflex corner: optimal time split
/// over the two legs by brute-force 1-D search.
inline double lshape_corner_action(const Vec& a, const Vec& b, double t) {
  Vec corner = v2(1.0, 1.0);
  double la = (a - corner).norm(), lb = (corner - b).norm();
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 4096; ++k) {
    double tau = t * k / 4096;
    best = std::min(best, la * la / (2.0 * tau) + lb * lb / (2.0 * (t - tau)) + t);
  }
  return best;
}

/// Distance from p to the segment [a, b].
inline double dist_to_segment(const Vec& p, const Vec& a, const Vec& b) {
  Vec d = b - a;
  double len2 = d.squaredNorm();
  double s = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * d)).norm();
}

/// Medial axis of the square [-1,1]^2: the two diagonals.
inline double square_axis_distance(const Vec& p) {
  return std::min(dist_to_segment(p, v2(-1, -1), v2(1, 1)),
                  dist_to_segment(p, v2(-1, 1), v2(1, -1)));
}

/// Medial axis of the rectangle [0,2]x[0,1]: center segment plus the four
/// corner bisectors.
inline double rect_axis_distance(const Vec& p) {
  double d = dist_to_segment(p, v2(0.5, 0.5), v2(1.5, 0.5));
  d = std::min(d, dist_to_segment(p, v2(0, 0), v2(0.5, 0.5)));
  d = std::min(d, dist_to_segment(p, v2(0, 1), v2(0.5, 0.5)));
  d = std::min(d, dist_to_segment(p, v2(2, 0), v2(1.5, 0.5)));
  d = std::min(d, dist_to_segment(p, v2(2, 1), v2(1.5, 0.5)));
  return d;
}

/// Sample the medial axis of the square at resolution ds.
inline std::vector<Vec> square_axis_points(double ds) {
  std::vector<Vec> pts;
  for (double s = -1.0; s <= 1.0 + 1e-12; s += ds) {
    pts.push_back(v2(s, s));
    pts.push_back(v2(s, -s));
  }
  return pts;
}

inline std::vector<Vec> rect_axis_points(double ds) {
  std::vector<Vec> pts;
  for (double s = 0.5; s <= 1.5 + 1e-12; s += ds) pts.push_back(v2(s, 0.5));
  for (double s = 0.0; s <= 0.5 + 1e-12; s += ds) {
    pts.push_back(v2(s, s));
    pts.push_back(v2(s, 1.0 - s));
    pts.push_back(v2(2.0 - s, s));
    pts.push_back(v2(2.0 - s, 1.0 - s));
  }
  return pts;
}

/// Brute-force maximizer of f over the closed ball B(center, radius) on a
/// grid of the given resolution, refined once at 10x around the best cell.
template <class F>
Vec grid_argmax_ball(F&& f, const Vec& center, double radius, double resolution) {
  auto scan = [&](const Vec& c0, double rad, double res) {
    Vec best = c0;
    double fbest = -std::numeric_limits<double>::infinity();
    int n = std::max(2, static_cast<int>(std::ceil(2.0 * rad / res)));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        Vec p = v2(c0[0] - rad + 2.0 * rad * i / n, c0[1] - rad + 2.0 * rad * j / n);
        if ((p - center).norm() > radius) continue;
        double fp = f(p);
        if (fp > fbest) {
          fbest = fp;
          best = p;
        }
      }
    return best;
  };
  Vec coarse = scan(center, radius, resolution);
  return scan(coarse, 3.0 * resolution, resolution / 10.0);
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
  }
  Vec in_disk(double radius, double margin = 0.0) {
    for (;;) {
      Vec p = v2(uniform(-radius, radius), uniform(-radius, radius));
      if (p.norm() <= radius - margin) return p;
    }
  }
  Vec in_box(const Vec& lo, const Vec& hi, double margin = 0.0) {
    return v2(uniform(lo[0] + margin, hi[0] - margin), uniform(lo[1] + margin, hi[1] - margin));
  }
};

}  // namespace oracle
