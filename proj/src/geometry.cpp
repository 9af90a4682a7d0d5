#include "wkam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace wkam {
namespace {

constexpr double kPi = 3.14159265358979323846;

double cross2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

double orient(const Vec& a, const Vec& b, const Vec& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

/// Closest point of segment [u, v] to x, with the segment parameter.
std::pair<Vec, double> segment_foot(const Vec& u, const Vec& v, const Vec& x) {
  Vec d = v - u;
  double len2 = d.squaredNorm();
  double s = len2 > 0.0 ? std::clamp((x - u).dot(d) / len2, 0.0, 1.0) : 0.0;
  return {u + s * d, s};
}

bool proper_cross(const Vec& a, const Vec& b, const Vec& u, const Vec& v, double eps) {
  double o1 = orient(a, b, u), o2 = orient(a, b, v);
  double o3 = orient(u, v, a), o4 = orient(u, v, b);
  return ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) &&
         ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps));
}

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

Domain Domain::disk(const Vec& center, double radius) {
  if (radius <= 0.0) fail(Err::ConfigError, "disk radius must be positive");
  Domain d;
  d.kind_ = DomainKind::Disk;
  d.dim_ = static_cast<int>(center.size());
  d.center_ = center;
  d.radius_ = radius;
  d.bbox_lo_ = center.array() - radius;
  d.bbox_hi_ = center.array() + radius;
  d.tau_geom_ = 1e-9;
  d.finalize();
  return d;
}

Domain Domain::rectangle(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size() || ((hi - lo).array() <= 0.0).any())
    fail(Err::ConfigError, "rectangle needs lo < hi componentwise");
  Domain d;
  d.kind_ = DomainKind::Rectangle;
  d.dim_ = static_cast<int>(lo.size());
  d.bbox_lo_ = lo;
  d.bbox_hi_ = hi;
  d.tau_geom_ = 1e-9;
  if (d.dim_ == 2) {
    // CCW from the top-left corner; anchors the boundary arc coordinate.
    d.verts_ = {vec2(lo[0], hi[1]), vec2(lo[0], lo[1]), vec2(hi[0], lo[1]), vec2(hi[0], hi[1])};
  }
  d.finalize();
  return d;
}

Domain Domain::polygon(std::vector<Vec> ccw_vertices) {
  if (ccw_vertices.size() < 3) fail(Err::ConfigError, "polygon needs at least 3 vertices");
  for (const auto& v : ccw_vertices)
    if (v.size() != 2) fail(Err::ConfigError, "polygon domains are 2-D");
  Domain d;
  d.kind_ = DomainKind::Polygon;
  d.dim_ = 2;
  d.verts_ = std::move(ccw_vertices);
  double area2 = 0.0;
  for (std::size_t i = 0; i < d.verts_.size(); ++i) {
    const Vec& a = d.verts_[i];
    const Vec& b = d.verts_[(i + 1) % d.verts_.size()];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  if (area2 <= 0.0) fail(Err::ConfigError, "polygon vertices must be counterclockwise");
  d.bbox_lo_ = d.verts_[0];
  d.bbox_hi_ = d.verts_[0];
  for (const auto& v : d.verts_) {
    d.bbox_lo_ = d.bbox_lo_.cwiseMin(v);
    d.bbox_hi_ = d.bbox_hi_.cwiseMax(v);
  }
  d.tau_geom_ = 1e-9;
  d.finalize();
  return d;
}

Domain Domain::implicit(ImplicitSurface surface, const Vec& bbox_lo, const Vec& bbox_hi) {
  if (surface.center.size() != 2) fail(Err::ConfigError, "implicit domains are 2-D");
  Domain d;
  d.kind_ = DomainKind::Implicit;
  d.dim_ = 2;
  d.surf_ = std::move(surface);
  d.bbox_lo_ = bbox_lo;
  d.bbox_hi_ = bbox_hi;
  d.tau_geom_ = 1e-7;
  if (d.surf_.phi(d.surf_.center) >= 0.0)
    fail(Err::ConfigError, "implicit center must lie inside the domain");
  d.finalize();
  return d;
}

void Domain::finalize() {
  if (!verts_.empty()) {
    arc_offsets_.assign(verts_.size() + 1, 0.0);
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const Vec& a = verts_[i];
      const Vec& b = verts_[(i + 1) % verts_.size()];
      arc_offsets_[i + 1] = arc_offsets_[i] + (b - a).norm();
    }
    perimeter_ = arc_offsets_.back();
    convex_ = true;
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec e0 = verts_[(i + 1) % n] - verts_[i];
      Vec e1 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
      if (cross2(e0, e1) < -1e-12 * diameter() * diameter()) convex_ = false;
    }
  }
  if (kind_ == DomainKind::Implicit) {
    double rmax = 0.0;
    Vec corner(2);
    for (int cx = 0; cx < 2; ++cx)
      for (int cy = 0; cy < 2; ++cy) {
        corner << (cx ? bbox_hi_[0] : bbox_lo_[0]), (cy ? bbox_hi_[1] : bbox_lo_[1]);
        rmax = std::max(rmax, (corner - surf_.center).norm());
      }
    ray_max_ = 1.5 * rmax;
    const int n = 512;
    btable_.reserve(n);
    for (int k = 0; k < n; ++k) btable_.push_back(ray_to_boundary(2.0 * kPi * k / n));
    perimeter_ = 0.0;
    for (int k = 0; k < n; ++k) perimeter_ += (btable_[(k + 1) % n] - btable_[k]).norm();
  }
  if (kind_ == DomainKind::Polygon && !convex_) {
    quasiconvexity_ = estimate_polygon_quasiconvexity();
  } else {
    quasiconvexity_ = 1.0;
  }
}

void Domain::set_quasiconvexity_hint(double c) {
  if (c < 1.0) fail(Err::ConfigError, "quasiconvexity constant must be >= 1");
  quasiconvexity_ = c;
  quasiconvexity_is_hint_ = true;
}

double Domain::perimeter() const {
  switch (kind_) {
    case DomainKind::Disk:
      if (dim_ != 2) fail(Err::ConfigError, "boundary parameterization requires a 2-D domain");
      return 2.0 * kPi * radius_;
    case DomainKind::Rectangle:
    case DomainKind::Polygon:
      if (dim_ != 2) fail(Err::ConfigError, "boundary parameterization requires a 2-D domain");
      return perimeter_;
    case DomainKind::Implicit:
      return perimeter_;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// distance queries
// ---------------------------------------------------------------------------

double Domain::signed_distance(const Vec& x) const {
  switch (kind_) {
    case DomainKind::Disk:
      return (x - center_).norm() - radius_;
    case DomainKind::Rectangle: {
      Vec mid = 0.5 * (bbox_lo_ + bbox_hi_);
      Vec half = 0.5 * (bbox_hi_ - bbox_lo_);
      Vec q = (x - mid).cwiseAbs() - half;
      double outside = q.cwiseMax(0.0).norm();
      double inside = std::min(q.maxCoeff(), 0.0);
      return outside + inside;
    }
    case DomainKind::Polygon: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < verts_.size(); ++i) {
        auto [foot, s] = segment_foot(verts_[i], verts_[(i + 1) % verts_.size()], x);
        best = std::min(best, (x - foot).norm());
      }
      return polygon_contains(x) ? -best : best;
    }
    case DomainKind::Implicit: {
      BoundaryPoint bp = project_to_boundary(x);
      double d = (x - bp.point).norm();
      return surf_.phi(x) < 0.0 ? -d : d;
    }
  }
  return 0.0;
}

double Domain::implicit_distance_estimate(const Vec& x) const {
  double p = surf_.phi(x);
  double g = surf_.grad(x).norm();
  return g > 1e-14 ? p / g : p;
}

bool Domain::contains(const Vec& x, double tol) const {
  switch (kind_) {
    case DomainKind::Disk:
      return (x - center_).norm() - radius_ <= tol;
    case DomainKind::Rectangle:
      return signed_distance(x) <= tol;
    case DomainKind::Polygon:
      return signed_distance(x) <= tol;
    case DomainKind::Implicit:
      return implicit_distance_estimate(x) <= tol;
  }
  return false;
}

double Domain::boundary_distance(const Vec& x) const { return std::max(0.0, -signed_distance(x)); }

bool Domain::polygon_contains(const Vec& x) const {
  // Even-odd ray cast along +x. Points within geom_tol of the boundary are
  // resolved by the caller through the distance term.
  bool inside = false;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = verts_[i];
    const Vec& b = verts_[(i + 1) % n];
    if ((a[1] > x[1]) != (b[1] > x[1])) {
      double t = (x[1] - a[1]) / (b[1] - a[1]);
      double xi = a[0] + t * (b[0] - a[0]);
      if (x[0] < xi) inside = !inside;
    }
  }
  return inside;
}

// ---------------------------------------------------------------------------
// projection
// ---------------------------------------------------------------------------

BoundaryPoint Domain::project_to_boundary(const Vec& x) const {
  switch (kind_) {
    case DomainKind::Disk: {
      Vec r = x - center_;
      double len = r.norm();
      Vec dir;
      if (len < 1e-14) {
        dir = Vec::Zero(dim_);
        dir[0] = 1.0;  // center projects to arc 0
      } else {
        dir = r / len;
      }
      BoundaryPoint bp;
      bp.point = center_ + radius_ * dir;
      bp.normal = dir;
      bp.arc = dim_ == 2 ? radius_ * std::fmod(std::atan2(dir[1], dir[0]) + 2.0 * kPi, 2.0 * kPi)
                         : 0.0;
      return bp;
    }
    case DomainKind::Rectangle:
      if (dim_ != 2) {
        // componentwise closest point; no arc coordinate beyond 2-D
        Vec p = x.cwiseMax(bbox_lo_).cwiseMin(bbox_hi_);
        if ((p - x).norm() < 1e-15) {  // interior: push along the tightest axis
          int axis = 0;
          double slack = std::numeric_limits<double>::infinity();
          double side = 0.0;
          for (int i = 0; i < dim_; ++i) {
            double lo_gap = x[i] - bbox_lo_[i], hi_gap = bbox_hi_[i] - x[i];
            if (lo_gap < slack) { slack = lo_gap; axis = i; side = -1.0; }
            if (hi_gap < slack) { slack = hi_gap; axis = i; side = +1.0; }
          }
          p[axis] = side > 0 ? bbox_hi_[axis] : bbox_lo_[axis];
          BoundaryPoint bp;
          bp.point = p;
          bp.normal = Vec::Zero(dim_);
          bp.normal[axis] = side;
          bp.arc = 0.0;
          return bp;
        }
        BoundaryPoint bp;
        bp.point = p;
        Vec d = x - p;
        bp.normal = d.norm() > 0 ? Vec(d / d.norm()) : Vec::Zero(dim_);
        bp.arc = 0.0;
        return bp;
      }
      [[fallthrough]];
    case DomainKind::Polygon: {
      const std::size_t n = verts_.size();
      double best = std::numeric_limits<double>::infinity();
      double best_arc = 0.0;
      const double tie = tau_geom_ * (1.0 + diameter());
      for (std::size_t i = 0; i < n; ++i) {
        auto [foot, s] = segment_foot(verts_[i], verts_[(i + 1) % n], x);
        double d = (x - foot).norm();
        double arc = arc_offsets_[i] + s * (arc_offsets_[i + 1] - arc_offsets_[i]);
        if (d < best - tie || (d <= best + tie && arc < best_arc)) {
          best = std::min(best, d);
          best_arc = arc;
        }
      }
      return boundary_point_at_arc(best_arc);
    }
    case DomainKind::Implicit: {
      const int k0 = static_cast<int>(btable_.size());
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int k = 0; k < k0; ++k) {
        double d = (btable_[k] - x).norm();
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      double lo = 2.0 * kPi * (best_k - 1) / k0;
      double hi = 2.0 * kPi * (best_k + 1) / k0;
      auto [theta, dist] = golden_min(
          [&](double t) { return (ray_to_boundary(t) - x).norm(); }, lo, hi, 1e-12, 120);
      double arc = std::fmod(theta + 2.0 * kPi, 2.0 * kPi) / (2.0 * kPi) * perimeter_;
      return boundary_point_at_arc(arc);
    }
  }
  fail(Err::ConfigError, "unreachable domain kind");
}

void Domain::clamp_inside(Vec& x) const {
  switch (kind_) {
    case DomainKind::Disk: {
      Vec r = x - center_;
      double len = r.norm();
      if (len > radius_) x = center_ + (radius_ / len) * r;
      return;
    }
    case DomainKind::Rectangle:
      x = x.cwiseMax(bbox_lo_).cwiseMin(bbox_hi_);
      return;
    case DomainKind::Polygon: {
      if (signed_distance(x) <= 0.0) return;
      x = project_to_boundary(x).point;
      return;
    }
    case DomainKind::Implicit: {
      if (surf_.phi(x) <= 0.0) return;
      // Newton descent on phi along its gradient lands on a nearby boundary
      // point; adequate as a feasibility restoration for small violations.
      for (int it = 0; it < 30; ++it) {
        double p = surf_.phi(x);
        if (p <= 0.0) return;
        Vec g = surf_.grad(x);
        double g2 = g.squaredNorm();
        if (g2 < 1e-18) break;
        x -= (p / g2) * g;
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// quasiconvex paths
// ---------------------------------------------------------------------------

std::pair<Path, double> Domain::quasiconvex_path(const Vec& x, const Vec& y) const {
  double sep = (x - y).norm();
  if (sep < 1e-15) {
    Path p;
    p.times = {0.0};
    p.nodes = {x};
    return {p, 0.0};
  }
  auto straight = [&]() {
    Path p;
    p.times = {0.0, sep};
    p.nodes = {x, y};
    return std::make_pair(p, sep);
  };
  if (kind_ != DomainKind::Polygon || convex_) return straight();
  if (segment_inside(x, y)) return straight();

  std::vector<Vec> pts = visibility_shortest(x, y);
  if (pts.empty()) fail(Err::PathNotFound, "no visibility path between the endpoints");
  Path p;
  p.nodes = pts;
  p.times.resize(pts.size());
  p.times[0] = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    p.times[i] = p.times[i - 1] + (pts[i] - pts[i - 1]).norm();
  return {p, p.times.back()};
}

bool Domain::segment_inside(const Vec& a, const Vec& b) const {
  const double scale = diameter();
  const double eps = 1e-12 * scale * scale;
  const std::size_t n = verts_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (proper_cross(a, b, verts_[i], verts_[(i + 1) % n], eps)) return false;
  }
  const int k = 32;
  const double tol = 1e-9 * (1.0 + scale);
  for (int j = 1; j < k; ++j) {
    Vec p = a + (static_cast<double>(j) / k) * (b - a);
    if (signed_distance(p) > tol) return false;
  }
  return true;
}

std::vector<Vec> Domain::visibility_shortest(const Vec& x, const Vec& y) const {
  std::vector<Vec> nodes;
  nodes.push_back(x);
  nodes.push_back(y);
  for (const auto& v : verts_) nodes.push_back(v);
  const std::size_t n = nodes.size();

  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((nodes[i] - nodes[j]).norm() < 1e-14) continue;
      if (segment_inside(nodes[i], nodes[j])) {
        double w = (nodes[i] - nodes[j]).norm();
        adj[i].push_back({j, w});
        adj[j].push_back({i, w});
      }
    }

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(n, n);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[0] = 0.0;
  heap.push({0.0, 0});
  while (!heap.empty()) {
    auto [d, i] = heap.top();
    heap.pop();
    if (d > dist[i] + 1e-15) continue;
    for (auto [j, w] : adj[i]) {
      if (dist[i] + w < dist[j] - 1e-15) {
        dist[j] = dist[i] + w;
        prev[j] = i;
        heap.push({dist[j], j});
      }
    }
  }
  if (!std::isfinite(dist[1])) return {};
  std::vector<Vec> out;
  for (std::size_t i = 1; i != n && i != 0; i = prev[i]) {
    out.push_back(nodes[i]);
    if (prev[i] == 0) {
      out.push_back(nodes[0]);
      break;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

double Domain::estimate_polygon_quasiconvexity() const {
  std::vector<Vec> samples = verts_;
  const int m = 24;
  for (int k = 0; k < m; ++k) {
    double arc = perimeter_ * k / m + 0.31 * perimeter_ / m;
    // local copy of boundary_point_at_arc walk (members final at this point)
    double a = std::fmod(arc, perimeter_);
    std::size_t i = 0;
    while (i + 1 < arc_offsets_.size() && arc_offsets_[i + 1] < a) ++i;
    double s = (a - arc_offsets_[i]) / std::max(arc_offsets_[i + 1] - arc_offsets_[i], 1e-300);
    samples.push_back(verts_[i] + s * (verts_[(i + 1) % verts_.size()] - verts_[i]));
  }
  double worst = 1.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double sep = (samples[i] - samples[j]).norm();
      if (sep < 1e-9) continue;
      if (segment_inside(samples[i], samples[j])) continue;
      std::vector<Vec> path = visibility_shortest(samples[i], samples[j]);
      if (path.empty()) continue;
      double len = 0.0;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) len += (path[k + 1] - path[k]).norm();
      worst = std::max(worst, len / sep);
    }
  return 1.25 * worst;  // safety factor: the ratio is estimated from samples
}

// ---------------------------------------------------------------------------
// exterior sphere condition
// ---------------------------------------------------------------------------

std::optional<double> Domain::exterior_sphere_radius() const {
  if ((kind_ == DomainKind::Polygon || (kind_ == DomainKind::Rectangle && dim_ == 2)) && !convex_)
    return std::nullopt;
  if (kind_ == DomainKind::Disk) return radius_;

  const int m = 64;
  const double cap = 0.5 * diameter();
  const double floor_rho = 1e-3 * diameter();
  double result = cap;
  // For implicit kinds the exterior distance is taken against the cached
  // boundary table; the chord resolution enters the slack.
  double slack0 = 1e-6 + 10.0 * tau_geom_;
  if (kind_ == DomainKind::Implicit) slack0 += 2.0 * perimeter_ / btable_.size();
  auto feasible = [&](const BoundaryPoint& bp, double rho) {
    Vec c = bp.point + rho * bp.normal;
    double d;
    if (kind_ == DomainKind::Implicit) {
      d = std::numeric_limits<double>::infinity();
      for (const auto& z : btable_) d = std::min(d, (z - c).norm());
    } else {
      d = signed_distance(c);
    }
    return d >= rho - slack0 * (1.0 + rho);
  };
  for (const auto& bp : boundary_sample(m)) {
    double rho;
    if (feasible(bp, cap)) {
      rho = cap;
    } else {
      double lo = 0.0, hi = cap;
      for (int it = 0; it < 45; ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible(bp, mid) ? lo : hi) = mid;
      }
      rho = lo;
    }
    if (rho < floor_rho) return std::nullopt;
    result = std::min(result, rho);
  }
  return result;
}

// ---------------------------------------------------------------------------
// boundary parameterization
// ---------------------------------------------------------------------------

std::vector<BoundaryPoint> Domain::boundary_sample(int m) const {
  if (m < 3) fail(Err::ConfigError, "boundary_sample needs m >= 3");
  double per = perimeter();
  std::vector<BoundaryPoint> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k) out.push_back(boundary_point_at_arc(per * k / m));
  return out;
}

BoundaryPoint Domain::boundary_point_at_arc(double arc) const {
  double per = perimeter();
  double a = std::fmod(arc, per);
  if (a < 0.0) a += per;
  switch (kind_) {
    case DomainKind::Disk: {
      if (dim_ != 2) fail(Err::ConfigError, "boundary parameterization requires a 2-D domain");
      double theta = a / radius_;
      BoundaryPoint bp;
      bp.normal = vec2(std::cos(theta), std::sin(theta));
      bp.point = center_ + radius_ * bp.normal;
      bp.arc = a;
      return bp;
    }
    case DomainKind::Rectangle:
    case DomainKind::Polygon: {
      if (dim_ != 2) fail(Err::ConfigError, "boundary parameterization requires a 2-D domain");
      const std::size_t n = verts_.size();
      std::size_t i = 0;
      while (i + 1 < arc_offsets_.size() && arc_offsets_[i + 1] < a - 1e-15) ++i;
      if (i >= n) i = n - 1;
      const Vec& u = verts_[i];
      const Vec& v = verts_[(i + 1) % n];
      double seg = arc_offsets_[i + 1] - arc_offsets_[i];
      double s = seg > 0.0 ? (a - arc_offsets_[i]) / seg : 0.0;
      BoundaryPoint bp;
      bp.point = u + s * (v - u);
      Vec d = (v - u) / std::max(seg, 1e-300);
      Vec edge_normal = vec2(d[1], -d[0]);  // outward for CCW
      const double vtx_tol = 1e-12 * (1.0 + perimeter_);
      if (s * seg < vtx_tol || (1.0 - s) * seg < vtx_tol) {
        // vertex: average the two adjacent edge normals
        std::size_t iv = (s * seg < vtx_tol) ? i : (i + 1) % n;
        const Vec& p0 = verts_[(iv + n - 1) % n];
        const Vec& p1 = verts_[iv];
        const Vec& p2 = verts_[(iv + 1) % n];
        Vec d0 = (p1 - p0).normalized(), d1 = (p2 - p1).normalized();
        Vec navg = vec2(d0[1], -d0[0]) + vec2(d1[1], -d1[0]);
        bp.normal = navg.norm() > 1e-12 ? Vec(navg.normalized()) : edge_normal;
        bp.point = p1;
      } else {
        bp.normal = edge_normal;
      }
      bp.arc = a;
      return bp;
    }
    case DomainKind::Implicit: {
      double theta = 2.0 * kPi * a / perimeter_;
      BoundaryPoint bp;
      bp.point = ray_to_boundary(theta);
      Vec g = surf_.grad(bp.point);
      bp.normal = g / g.norm();
      bp.arc = a;
      return bp;
    }
  }
  fail(Err::ConfigError, "unreachable domain kind");
}

Vec Domain::ray_to_boundary(double theta) const {
  Vec dir = vec2(std::cos(theta), std::sin(theta));
  double lo = 0.0, hi = ray_max_;
  if (surf_.phi(surf_.center + hi * dir) <= 0.0)
    fail(Err::ConfigError, "implicit surface not bounded by the ray cap");
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (surf_.phi(surf_.center + mid * dir) < 0.0 ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {  // Newton polish along the ray
    Vec p = surf_.center + r * dir;
    double f = surf_.phi(p);
    double df = surf_.grad(p).dot(dir);
    if (std::abs(df) < 1e-14) break;
    r -= f / df;
  }
  return surf_.center + r * dir;
}

// ---------------------------------------------------------------------------
// level-set catalog
// ---------------------------------------------------------------------------

ImplicitSurface make_ellipse(const Vec& center, double semi_x, double semi_y) {
  if (semi_x <= 0 || semi_y <= 0) fail(Err::ConfigError, "ellipse semi-axes must be positive");
  ImplicitSurface s;
  s.name = "ellipse";
  s.center = center;
  double ax = semi_x, ay = semi_y;
  Vec c = center;
  s.phi = [c, ax, ay](const Vec& x) {
    double u = (x[0] - c[0]) / ax, v = (x[1] - c[1]) / ay;
    return u * u + v * v - 1.0;
  };
  s.grad = [c, ax, ay](const Vec& x) {
    Vec g(2);
    g << 2.0 * (x[0] - c[0]) / (ax * ax), 2.0 * (x[1] - c[1]) / (ay * ay);
    return g;
  };
  s.hess = [ax, ay](const Vec&) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = 2.0 / (ax * ax);
    h(1, 1) = 2.0 / (ay * ay);
    return h;
  };
  return s;
}

ImplicitSurface make_smoothed_square(const Vec& center, double half_width, int power) {
  if (half_width <= 0) fail(Err::ConfigError, "smoothed-square half width must be positive");
  if (power < 4 || power % 2 != 0) fail(Err::ConfigError, "smoothed-square power must be even, >= 4");
  ImplicitSurface s;
  s.name = "smoothed-square";
  s.center = center;
  double w = half_width;
  int p = power;
  Vec c = center;
  s.phi = [c, w, p](const Vec& x) {
    return std::pow((x[0] - c[0]) / w, p) + std::pow((x[1] - c[1]) / w, p) - 1.0;
  };
  s.grad = [c, w, p](const Vec& x) {
    Vec g(2);
    g << p * std::pow((x[0] - c[0]) / w, p - 1) / w, p * std::pow((x[1] - c[1]) / w, p - 1) / w;
    return g;
  };
  s.hess = [c, w, p](const Vec& x) {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = p * (p - 1) * std::pow((x[0] - c[0]) / w, p - 2) / (w * w);
    h(1, 1) = p * (p - 1) * std::pow((x[1] - c[1]) / w, p - 2) / (w * w);
    return h;
  };
  return s;
}

}  // namespace wkam
