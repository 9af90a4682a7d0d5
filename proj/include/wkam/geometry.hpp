#pragma once

#include "wkam/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace wkam {

enum class DomainKind { Disk, Rectangle, Polygon, Implicit };

/// A point of the 1-D boundary of a planar domain. `arc` is the intrinsic
/// boundary parameter in [0, perimeter): it anchors deterministic tie-breaks
/// and 1-D refinement along the boundary.
struct BoundaryPoint {
  Vec point;
  Vec normal;      // unit outward
  double arc = 0.0;
};

/// Level-set description of a smooth domain: phi < 0 inside, phi > 0 outside,
/// boundary = zero level. The domain must be star-shaped about `center`,
/// which anchors the angular boundary parameterization.
struct ImplicitSurface {
  std::string name;
  std::function<double(const Vec&)> phi;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;  // optional, may be empty
  Vec center;
};

/// Bounded domain of R^n with the geometric query surface used by the
/// variational and tracing code. Immutable after construction; all queries
/// are pure and safe to call concurrently.
///
/// Boundary arc parameterization (2-D kinds):
///   disk       counterclockwise from angle 0, arc = radius * angle
///   rectangle  counterclockwise from the top-left corner (min x, max y)
///   polygon    along the given CCW vertex order from vertex 0
///   implicit   by angle about `center`, scaled by the perimeter estimate
class Domain {
 public:
  Domain() = default;  // placeholder; build real domains through the factories

  static Domain disk(const Vec& center, double radius);
  static Domain rectangle(const Vec& lo, const Vec& hi);
  static Domain polygon(std::vector<Vec> ccw_vertices);
  static Domain implicit(ImplicitSurface surface, const Vec& bbox_lo, const Vec& bbox_hi);

  DomainKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  const Vec& bbox_lo() const { return bbox_lo_; }
  const Vec& bbox_hi() const { return bbox_hi_; }
  double diameter() const { return (bbox_hi_ - bbox_lo_).norm(); }
  double geom_tol() const { return tau_geom_; }
  double perimeter() const;
  bool smooth_boundary() const { return kind_ == DomainKind::Disk || kind_ == DomainKind::Implicit; }

  /// Negative inside, positive outside; |value| is the Euclidean distance to
  /// the boundary within geom_tol().
  double signed_distance(const Vec& x) const;

  /// Cheap membership test (sign only; no distance computation for implicit kinds).
  bool contains(const Vec& x, double tol) const;

  /// Distance to the boundary for points of the closure (>= 0, clamped).
  double boundary_distance(const Vec& x) const;

  /// Closest boundary point; ties on the medial axis resolved toward the
  /// smallest arc coordinate.
  BoundaryPoint project_to_boundary(const Vec& x) const;

  /// Clamp x to the closure: identity inside, boundary projection outside.
  /// Hot path of the trajectory optimizer.
  void clamp_inside(Vec& x) const;

  /// Unit-speed polyline inside the closure from x to y, length <= C|x-y|.
  /// Straight segment for convex kinds, visibility-graph shortest path for
  /// polygons. Throws PathNotFound when no connection exists.
  std::pair<Path, double> quasiconvex_path(const Vec& x, const Vec& y) const;

  /// Exterior-sphere radius valid at sampled boundary points, or nullopt for
  /// domains with a reflex feature.
  std::optional<double> exterior_sphere_radius() const;

  /// m >= 3 points covering the boundary, deterministic, max gap bounded by
  /// 2 * perimeter / m.
  std::vector<BoundaryPoint> boundary_sample(int m) const;

  BoundaryPoint boundary_point_at_arc(double arc) const;

  /// Quasiconvexity constant: the user hint when given, 1 for convex kinds,
  /// otherwise estimated from visibility-path length ratios over sampled pairs.
  double quasiconvexity_constant() const { return quasiconvexity_; }
  void set_quasiconvexity_hint(double c);

 private:
  void finalize();

  // polygon helpers (rectangles reuse the polygon boundary machinery)
  bool polygon_contains(const Vec& x) const;
  bool segment_inside(const Vec& a, const Vec& b) const;
  double estimate_polygon_quasiconvexity() const;
  std::vector<Vec> visibility_shortest(const Vec& x, const Vec& y) const;

  // implicit helpers
  Vec ray_to_boundary(double theta) const;
  double implicit_distance_estimate(const Vec& x) const;

  DomainKind kind_ = DomainKind::Disk;
  int dim_ = 2;
  double tau_geom_ = 1e-9;
  Vec bbox_lo_, bbox_hi_;

  // disk
  Vec center_;
  double radius_ = 0.0;

  // polygon / rectangle
  std::vector<Vec> verts_;           // CCW
  std::vector<double> arc_offsets_;  // cumulative arc at each vertex
  double perimeter_ = 0.0;
  bool convex_ = true;

  // implicit
  ImplicitSurface surf_;
  double ray_max_ = 0.0;
  std::vector<Vec> btable_;  // cached boundary points at uniform angles

  double quasiconvexity_ = 1.0;
  bool quasiconvexity_is_hint_ = false;
};

/// Named level-set catalog used by scenario configs.
ImplicitSurface make_ellipse(const Vec& center, double semi_x, double semi_y);
ImplicitSurface make_smoothed_square(const Vec& center, double half_width, int power);

}  // namespace wkam
