#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

namespace pickdrop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Convex polygons are stored counter-clockwise.
using Polygon = std::vector<Vec2>;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  static Pose2D make(double x, double y, double heading) {
    return Pose2D{x, y, normalize_angle(heading)};
  }

  Vec2 position() const { return {x, y}; }
  Vec2 to_world(const Vec2& local) const;
  Vec2 to_local(const Vec2& world) const;
  /// Composes this pose with a pose expressed in its local frame.
  Pose2D compose(const Pose2D& local) const;

  bool operator==(const Pose2D&) const = default;
};

/// Rigid 3D transform. Columns of `rotation` are the frame axes expressed in
/// the parent frame.
struct Pose3D {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 inverse_apply(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }

  /// Frame at `eye` whose x axis points at `target`, z roughly up.
  static Pose3D look_at(const Vec3& eye, const Vec3& target);
};

double polygon_area(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);
Polygon convex_hull(std::vector<Vec2> points);
bool point_in_convex_polygon(const Polygon& poly, const Vec2& p);
/// Minimal caliper width of a convex polygon.
double min_caliper_width(const Polygon& poly);
/// Direction (radians) of one side of the minimum-area bounding rectangle.
double min_area_rectangle_heading(const Polygon& hull);
Polygon transform_polygon(const Polygon& poly, const Pose2D& pose);
Polygon rectangle(double length_x, double width_y);
bool convex_polygons_overlap(const Polygon& a, const Polygon& b);
/// Distance from a point to a polygon boundary (0 inside).
double distance_to_polygon(const Polygon& poly, const Vec2& p);
/// Minimum distance between two convex polygons (0 when they overlap).
double polygon_distance(const Polygon& a, const Polygon& b);

/// Convex polyhedron described for separating-axis tests.
struct ConvexSolid {
  std::vector<Vec3> vertices;
  std::vector<Vec3> face_normals;
  std::vector<Vec3> edge_directions;

  /// Vertical prism over a convex footprint between z0 and z1.
  static ConvexSolid prism(const Polygon& footprint, double z0, double z1);
  /// Oriented box; columns of `axes` are its unit axes.
  static ConvexSolid box(const Vec3& center, const Mat3& axes,
                         const Vec3& half_extents);

  double min_z() const;
};

/// Separating axis test. Touching solids do not intersect.
bool intersects(const ConvexSolid& a, const ConvexSolid& b);

/// Whether the segment a->b crosses the prism before parameter `t_max`.
/// Cyrus-Beck clipping against the prism half-spaces.
bool segment_hits_prism(const Vec3& a, const Vec3& b, const Polygon& footprint,
                        double z0, double z1, double t_max);

}  // namespace pickdrop
