#include "pickdrop/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pickdrop {

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

Vec2 Pose2D::to_world(const Vec2& local) const {
  const double c = std::cos(heading), s = std::sin(heading);
  return {x + c * local.x() - s * local.y(), y + s * local.x() + c * local.y()};
}

Vec2 Pose2D::to_local(const Vec2& world) const {
  const double c = std::cos(heading), s = std::sin(heading);
  const double dx = world.x() - x, dy = world.y() - y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2D Pose2D::compose(const Pose2D& local) const {
  const Vec2 p = to_world(local.position());
  return make(p.x(), p.y(), heading + local.heading);
}

Pose3D Pose3D::look_at(const Vec3& eye, const Vec3& target) {
  Vec3 x = (target - eye).normalized();
  Vec3 y = Vec3::UnitZ().cross(x);
  if (y.norm() < 1e-9) y = Vec3::UnitY();
  y.normalize();
  const Vec3 z = x.cross(y);
  Pose3D pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = eye;
  return pose;
}

double polygon_area(const Polygon& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * area;
}

Vec2 polygon_centroid(const Polygon& poly) {
  const double area = polygon_area(poly);
  if (std::abs(area) < 1e-15) {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : poly) mean += p;
    return poly.empty() ? mean : Vec2(mean / double(poly.size()));
  }
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double cross = a.x() * b.y() - b.x() * a.y();
    c += (a + b) * cross;
  }
  return c / (6.0 * area);
}

Polygon convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  Polygon hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool point_in_convex_polygon(const Polygon& poly, const Vec2& p) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) -
                         (b.y() - a.y()) * (p.x() - a.x());
    if (cross < 0.0) return false;
  }
  return true;
}

double min_caliper_width(const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const Vec2 edge = b - a;
    const double len = edge.norm();
    if (len < 1e-15) continue;
    double widest = 0.0;
    for (const auto& p : poly) {
      const Vec2 d = p - a;
      widest = std::max(widest, std::abs(edge.x() * d.y() - edge.y() * d.x()) / len);
    }
    best = std::min(best, widest);
  }
  return best;
}

double min_area_rectangle_heading(const Polygon& hull) {
  double best_area = std::numeric_limits<double>::infinity(), best_heading = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = edge.norm();
    if (len < 1e-15) continue;
    const Vec2 u = edge / len, v(-u.y(), u.x());
    double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
    for (const auto& p : hull) {
      const Vec2 d = p - hull[i];
      u0 = std::min(u0, d.dot(u));
      u1 = std::max(u1, d.dot(u));
      v0 = std::min(v0, d.dot(v));
      v1 = std::max(v1, d.dot(v));
    }
    const double area = (u1 - u0) * (v1 - v0);
    if (area < best_area - 1e-15) {
      best_area = area;
      best_heading = std::atan2(u.y(), u.x());
    }
  }
  return best_heading;
}

Polygon transform_polygon(const Polygon& poly, const Pose2D& pose) {
  Polygon out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back(pose.to_world(p));
  return out;
}

Polygon rectangle(double length_x, double width_y) {
  const double hx = 0.5 * length_x, hy = 0.5 * width_y;
  return {{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
}

namespace {

void project(const Polygon& poly, const Vec2& axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : poly) {
    const double d = axis.dot(p);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

bool separated_along_edges(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2 e = a[(i + 1) % a.size()] - a[i];
    const Vec2 axis(e.y(), -e.x());
    double alo, ahi, blo, bhi;
    project(a, axis, alo, ahi);
    project(b, axis, blo, bhi);
    if (ahi <= blo || bhi <= alo) return true;
  }
  return false;
}

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

}  // namespace

bool convex_polygons_overlap(const Polygon& a, const Polygon& b) {
  if (a.size() < 3 || b.size() < 3) return false;
  return !separated_along_edges(a, b) && !separated_along_edges(b, a);
}

double distance_to_polygon(const Polygon& poly, const Vec2& p) {
  if (point_in_convex_polygon(poly, p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i)
    best = std::min(best, segment_distance(poly[i], poly[(i + 1) % poly.size()], p));
  return best;
}

ConvexSolid ConvexSolid::prism(const Polygon& footprint, double z0, double z1) {
  ConvexSolid s;
  for (const auto& p : footprint) s.vertices.emplace_back(p.x(), p.y(), z0);
  for (const auto& p : footprint) s.vertices.emplace_back(p.x(), p.y(), z1);
  s.face_normals.push_back(Vec3::UnitZ());
  s.edge_directions.push_back(Vec3::UnitZ());
  for (std::size_t i = 0; i < footprint.size(); ++i) {
    const Vec2 e = footprint[(i + 1) % footprint.size()] - footprint[i];
    if (e.norm() < 1e-15) continue;
    s.face_normals.push_back(Vec3(e.y(), -e.x(), 0.0).normalized());
    s.edge_directions.push_back(Vec3(e.x(), e.y(), 0.0).normalized());
  }
  return s;
}

ConvexSolid ConvexSolid::box(const Vec3& center, const Mat3& axes,
                             const Vec3& half_extents) {
  ConvexSolid s;
  for (int i = 0; i < 8; ++i) {
    const double sx = (i & 1) ? 1.0 : -1.0;
    const double sy = (i & 2) ? 1.0 : -1.0;
    const double sz = (i & 4) ? 1.0 : -1.0;
    s.vertices.push_back(center + axes.col(0) * sx * half_extents.x() +
                         axes.col(1) * sy * half_extents.y() +
                         axes.col(2) * sz * half_extents.z());
  }
  for (int i = 0; i < 3; ++i) {
    s.face_normals.push_back(axes.col(i));
    s.edge_directions.push_back(axes.col(i));
  }
  return s;
}

double ConvexSolid::min_z() const {
  double z = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices) z = std::min(z, v.z());
  return z;
}

namespace {

bool separated_on(const ConvexSolid& a, const ConvexSolid& b, const Vec3& axis) {
  constexpr double eps = 1e-9;
  if (axis.squaredNorm() < 1e-18) return false;
  double alo = std::numeric_limits<double>::infinity(), ahi = -alo;
  double blo = alo, bhi = -alo;
  for (const auto& v : a.vertices) {
    const double d = axis.dot(v);
    alo = std::min(alo, d);
    ahi = std::max(ahi, d);
  }
  for (const auto& v : b.vertices) {
    const double d = axis.dot(v);
    blo = std::min(blo, d);
    bhi = std::max(bhi, d);
  }
  return ahi <= blo + eps || bhi <= alo + eps;
}

}  // namespace

bool intersects(const ConvexSolid& a, const ConvexSolid& b) {
  for (const auto& n : a.face_normals)
    if (separated_on(a, b, n)) return false;
  for (const auto& n : b.face_normals)
    if (separated_on(a, b, n)) return false;
  for (const auto& ea : a.edge_directions)
    for (const auto& eb : b.edge_directions)
      if (separated_on(a, b, ea.cross(eb).normalized())) return false;
  return true;
}

bool segment_hits_prism(const Vec3& a, const Vec3& b, const Polygon& footprint,
                        double z0, double z1, double t_max) {
  const Vec3 d = b - a;
  double t_enter = 0.0, t_exit = t_max;
  auto clip = [&](double num, double den) {
    // Half-space num + t*den <= 0.
    if (std::abs(den) < 1e-15) return num <= 0.0;
    const double t = -num / den;
    if (den < 0.0)
      t_enter = std::max(t_enter, t);
    else
      t_exit = std::min(t_exit, t);
    return t_enter < t_exit;
  };
  if (!clip(z0 - a.z(), -d.z())) return false;
  if (!clip(a.z() - z1, d.z())) return false;
  for (std::size_t i = 0; i < footprint.size(); ++i) {
    const Vec2& v = footprint[i];
    const Vec2 e = footprint[(i + 1) % footprint.size()] - v;
    const Vec2 n(e.y(), -e.x());
    const double num = n.x() * (a.x() - v.x()) + n.y() * (a.y() - v.y());
    const double den = n.x() * d.x() + n.y() * d.y();
    if (!clip(num, den)) return false;
  }
  return t_exit - t_enter > 1e-12;
}

double polygon_distance(const Polygon& a, const Polygon& b) {
  if (convex_polygons_overlap(a, b)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (const auto& v : a) d = std::min(d, distance_to_polygon(b, v));
  for (const auto& v : b) d = std::min(d, distance_to_polygon(a, v));
  return d;
}

}  // namespace pickdrop
