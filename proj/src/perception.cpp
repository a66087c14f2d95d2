#include "pickdrop/perception.hpp"

#include "spatial_hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace pickdrop {

namespace {

constexpr double kOcclusionSlack = 1e-6;

// A closed prism that occludes rays and exposes its faces.
struct Solid {
  Polygon footprint;  // robot frame, ccw
  double z0 = 0.0;
  double z1 = 0.0;
  Vec2 lo, hi;  // xy bounding box
};

struct Surfel {
  Vec3 p;
  Vec3 n;
};

Solid make_solid(Polygon footprint, double z0, double z1) {
  Solid s{std::move(footprint), z0, z1, Vec2::Constant(1e300), Vec2::Constant(-1e300)};
  for (const auto& v : s.footprint) {
    s.lo = s.lo.cwiseMin(v);
    s.hi = s.hi.cwiseMax(v);
  }
  return s;
}

struct Scene {
  std::vector<Solid> solids;
  std::vector<Surfel> surfels;
};

// Lattice of cell centers at spacing s, anchored at multiples of s.
template <typename Fn>
void lattice(double x0, double x1, double y0, double y1, double s, Fn&& fn) {
  const auto i0 = static_cast<long>(std::ceil(x0 / s - 0.5));
  const auto i1 = static_cast<long>(std::floor(x1 / s - 0.5));
  const auto j0 = static_cast<long>(std::ceil(y0 / s - 0.5));
  const auto j1 = static_cast<long>(std::floor(y1 / s - 0.5));
  for (long i = i0; i <= i1; ++i)
    for (long j = j0; j <= j1; ++j) fn(Vec2((i + 0.5) * s, (j + 0.5) * s));
}

void add_solid_surfaces(Scene& scene, const Solid& solid, double s) {
  lattice(solid.lo.x(), solid.hi.x(), solid.lo.y(), solid.hi.y(), s, [&](const Vec2& q) {
    if (point_in_convex_polygon(solid.footprint, q))
      scene.surfels.push_back({Vec3(q.x(), q.y(), solid.z1), Vec3::UnitZ()});
  });
  const double h = solid.z1 - solid.z0;
  const auto nz = std::max<long>(1, static_cast<long>(std::ceil(h / s)));
  for (std::size_t i = 0; i < solid.footprint.size(); ++i) {
    const Vec2& a = solid.footprint[i];
    const Vec2 e = solid.footprint[(i + 1) % solid.footprint.size()] - a;
    const double len = e.norm();
    if (len < 1e-12) continue;
    const Vec3 n(e.y() / len, -e.x() / len, 0.0);
    const auto nu = std::max<long>(1, static_cast<long>(std::ceil(len / s)));
    for (long u = 0; u < nu; ++u)
      for (long k = 0; k < nz; ++k) {
        const Vec2 q = a + e * ((u + 0.5) / nu);
        scene.surfels.push_back({Vec3(q.x(), q.y(), solid.z0 + h * (k + 0.5) / nz), n});
      }
  }
}

bool occluded(const Scene& scene, const Vec3& eye, const Vec3& p) {
  const Vec2 lo = eye.head<2>().cwiseMin(p.head<2>());
  const Vec2 hi = eye.head<2>().cwiseMax(p.head<2>());
  for (const auto& s : scene.solids) {
    if (s.hi.x() < lo.x() || s.lo.x() > hi.x() || s.hi.y() < lo.y() || s.lo.y() > hi.y())
      continue;
    if (segment_hits_prism(eye, p, s.footprint, s.z0, s.z1, 1.0 - kOcclusionSlack))
      return true;
  }
  return false;
}

bool visible_from(const Scene& scene, const CameraModel& cam, const Surfel& sf) {
  const Vec3& eye = cam.mount.translation;
  if ((eye - sf.p).dot(sf.n) <= 0.0) return false;
  if (!cam.sees(sf.p)) return false;
  return !occluded(scene, eye, sf.p);
}

// Bounding box of where the camera frustum meets the floor.
void ground_bbox(const CameraModel& cam, Vec2& lo, Vec2& hi) {
  const Vec3& eye = cam.mount.translation;
  lo = hi = eye.head<2>();
  const double th = std::tan(cam.horizontal_fov / 2), tv = std::tan(cam.vertical_fov / 2);
  for (double a : {-th, 0.0, th})
    for (double b : {-tv, 0.0, tv}) {
      const Vec3 d = cam.mount.rotation * Vec3(1.0, a, b).normalized();
      double t = cam.max_range;
      if (d.z() < -1e-9) t = std::min(t, -eye.z() / d.z());
      const Vec3 q = eye + d * t;
      lo = lo.cwiseMin(q.head<2>());
      hi = hi.cwiseMax(q.head<2>());
    }
}

void add_world_solids(Scene& scene, const World& world, bool floor_level, bool basket_level,
                      std::vector<std::string>* low_objects) {
  for (const auto& obj : world.objects) {
    if (obj.render_suppressed) continue;
    const bool on_floor = obj.location.kind == LocationKind::Floor;
    const bool in_basket = obj.location.kind == LocationKind::Basket;
    if (!(on_floor && floor_level) && !(in_basket && basket_level)) continue;
    const double z0 = world.support_height(obj);
    scene.solids.push_back(make_solid(world.footprint_in_robot_frame(obj), z0, z0 + obj.height));
    if (low_objects && obj.height < kLowObjectHeight) low_objects->push_back(obj.id);
  }
  if (floor_level) {
    scene.solids.push_back(make_solid(world.bin_footprint_in_robot_frame(), 0.0, world.bin.height));
    for (const auto& obs : world.obstacles)
      scene.solids.push_back(make_solid(world.obstacle_in_robot_frame(obs), 0.0, obs.height));
  }
  if (basket_level)
    for (const auto& [poly, z] : world.model.basket_walls())
      scene.solids.push_back(make_solid(poly, z.first, z.second));
}

Scene fixed_scene(const World& world, const std::array<CameraModel, 2>& cams,
                  const RenderConfig& cfg, double spacing,
                  std::vector<std::string>* low_objects) {
  Scene scene;
  add_world_solids(scene, world, true, false, low_objects);
  for (const auto& s : scene.solids) add_solid_surfaces(scene, s, spacing);

  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  for (const auto& cam : cams) {
    Vec2 l, h;
    ground_bbox(cam, l, h);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(h);
  }
  lo = lo.cwiseMax(Vec2(cfg.floor_x_min, cfg.floor_y_min));
  hi = hi.cwiseMin(Vec2(cfg.floor_x_max, cfg.floor_y_max));
  lattice(lo.x(), hi.x(), lo.y(), hi.y(), spacing, [&](const Vec2& q) {
    for (const auto& s : scene.solids)
      if (s.z0 <= 1e-9 && point_in_convex_polygon(s.footprint, q)) return;
    scene.surfels.push_back({Vec3(q.x(), q.y(), 0.0), Vec3::UnitZ()});
  });
  return scene;
}

void apply_range_noise(Vec3& p, const Vec3& eye, const NoiseConfig& noise, Rng& rng) {
  if (noise.range_sigma_per_m <= 0.0) return;
  const Vec3 ray = p - eye;
  const double dist = ray.norm();
  std::normal_distribution<double> gauss(0.0, noise.range_sigma_per_m * dist);
  p += ray / dist * gauss(rng);
}

void add_sunlight_artifacts(PointCloud& cloud, std::span<const CameraModel> cams,
                            const NoiseConfig& noise, Rng& rng) {
  if (noise.sunlight_artifact_rate <= 0.0 || cams.empty()) return;
  std::poisson_distribution<int> count(noise.sunlight_artifact_rate);
  const int n = count(rng);
  std::uniform_int_distribution<std::size_t> pick(0, cams.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const CameraModel& cam = cams[pick(rng)];
    const double a = (unit(rng) - 0.5) * cam.horizontal_fov;
    const double b = (unit(rng) - 0.5) * cam.vertical_fov;
    const double range = 0.3 + unit(rng) * (cam.max_range - 0.3);
    const Vec3 dir = cam.mount.rotation * Vec3(1.0, std::tan(a), std::tan(b)).normalized();
    cloud.points.push_back(cam.mount.translation + dir * range);
  }
}

}  // namespace

std::size_t scan_bin_count(double angle_min, double angle_max, double increment) {
  return static_cast<std::size_t>(std::floor((angle_max - angle_min) / increment + 1e-9)) + 1;
}

bool CameraModel::sees(const Vec3& p) const {
  const Vec3 local = mount.inverse_apply(p);
  if (local.x() <= 0.0 || local.norm() > max_range) return false;
  return std::abs(std::atan2(local.y(), local.x())) <= horizontal_fov / 2 &&
         std::abs(std::atan2(local.z(), local.x())) <= vertical_fov / 2;
}

RenderConfig RenderConfig::defaults(const RobotModel& model) {
  RenderConfig cfg;
  cfg.fixed_cameras[0].mount = Pose3D::look_at({0.76, 0.45, 1.2}, {1.6, 0.25, 0.0});
  cfg.fixed_cameras[1].mount = Pose3D::look_at({0.76, -0.45, 1.2}, {1.6, -0.25, 0.0});
  cfg.hand_eye.max_range = 1.2;
  const Vec2 c = model.basket_center;
  const double floor = model.basket_floor();
  cfg.basket_views[0] = Pose3D::look_at({c.x(), c.y(), floor + 0.85}, {c.x(), c.y(), floor});
  cfg.basket_views[1] =
      Pose3D::look_at({c.x(), c.y() + 0.5, floor + 0.65}, {c.x(), c.y(), floor + 0.05});
  cfg.basket_views[2] =
      Pose3D::look_at({c.x(), c.y() - 0.5, floor + 0.65}, {c.x(), c.y(), floor + 0.05});
  return cfg;
}

double RenderConfig::spacing() const { return 1.0 / std::sqrt(samples_per_m2); }

PointCloud render_fixed_cloud(const World& world, const NoiseConfig& noise, Rng& rng,
                              const RenderConfig& cfg) {
  PointCloud cloud;
  const Scene scene = fixed_scene(world, cfg.fixed_cameras, cfg, cfg.spacing(), &cloud.low_objects);
  for (const auto& sf : scene.surfels) {
    for (const auto& cam : cfg.fixed_cameras) {
      if (!visible_from(scene, cam, sf)) continue;
      Vec3 p = sf.p;
      apply_range_noise(p, cam.mount.translation, noise, rng);
      cloud.points.push_back(p);
      break;
    }
  }
  add_sunlight_artifacts(cloud, cfg.fixed_cameras, noise, rng);
  return cloud;
}

std::array<PointCloud, 2> render_fixed_views(const World& world, const RenderConfig& cfg,
                                             double density) {
  const Scene scene =
      fixed_scene(world, cfg.fixed_cameras, cfg, 1.0 / std::sqrt(density), nullptr);
  std::array<PointCloud, 2> views;
  for (const auto& sf : scene.surfels)
    for (std::size_t c = 0; c < 2; ++c)
      if (visible_from(scene, cfg.fixed_cameras[c], sf)) views[c].points.push_back(sf.p);
  return views;
}

PointCloud render_hand_eye_cloud(const World& world, std::span<const Pose3D> wrist_poses,
                                 const NoiseConfig& noise, Rng& rng,
                                 const RenderConfig& cfg) {
  if (wrist_poses.size() != 3)
    throw std::invalid_argument("hand-eye registration needs exactly three wrist poses");
  PointCloud cloud;
  Scene scene;
  add_world_solids(scene, world, false, true, &cloud.low_objects);
  const double s = cfg.spacing();
  for (const auto& solid : scene.solids) add_solid_surfaces(scene, solid, s);

  const Pose2D basket = world.model.basket_pose();
  const Polygon interior = transform_polygon(world.model.basket_interior(), basket);
  const double floor = world.model.basket_floor();
  const Solid bounds = make_solid(interior, floor, floor);
  lattice(bounds.lo.x(), bounds.hi.x(), bounds.lo.y(), bounds.hi.y(), s, [&](const Vec2& q) {
    if (!point_in_convex_polygon(interior, q)) return;
    for (const auto& solid : scene.solids)
      if (std::abs(solid.z0 - floor) < 1e-9 && point_in_convex_polygon(solid.footprint, q))
        return;
    scene.surfels.push_back({Vec3(q.x(), q.y(), floor), Vec3::UnitZ()});
  });

  std::vector<CameraModel> cams;
  for (const auto& pose : wrist_poses) {
    CameraModel cam = cfg.hand_eye;
    cam.mount = pose;
    cams.push_back(cam);
  }
  for (const auto& sf : scene.surfels)
    for (const auto& cam : cams) {
      if (!visible_from(scene, cam, sf)) continue;
      Vec3 p = sf.p;
      apply_range_noise(p, cam.mount.translation, noise, rng);
      cloud.points.push_back(p);
      break;
    }
  add_sunlight_artifacts(cloud, cams, noise, rng);
  return cloud;
}

LaserScan cloud_to_scan(const PointCloud& cloud, double z_min, double z_max,
                        const ScanParams& params) {
  LaserScan scan;
  scan.angle_min = params.angle_min;
  scan.angle_max = params.angle_max;
  scan.angle_increment = params.angle_increment;
  const std::size_t n = scan_bin_count(params.angle_min, params.angle_max, params.angle_increment);
  scan.ranges.assign(n, std::numeric_limits<double>::infinity());
  const double c = std::cos(params.heading), s = std::sin(params.heading);
  for (const auto& p : cloud.points) {
    if (p.z() < z_min || p.z() > z_max) continue;
    const double dx = p.x() - params.origin.x(), dy = p.y() - params.origin.y();
    const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
    const double range = std::hypot(lx, ly);
    if (range < params.range_min || range > params.range_max) continue;
    const double angle = std::atan2(ly, lx);
    if (angle < params.angle_min || angle > params.angle_max) continue;
    const auto bin = static_cast<std::size_t>(
        std::floor((angle - params.angle_min) / params.angle_increment + 1e-9));
    if (bin >= n) continue;
    scan.ranges[bin] = std::min(scan.ranges[bin], range);
  }
  return scan;
}

std::pair<LaserScan, LaserScan> fixed_camera_scans(const World& world,
                                                   const RenderConfig& cfg) {
  const auto views = render_fixed_views(world, cfg, cfg.scan_samples_per_m2);
  std::array<LaserScan, 2> scans;
  for (std::size_t c = 0; c < 2; ++c) {
    ScanParams params;
    params.origin = cfg.fixed_cameras[c].mount.translation.head<2>();
    scans[c] = cloud_to_scan(views[c], cfg.scan_z_min, cfg.scan_z_max, params);
  }
  return {scans[0], scans[1]};
}

std::vector<std::vector<std::size_t>> euclidean_clusters(const PointCloud& cloud,
                                                         double tolerance) {
  std::vector<std::vector<std::size_t>> clusters;
  if (cloud.empty()) return clusters;
  const detail::SpatialHash hash(cloud.points, tolerance);
  std::vector<bool> seen(cloud.size(), false);
  for (std::size_t seed = 0; seed < cloud.size(); ++seed) {
    if (seen[seed]) continue;
    std::vector<std::size_t> members{seed};
    seen[seed] = true;
    for (std::size_t head = 0; head < members.size(); ++head) {
      hash.for_each_within(cloud.points[members[head]], tolerance, [&](std::size_t j) {
        if (!seen[j]) {
          seen[j] = true;
          members.push_back(j);
        }
      });
    }
    std::sort(members.begin(), members.end());
    clusters.push_back(std::move(members));
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return clusters;
}

PointCloud segment_bin_cluster(const PointCloud& cloud, double h_min, double tolerance) {
  PointCloud above;
  const double floor_band = h_min + 0.05;
  for (const auto& p : cloud.points)
    if (p.z() > floor_band) above.points.push_back(p);
  PointCloud out;
  const auto clusters = euclidean_clusters(above, tolerance);
  if (clusters.empty()) return out;
  for (std::size_t i : clusters.front()) out.points.push_back(above.points[i]);
  return out;
}

std::optional<std::string> inject_wind_event(World& world, const NoiseConfig& noise, Rng& rng) {
  if (noise.wind_event_probability <= 0.0) return std::nullopt;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= noise.wind_event_probability) return std::nullopt;
  std::vector<RigidObject*> floor;
  for (auto& o : world.objects)
    if (o.location.kind == LocationKind::Floor) floor.push_back(&o);
  if (floor.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, floor.size() - 1);
  RigidObject& chosen = *floor[pick(rng)];
  const double r = noise.wind_disc_radius * std::sqrt(unit(rng));
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  chosen.location.pose.x += r * std::cos(phi);
  chosen.location.pose.y += r * std::sin(phi);
  return chosen.id;
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  char line[96];
  for (const auto& p : cloud.points) {
    std::snprintf(line, sizeof line, "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    out << line;
  }
}

}  // namespace pickdrop
