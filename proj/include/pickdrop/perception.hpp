#pragma once

#include "pickdrop/world.hpp"

#include <array>
#include <iosfwd>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pickdrop {

using Rng = std::mt19937_64;

struct PointCloud {
  std::vector<Vec3> points;  // robot frame, z up, floor at z = 0
  // Rendered objects lower than kLowObjectHeight.
  std::vector<std::string> low_objects;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct LaserScan {
  double angle_min = 0.0;
  double angle_max = 0.0;
  double angle_increment = 0.0;
  std::vector<double> ranges;  // +infinity = no return
};

struct ScanParams {
  double angle_min = -std::numbers::pi / 2;
  double angle_max = std::numbers::pi / 2;
  double angle_increment = std::numbers::pi / 180.0;
  double range_min = 0.05;
  double range_max = 5.0;
  Vec2 origin = Vec2::Zero();  // scan origin in the cloud's xy plane
  double heading = 0.0;        // scan frame heading in the cloud frame
};

/// Number of bins for a scan covering [angle_min, angle_max].
std::size_t scan_bin_count(double angle_min, double angle_max, double increment);

/// Pinhole-style depth camera: x axis is the optical axis.
struct CameraModel {
  Pose3D mount;
  double horizontal_fov = 65.0 * std::numbers::pi / 180.0;
  double vertical_fov = 40.0 * std::numbers::pi / 180.0;
  double max_range = 3.0;

  bool sees(const Vec3& p) const;
};

struct RenderConfig {
  double samples_per_m2 = 20000.0;
  std::array<CameraModel, 2> fixed_cameras;  // left, right
  CameraModel hand_eye;                      // intrinsics; pose comes per view
  std::array<Pose3D, 3> basket_views;        // canonical wrist poses over the basket
  // Floor patch considered for fixed-camera renders (robot frame).
  double floor_x_min = 0.5, floor_x_max = 3.5;
  double floor_y_min = -2.0, floor_y_max = 2.0;
  // Scans used by the pose adjustment only need a coarse render.
  double scan_samples_per_m2 = 2500.0;
  double scan_z_min = 0.02, scan_z_max = 1.5;

  static RenderConfig defaults(const RobotModel& model = {});
  double spacing() const;
};

/// Union of the surfaces visible from the two fixed cameras.
PointCloud render_fixed_cloud(const World& world, const NoiseConfig& noise, Rng& rng,
                              const RenderConfig& cfg);

/// Noiseless per-camera views (left, right) at `density` samples/m^2.
std::array<PointCloud, 2> render_fixed_views(const World& world, const RenderConfig& cfg,
                                             double density);

/// Points visible from any of exactly three wrist poses, stitched exactly.
PointCloud render_hand_eye_cloud(const World& world, std::span<const Pose3D> wrist_poses,
                                 const NoiseConfig& noise, Rng& rng,
                                 const RenderConfig& cfg);

/// Points in the z band are binned by bearing around the scan origin; every
/// bin keeps its closest point.
LaserScan cloud_to_scan(const PointCloud& cloud, double z_min, double z_max,
                        const ScanParams& params);

/// Left and right scans from the two fixed cameras, origins at the camera
/// ground projections.
std::pair<LaserScan, LaserScan> fixed_camera_scans(const World& world,
                                                   const RenderConfig& cfg);

/// Single-linkage clusters with the given distance tolerance, largest first
/// (ties by smallest member index).
std::vector<std::vector<std::size_t>> euclidean_clusters(const PointCloud& cloud,
                                                         double tolerance);

/// Drops points with p_z <= h_min + 0.05, then returns the largest cluster.
PointCloud segment_bin_cluster(const PointCloud& cloud, double h_min,
                               double tolerance = 0.05);

/// With the configured probability, displaces one uniformly chosen floor
/// object by an offset drawn uniformly from a disc. Returns the id moved.
std::optional<std::string> inject_wind_event(World& world, const NoiseConfig& noise,
                                             Rng& rng);

/// One point per line, space-separated meters.
void write_xyz(std::ostream& out, const PointCloud& cloud);

/// Objects lower than this register poorly; flagged only.
inline constexpr double kLowObjectHeight = 0.03;

}  // namespace pickdrop
