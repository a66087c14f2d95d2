#pragma once

#include "pickdrop/geometry.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pickdrop {

enum class TaskMode { CollectAll, OneByOne };

const char* to_string(TaskMode mode);
TaskMode task_mode_from_string(const std::string& text);

enum class LocationKind { Floor, Gripper, Basket, Bin };

const char* to_string(LocationKind kind);

/// Where an object currently is. `pose` is in the world frame for Floor and in
/// the basket frame for Basket; unused otherwise.
struct Location {
  LocationKind kind = LocationKind::Floor;
  Pose2D pose;
};

struct RigidObject {
  std::string id;
  Polygon footprint;  // object frame, counter-clockwise
  double height = 0.0;
  double grasp_width = 0.0;
  Location location;
  // Rendered by nobody; stands in for objects too flat to register.
  bool render_suppressed = false;
  // Where the object was before it entered the gripper.
  LocationKind picked_from = LocationKind::Floor;
};

struct OccupancyGrid {
  double resolution = 0.1;
  int width = 0;
  int height = 0;
  Vec2 origin = Vec2::Zero();  // world position of cell (0, 0)'s lower corner
  std::vector<std::uint8_t> cells;  // row-major, row 0 at the bottom

  static OccupancyGrid empty(double resolution, int width, int height);

  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < width && iy < height;
  }
  bool occupied(int ix, int iy) const {
    return cells[static_cast<std::size_t>(iy) * width + ix] != 0;
  }
  void set(int ix, int iy, bool value) {
    cells[static_cast<std::size_t>(iy) * width + ix] = value ? 1 : 0;
  }
  std::pair<int, int> cell_of(const Vec2& p) const;
  Vec2 cell_center(int ix, int iy) const;
  /// Marks every cell whose center lies inside the polygon.
  void fill_polygon(const Polygon& world_poly);
};

struct NoiseConfig {
  double range_sigma_per_m = 0.0;
  double sunlight_artifact_rate = 0.0;
  double wind_event_probability = 0.0;
  double wind_disc_radius = 0.1;

  bool noiseless() const {
    return range_sigma_per_m == 0.0 && sunlight_artifact_rate == 0.0 &&
           wind_event_probability == 0.0;
  }
};

/// Per-attempt outcome probabilities for grasp execution.
struct ExecutionModel {
  double plan_fail = 0.0;
  double empty_close = 0.0;
  double slip_lift = 0.0;

  bool deterministic() const {
    return plan_fail == 0.0 && empty_close == 0.0 && slip_lift == 0.0;
  }
};

/// Obstacle not present in the static map (seen only by onboard sensors).
struct Obstacle {
  Polygon footprint;  // world frame
  double height = 0.3;
};

struct BinSpec {
  Pose2D pose;
  Polygon footprint = rectangle(0.6, 0.6);  // bin frame
  double height = 0.7;

  Polygon world_footprint() const { return transform_polygon(footprint, pose); }
};

struct Scenario {
  std::string name = "scenario";
  OccupancyGrid grid;
  std::vector<RigidObject> objects;
  BinSpec bin;
  Pose2D start_pose;
  Pose2D pick_point;
  Pose2D drop_point;
  TaskMode task_mode = TaskMode::CollectAll;
  std::uint64_t seed = 0;
  NoiseConfig noise;
  ExecutionModel execution;
  std::vector<Obstacle> obstacles;

  bool operator==(const Scenario&) const;
};

struct CasterLag {
  bool enabled = false;
  double tau = 0.5;
  double drift_gain = 0.1;
};

struct BaseKinematicsConfig {
  double max_linear_velocity = 0.5;
  double max_angular_velocity = 1.0;
  // Minimum turning radius while translating; in-place rotation is allowed.
  double turning_radius_penalty = 0.43;
  CasterLag caster_lag;
  double half_length = 0.76;
};

/// Rotation direction the casters are trailing (-1, 0 = straight, +1) and the
/// time since they last started to realign.
struct CasterState {
  int alignment = 0;
  int drift_sign = 0;
  double elapsed = 0.0;
  bool transient = false;
};

struct BaseCommand {
  double v = 0.0;
  double omega = 0.0;
};

/// Unicycle integration with velocity clamps and optional caster drift.
std::pair<Pose2D, CasterState> step_base(const Pose2D& pose, BaseCommand cmd,
                                         double dt,
                                         const BaseKinematicsConfig& cfg,
                                         CasterState caster);

/// Fixed robot geometry; every pose here is in the robot frame (x forward,
/// z up, floor at z = 0).
struct RobotModel {
  double body_length = 1.52;
  double body_width = 1.38;
  double deck_height = 0.6;

  Vec2 basket_center{-0.1, 0.0};
  double basket_length = 0.605;
  double basket_width = 0.51;
  double basket_wall_height = 0.195;
  double basket_wall_thickness = 0.01;

  Vec3 arm_base{0.55, 0.0, 0.6};
  double reach_min = 0.3;
  double reach_max = 1.3;
  double reach_max_height = 1.2;

  double basket_floor() const { return deck_height; }
  Pose2D basket_pose() const { return {basket_center.x(), basket_center.y(), 0.0}; }
  /// Inner basket floor in the basket frame.
  Polygon basket_interior() const;
  /// Four wall prisms in the robot frame.
  std::vector<std::pair<Polygon, std::pair<double, double>>> basket_walls() const;
  Polygon body_footprint() const { return rectangle(body_length, body_width); }
};

class IllegalTransfer : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Ground-truth simulation state for one run.
class World {
 public:
  explicit World(const Scenario& scenario, RobotModel model = {});

  Pose2D robot;
  CasterState caster;
  std::vector<RigidObject> objects;
  BinSpec bin;
  std::vector<Obstacle> obstacles;
  OccupancyGrid grid;
  RobotModel model;

  RigidObject& object(const std::string& id);
  const RigidObject& object(const std::string& id) const;

  /// Moves an object along a legal edge: Floor->Gripper, Basket->Gripper,
  /// Gripper->Basket (from Floor), Gripper->Bin (from Basket), or
  /// Gripper->Floor when a drop misses its target.
  void apply_transfer(const std::string& id, LocationKind from, const Location& to);

  std::map<LocationKind, int> census() const;
  std::size_t object_count() const { return objects.size(); }

  /// Footprint in the robot frame for objects on the floor or in the basket.
  Polygon footprint_in_robot_frame(const RigidObject& obj) const;
  /// Height of the surface the object rests on.
  double support_height(const RigidObject& obj) const;
  Polygon bin_footprint_in_robot_frame() const;
  Polygon obstacle_in_robot_frame(const Obstacle& obs) const;
};

}  // namespace pickdrop
