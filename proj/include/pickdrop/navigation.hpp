#pragma once

#include "pickdrop/perception.hpp"
#include "pickdrop/world.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <stdexcept>
#include <vector>

namespace pickdrop {

enum class CellCost : std::uint8_t { Free, Inflated, Lethal };

struct Costmap {
  OccupancyGrid base;
  double inflation_radius = 0.0;
  std::vector<CellCost> cost;

  CellCost at(int ix, int iy) const {
    return cost[static_cast<std::size_t>(iy) * base.width + ix];
  }
  bool free(int ix, int iy) const {
    return base.in_bounds(ix, iy) && at(ix, iy) == CellCost::Free;
  }
  bool free_at(const Vec2& p) const {
    auto [ix, iy] = base.cell_of(p);
    return free(ix, iy);
  }
};

/// Occupied cells are Lethal; cells whose centers lie within the radius of an
/// occupied cell center are Inflated. Both block planning.
Costmap build_costmap(const OccupancyGrid& grid, double inflation_radius);

/// Marks every cell within `radius` of the polygon as Inflated (if Free).
void add_obstacle(Costmap& costmap, const Polygon& world_footprint, double radius);

/// Exact 8-connected path cost: straight steps + diagonal steps * sqrt(2), in
/// cell units. Comparison is exact integer arithmetic.
struct PathCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double cells() const { return straight + diagonal * std::numbers::sqrt2; }
  friend bool operator==(const PathCost&, const PathCost&) = default;
  friend bool operator<(const PathCost& a, const PathCost& b);
};

struct PlanPath {
  std::vector<Pose2D> waypoints;
  double length = 0.0;
  PathCost cost;
};

class PlanningError : public std::runtime_error {
 public:
  enum class Kind { GoalInCollision, NoPathFound };
  PlanningError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Dijkstra over free cells, 8-connected without corner cutting. A start
/// inside an inflated region is snapped to the nearest free cell within
/// `start_snap_radius`.
PlanPath plan_global(const Costmap& costmap, const Pose2D& start, const Pose2D& goal,
                     double start_snap_radius = 0.5);

struct FollowConfig {
  double pdist_scale = 1.0;
  double gdist_scale = 0.4;
  double local_inflation = 0.5;
  double global_inflation = 2.0;
  double abort_after = 10.0;
  double lookahead = 0.6;
  // Within the lookahead the base turns in place first when off by more.
  double near_goal_alignment = 5.0 * std::numbers::pi / 180.0;
  double goal_tolerance = 0.03;
  double heading_tolerance = 0.02;
  double control_period = 0.025;
  double check_distance = 1.5;  // how far ahead the local costmap is checked
  double lidar_height = 0.3;    // lidar sees only obstacles taller than this
  double lidar_range = 20.0;
  double camera_range = 2.8;
  double max_duration = 3600.0;

  void validate() const;
};

enum class FollowStatus { Reached, Aborted };

struct FollowOutcome {
  FollowStatus status = FollowStatus::Reached;
  double progress = 0.0;  // meters travelled along the path
  double elapsed = 0.0;   // simulated seconds
  std::string reason;
  std::vector<Vec2> trace;
};

/// Detects obstacles around the robot; `known` accumulates what onboard
/// sensors have seen during the run.
void sense_obstacles(const World& world, const FollowConfig& cfg,
                     std::vector<bool>& known);

/// World footprints of the obstacles marked in `known`.
std::vector<Polygon> known_footprints(const World& world, const std::vector<bool>& known);

/// Pure-pursuit tracking of the global path with path adherence weighted above
/// goal attraction. Aborts when the path ahead crosses a lethal cell of the
/// local costmap or when progress stalls.
FollowOutcome follow_path(World& world, const PlanPath& path, const FollowConfig& cfg,
                          const BaseKinematicsConfig& kin, const Costmap& local_static,
                          std::vector<bool>& known_obstacles);

struct ScanHalves {
  double mu_l = std::numeric_limits<double>::infinity();
  double mu_r = std::numeric_limits<double>::infinity();

  bool either_infinite() const { return std::isinf(mu_l) || std::isinf(mu_r); }
};

ScanHalves mean_scan_halves(const LaserScan& left, const LaserScan& right);

struct AdjustConfig {
  double sum_threshold = 1.75;
  double diff_threshold = 0.3;
  double forward_step = 0.05;
  double turn_step = 2.0 * std::numbers::pi / 180.0;
  int max_iterations = 500;
};

enum class AdjustStatus { NoAdjust, Adjusted, Stalled };

struct AdjustOutcome {
  AdjustStatus status = AdjustStatus::NoAdjust;
  double forward = 0.0;
  double turn = 0.0;
  int iterations = 0;
  ScanHalves final_halves;
};

/// Supplies (left, right) scans for the current world state.
using ScanSource = std::function<std::pair<LaserScan, LaserScan>(const World&)>;

/// Drives forward until the summed means drop below the threshold, then turns
/// toward the nearer side until the means balance. Either step is skipped
/// while one mean is infinite.
AdjustOutcome adjust_final_pose(World& world, const ScanSource& scans,
                                const AdjustConfig& cfg,
                                const BaseKinematicsConfig& kin);

/// Plain-text dump: '#' lethal, '+' inflated, '.' free, '*' path; top row first.
std::string costmap_to_text(const Costmap& costmap, const PlanPath* path = nullptr);

}  // namespace pickdrop
