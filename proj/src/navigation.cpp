#include "pickdrop/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <tuple>

namespace pickdrop {

bool operator<(const PathCost& a, const PathCost& b) {
  // a.straight + a.diagonal*sqrt2 < b.straight + b.diagonal*sqrt2, exactly.
  const std::int64_t ds = a.straight - b.straight;
  const std::int64_t dd = b.diagonal - a.diagonal;  // ds < dd * sqrt2
  if (dd >= 0) return ds < 0 || ds * ds < 2 * dd * dd;
  return ds < 0 && ds * ds > 2 * dd * dd;
}

Costmap build_costmap(const OccupancyGrid& grid, double inflation_radius) {
  if (inflation_radius < 0.0) throw std::invalid_argument("inflation radius must be >= 0");
  Costmap cm;
  cm.base = grid;
  cm.inflation_radius = inflation_radius;
  cm.cost.assign(grid.cells.size(), CellCost::Free);

  const double r = inflation_radius / grid.resolution;
  const int span = static_cast<int>(std::floor(r + 1e-9));
  std::vector<std::pair<int, int>> disc;
  for (int dy = -span; dy <= span; ++dy)
    for (int dx = -span; dx <= span; ++dx)
      if (dx * dx + dy * dy <= r * r + 1e-9) disc.emplace_back(dx, dy);

  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix) {
      if (!grid.occupied(ix, iy)) continue;
      for (auto [dx, dy] : disc) {
        const int x = ix + dx, y = iy + dy;
        if (!grid.in_bounds(x, y)) continue;
        auto& c = cm.cost[static_cast<std::size_t>(y) * grid.width + x];
        if (c == CellCost::Free) c = CellCost::Inflated;
      }
    }
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i]) cm.cost[i] = CellCost::Lethal;
  return cm;
}

void add_obstacle(Costmap& cm, const Polygon& poly, double radius) {
  if (poly.empty()) return;
  Vec2 lo = poly.front(), hi = poly.front();
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  auto [x0, y0] = cm.base.cell_of(lo - Vec2::Constant(radius));
  auto [x1, y1] = cm.base.cell_of(hi + Vec2::Constant(radius));
  for (int iy = std::max(0, y0); iy <= std::min(cm.base.height - 1, y1); ++iy)
    for (int ix = std::max(0, x0); ix <= std::min(cm.base.width - 1, x1); ++ix) {
      const Vec2 c = cm.base.cell_center(ix, iy);
      auto& cost = cm.cost[static_cast<std::size_t>(iy) * cm.base.width + ix];
      const double d = distance_to_polygon(poly, c);
      if (d == 0.0)
        cost = CellCost::Lethal;
      else if (d <= radius && cost == CellCost::Free)
        cost = CellCost::Inflated;
    }
}

namespace {

constexpr std::array<std::tuple<int, int, bool>, 8> kMoves{{
    {1, 0, false}, {-1, 0, false}, {0, 1, false}, {0, -1, false},
    {1, 1, true},  {1, -1, true},  {-1, 1, true}, {-1, -1, true},
}};

std::optional<std::pair<int, int>> snap_to_free(const Costmap& cm, int sx, int sy,
                                                double radius) {
  if (cm.free(sx, sy)) return std::pair{sx, sy};
  const int span = static_cast<int>(std::ceil(radius / cm.base.resolution));
  std::optional<std::pair<int, int>> best;
  long best_d2 = 0;
  for (int dy = -span; dy <= span; ++dy)
    for (int dx = -span; dx <= span; ++dx) {
      const long d2 = long(dx) * dx + long(dy) * dy;
      if (d2 * cm.base.resolution * cm.base.resolution > radius * radius + 1e-12) continue;
      if (!cm.free(sx + dx, sy + dy)) continue;
      if (!best || d2 < best_d2) {
        best = std::pair{sx + dx, sy + dy};
        best_d2 = d2;
      }
    }
  return best;
}

}  // namespace

PlanPath plan_global(const Costmap& cm, const Pose2D& start, const Pose2D& goal,
                     double start_snap_radius) {
  const auto& g = cm.base;
  auto [gx, gy] = g.cell_of(goal.position());
  if (!cm.free(gx, gy))
    throw PlanningError(PlanningError::Kind::GoalInCollision, "goal in collision");
  auto [sx0, sy0] = g.cell_of(start.position());
  const auto snapped = snap_to_free(cm, sx0, sy0, start_snap_radius);
  if (!snapped) throw PlanningError(PlanningError::Kind::NoPathFound, "start in collision");
  const auto [sx, sy] = *snapped;

  const std::size_t n = g.cells.size();
  auto index = [&](int x, int y) { return static_cast<std::size_t>(y) * g.width + x; };
  std::vector<PathCost> dist(n);
  std::vector<bool> seen(n, false);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<bool> done(n, false);
  using Entry = std::pair<PathCost, std::size_t>;
  auto worse = [](const Entry& a, const Entry& b) {
    if (b.first < a.first) return true;
    if (a.first < b.first) return false;
    return a.second > b.second;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);
  dist[index(sx, sy)] = PathCost{};
  seen[index(sx, sy)] = true;
  open.push({PathCost{}, index(sx, sy)});
  const std::size_t target = index(gx, gy);
  while (!open.empty()) {
    const auto [cost, cur] = open.top();
    open.pop();
    if (done[cur]) continue;
    done[cur] = true;
    if (cur == target) break;
    const int cx = static_cast<int>(cur % g.width), cy = static_cast<int>(cur / g.width);
    for (auto [dx, dy, diag] : kMoves) {
      const int nx = cx + dx, ny = cy + dy;
      if (!cm.free(nx, ny)) continue;
      if (diag && (!cm.free(cx + dx, cy) || !cm.free(cx, cy + dy))) continue;
      PathCost next = cost;
      (diag ? next.diagonal : next.straight) += 1;
      const std::size_t ni = index(nx, ny);
      if (!seen[ni] || next < dist[ni]) {
        seen[ni] = true;
        dist[ni] = next;
        parent[ni] = static_cast<std::int64_t>(cur);
        open.push({next, ni});
      }
    }
  }
  if (!done[target]) throw PlanningError(PlanningError::Kind::NoPathFound, "no path found");

  std::vector<std::size_t> cells;
  for (std::int64_t c = static_cast<std::int64_t>(target); c >= 0; c = parent[c])
    cells.push_back(static_cast<std::size_t>(c));
  std::reverse(cells.begin(), cells.end());

  PlanPath path;
  path.cost = dist[target];
  path.length = path.cost.cells() * g.resolution;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Vec2 p = g.cell_center(static_cast<int>(cells[i] % g.width),
                                 static_cast<int>(cells[i] / g.width));
    double heading = goal.heading;
    if (i + 1 < cells.size()) {
      const Vec2 q = g.cell_center(static_cast<int>(cells[i + 1] % g.width),
                                   static_cast<int>(cells[i + 1] / g.width));
      heading = std::atan2(q.y() - p.y(), q.x() - p.x());
    }
    path.waypoints.push_back(Pose2D::make(p.x(), p.y(), heading));
  }
  return path;
}

void FollowConfig::validate() const {
  if (!(pdist_scale > gdist_scale))
    throw std::invalid_argument("pdist_scale must exceed gdist_scale");
  if (local_inflation > global_inflation)
    throw std::invalid_argument("local inflation must not exceed global inflation");
  if (control_period <= 0.0 || lookahead <= 0.0 || abort_after <= 0.0)
    throw std::invalid_argument("follow periods and distances must be positive");
}

namespace {

// Obstacles visible to onboard sensors: scenario obstacles, then the bin,
// then floor objects.
std::vector<std::pair<Polygon, double>> sensed_candidates(const World& world) {
  std::vector<std::pair<Polygon, double>> out;
  for (const auto& obs : world.obstacles) out.emplace_back(obs.footprint, obs.height);
  out.emplace_back(world.bin.world_footprint(), world.bin.height);
  for (const auto& o : world.objects) {
    if (o.location.kind == LocationKind::Floor && !o.render_suppressed)
      out.emplace_back(transform_polygon(o.footprint, o.location.pose), o.height);
    else
      out.emplace_back(Polygon{}, 0.0);
  }
  return out;
}

// Arc length of the path at each waypoint.
std::vector<double> cumulative_length(const PlanPath& path) {
  std::vector<double> s(path.waypoints.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i)
    s[i] = s[i - 1] + (path.waypoints[i].position() - path.waypoints[i - 1].position()).norm();
  return s;
}

Vec2 point_at(const PlanPath& path, const std::vector<double>& s, double at) {
  if (path.waypoints.size() == 1 || at <= 0.0) return path.waypoints.front().position();
  if (at >= s.back()) return path.waypoints.back().position();
  const auto it = std::upper_bound(s.begin(), s.end(), at);
  const std::size_t i = static_cast<std::size_t>(it - s.begin());
  const double seg = s[i] - s[i - 1];
  const double f = seg > 0 ? (at - s[i - 1]) / seg : 0.0;
  return path.waypoints[i - 1].position() +
         f * (path.waypoints[i].position() - path.waypoints[i - 1].position());
}

// Projection of p onto the path, searching forward from the current segment.
double project(const PlanPath& path, const std::vector<double>& s, const Vec2& p,
               std::size_t& segment) {
  if (path.waypoints.size() < 2) return 0.0;
  double best_d = std::numeric_limits<double>::infinity(), best_s = s[segment];
  std::size_t best_seg = segment;
  const std::size_t last = std::min(path.waypoints.size() - 1, segment + 40);
  for (std::size_t i = segment; i < last; ++i) {
    const Vec2 a = path.waypoints[i].position(), b = path.waypoints[i + 1].position();
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double d = (a + t * ab - p).norm();
    if (d < best_d - 1e-12) {
      best_d = d;
      best_s = s[i] + t * std::sqrt(len2);
      best_seg = i;
    }
  }
  segment = best_seg;
  return best_s;
}

}  // namespace

void sense_obstacles(const World& world, const FollowConfig& cfg, std::vector<bool>& known) {
  const auto candidates = sensed_candidates(world);
  known.resize(candidates.size(), false);
  const Vec2 robot = world.robot.position();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& [poly, height] = candidates[i];
    if (known[i] || poly.empty()) continue;
    const double dist = distance_to_polygon(poly, robot);
    const Vec2 local = world.robot.to_local(polygon_centroid(poly));
    const double bearing = std::atan2(local.y(), local.x());
    const bool camera = local.x() > 0.0 && dist <= cfg.camera_range &&
                        std::abs(bearing) <= std::numbers::pi / 3;
    const bool lidar = height > cfg.lidar_height && dist <= cfg.lidar_range &&
                       std::abs(bearing) <= 95.0 * std::numbers::pi / 180.0;
    if (camera || lidar) known[i] = true;
  }
}

std::vector<Polygon> known_footprints(const World& world, const std::vector<bool>& known) {
  std::vector<Polygon> out;
  const auto candidates = sensed_candidates(world);
  for (std::size_t i = 0; i < candidates.size() && i < known.size(); ++i)
    if (known[i] && !candidates[i].first.empty()) out.push_back(candidates[i].first);
  return out;
}

FollowOutcome follow_path(World& world, const PlanPath& path, const FollowConfig& cfg,
                          const BaseKinematicsConfig& kin, const Costmap& local_static,
                          std::vector<bool>& known) {
  FollowOutcome out;
  if (path.waypoints.empty()) throw std::invalid_argument("empty path");
  const auto s = cumulative_length(path);
  const double total = s.back();
  const Pose2D goal = path.waypoints.back();
  const double dt = cfg.control_period;

  auto rebuild_local = [&] {
    Costmap local = local_static;
    const auto candidates = sensed_candidates(world);
    for (std::size_t i = 0; i < candidates.size() && i < known.size(); ++i)
      if (known[i] && !candidates[i].first.empty())
        add_obstacle(local, candidates[i].first, cfg.local_inflation);
    return local;
  };

  std::size_t known_count = static_cast<std::size_t>(std::count(known.begin(), known.end(), true));
  Costmap local = rebuild_local();
  std::size_t segment = 0;
  double progress = project(path, s, world.robot.position(), segment);
  double best_progress = progress;
  double last_improvement = 0.0;
  out.trace.push_back(world.robot.position());

  while (out.elapsed < cfg.max_duration) {
    sense_obstacles(world, cfg, known);
    const auto now_known = static_cast<std::size_t>(std::count(known.begin(), known.end(), true));
    if (now_known != known_count) {
      known_count = now_known;
      local = rebuild_local();
    }

    progress = project(path, s, world.robot.position(), segment);
    out.progress = progress;
    const Vec2 to_goal = goal.position() - world.robot.position();
    const double goal_dist = to_goal.norm();

    BaseCommand cmd;
    if (goal_dist < 0.01 || (total == 0.0 && goal_dist < cfg.goal_tolerance)) {
      const double err = normalize_angle(goal.heading - world.robot.heading);
      if (std::abs(err) < cfg.heading_tolerance) {
        out.status = FollowStatus::Reached;
        out.progress = total;
        return out;
      }
      cmd.omega = std::clamp(err / dt, -kin.max_angular_velocity, kin.max_angular_velocity);
    } else {
      // The local costmap must stay clear along the stretch ahead.
      const double step = 0.5 * local.base.resolution;
      for (double a = progress + step; a <= std::min(total, progress + cfg.check_distance);
           a += step) {
        if (!local.free_at(point_at(path, s, a))) {
          out.status = FollowStatus::Aborted;
          out.reason = "blocked";
          return out;
        }
      }
      const Vec2 carrot = point_at(path, s, progress + cfg.lookahead);
      Vec2 desired = cfg.pdist_scale * (carrot - world.robot.position()).normalized();
      if (goal_dist < cfg.lookahead) desired += cfg.gdist_scale * to_goal.normalized();
      const double alpha =
          normalize_angle(std::atan2(desired.y(), desired.x()) - world.robot.heading);
      // Close to the goal the turning radius would make the base orbit it.
      const bool near = goal_dist < cfg.lookahead;
      if (std::abs(alpha) > std::numbers::pi / 3 || (near && std::abs(alpha) > cfg.near_goal_alignment)) {
        cmd.omega = std::clamp(alpha / dt, -kin.max_angular_velocity, kin.max_angular_velocity);
      } else {
        cmd.v = std::min(kin.max_linear_velocity, goal_dist / dt);
        const double reach = std::max(std::min(cfg.lookahead, goal_dist), 1e-6);
        cmd.omega = 2.0 * cmd.v * std::sin(alpha) / reach;
      }
    }

    auto [next, caster] = step_base(world.robot, cmd, dt, kin, world.caster);
    world.robot = next;
    world.caster = caster;
    out.elapsed += dt;
    out.trace.push_back(world.robot.position());

    if (progress > best_progress + 0.01) {
      best_progress = progress;
      last_improvement = out.elapsed;
    } else if (goal_dist >= 0.01 && out.elapsed - last_improvement > cfg.abort_after) {
      out.status = FollowStatus::Aborted;
      out.reason = "no progress";
      return out;
    }
  }
  out.status = FollowStatus::Aborted;
  out.reason = "timeout";
  return out;
}

ScanHalves mean_scan_halves(const LaserScan& left, const LaserScan& right) {
  auto mean = [](const LaserScan& scan) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double r : scan.ranges)
      if (std::isfinite(r)) {
        sum += r;
        ++n;
      }
    return n ? sum / double(n) : std::numeric_limits<double>::infinity();
  };
  return {mean(left), mean(right)};
}

AdjustOutcome adjust_final_pose(World& world, const ScanSource& scans,
                                const AdjustConfig& cfg, const BaseKinematicsConfig& kin) {
  AdjustOutcome out;
  while (true) {
    const auto [left, right] = scans(world);
    const ScanHalves h = mean_scan_halves(left, right);
    out.final_halves = h;
    if (h.either_infinite()) break;
    BaseCommand cmd;
    double dt = 0.0;
    if (h.mu_l + h.mu_r >= cfg.sum_threshold) {
      cmd.v = kin.max_linear_velocity;
      dt = cfg.forward_step / kin.max_linear_velocity;
      out.forward += cfg.forward_step;
    } else if (std::abs(h.mu_l - h.mu_r) >= cfg.diff_threshold) {
      // Objects closer on the right: turn clockwise (heading decreases).
      const double dir = h.mu_l > h.mu_r ? -1.0 : 1.0;
      cmd.omega = dir * kin.max_angular_velocity;
      dt = cfg.turn_step / kin.max_angular_velocity;
      out.turn += dir * cfg.turn_step;
    } else {
      break;
    }
    if (out.iterations >= cfg.max_iterations) {
      out.status = AdjustStatus::Stalled;
      return out;
    }
    ++out.iterations;
    auto [next, caster] = step_base(world.robot, cmd, dt, kin, world.caster);
    world.robot = next;
    world.caster = caster;
  }
  out.status = out.iterations == 0 ? AdjustStatus::NoAdjust : AdjustStatus::Adjusted;
  return out;
}

std::string costmap_to_text(const Costmap& cm, const PlanPath* path) {
  std::vector<char> chars(cm.cost.size());
  for (std::size_t i = 0; i < cm.cost.size(); ++i)
    chars[i] = cm.cost[i] == CellCost::Lethal ? '#' : cm.cost[i] == CellCost::Inflated ? '+' : '.';
  if (path)
    for (const auto& wp : path->waypoints) {
      auto [ix, iy] = cm.base.cell_of(wp.position());
      if (cm.base.in_bounds(ix, iy)) chars[static_cast<std::size_t>(iy) * cm.base.width + ix] = '*';
    }
  std::ostringstream out;
  for (int iy = cm.base.height - 1; iy >= 0; --iy) {
    out.write(&chars[static_cast<std::size_t>(iy) * cm.base.width], cm.base.width);
    out << '\n';
  }
  return out.str();
}

}  // namespace pickdrop
