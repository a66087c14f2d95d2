#include "pickdrop/world.hpp"

#include <algorithm>
#include <cmath>

namespace pickdrop {

const char* to_string(TaskMode mode) {
  return mode == TaskMode::CollectAll ? "collect-all" : "one-by-one";
}

TaskMode task_mode_from_string(const std::string& text) {
  if (text == "collect-all" || text == "CollectAll") return TaskMode::CollectAll;
  if (text == "one-by-one" || text == "OneByOne") return TaskMode::OneByOne;
  throw std::invalid_argument("unknown task mode '" + text + "'");
}

const char* to_string(LocationKind kind) {
  switch (kind) {
    case LocationKind::Floor: return "Floor";
    case LocationKind::Gripper: return "Gripper";
    case LocationKind::Basket: return "Basket";
    case LocationKind::Bin: return "Bin";
  }
  return "?";
}

OccupancyGrid OccupancyGrid::empty(double resolution, int width, int height) {
  OccupancyGrid g;
  g.resolution = resolution;
  g.width = width;
  g.height = height;
  g.cells.assign(static_cast<std::size_t>(width) * height, 0);
  return g;
}

std::pair<int, int> OccupancyGrid::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / resolution)),
          static_cast<int>(std::floor((p.y() - origin.y()) / resolution))};
}

Vec2 OccupancyGrid::cell_center(int ix, int iy) const {
  return {origin.x() + (ix + 0.5) * resolution, origin.y() + (iy + 0.5) * resolution};
}

void OccupancyGrid::fill_polygon(const Polygon& world_poly) {
  for (int iy = 0; iy < height; ++iy)
    for (int ix = 0; ix < width; ++ix)
      if (point_in_convex_polygon(world_poly, cell_center(ix, iy))) set(ix, iy, true);
}

namespace {

bool same_polygon(const Polygon& a, const Polygon& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  auto grid_eq = grid.resolution == o.grid.resolution && grid.width == o.grid.width &&
                 grid.height == o.grid.height && grid.origin == o.grid.origin &&
                 grid.cells == o.grid.cells;
  if (!grid_eq || objects.size() != o.objects.size() ||
      obstacles.size() != o.obstacles.size())
    return false;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& a = objects[i];
    const auto& b = o.objects[i];
    if (a.id != b.id || !same_polygon(a.footprint, b.footprint) || a.height != b.height ||
        a.grasp_width != b.grasp_width || a.location.kind != b.location.kind ||
        !(a.location.pose == b.location.pose) || a.render_suppressed != b.render_suppressed)
      return false;
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (!same_polygon(obstacles[i].footprint, o.obstacles[i].footprint) ||
        obstacles[i].height != o.obstacles[i].height)
      return false;
  return name == o.name && bin.pose == o.bin.pose &&
         same_polygon(bin.footprint, o.bin.footprint) && bin.height == o.bin.height &&
         start_pose == o.start_pose && pick_point == o.pick_point &&
         drop_point == o.drop_point && task_mode == o.task_mode && seed == o.seed &&
         noise.range_sigma_per_m == o.noise.range_sigma_per_m &&
         noise.sunlight_artifact_rate == o.noise.sunlight_artifact_rate &&
         noise.wind_event_probability == o.noise.wind_event_probability &&
         noise.wind_disc_radius == o.noise.wind_disc_radius &&
         execution.plan_fail == o.execution.plan_fail &&
         execution.empty_close == o.execution.empty_close &&
         execution.slip_lift == o.execution.slip_lift;
}

std::pair<Pose2D, CasterState> step_base(const Pose2D& pose, BaseCommand cmd, double dt,
                                         const BaseKinematicsConfig& cfg,
                                         CasterState caster) {
  double v = std::clamp(cmd.v, -cfg.max_linear_velocity, cfg.max_linear_velocity);
  double w = std::clamp(cmd.omega, -cfg.max_angular_velocity, cfg.max_angular_velocity);
  if (v != 0.0 && cfg.turning_radius_penalty > 0.0) {
    const double w_cap = std::abs(v) / cfg.turning_radius_penalty;
    w = std::clamp(w, -w_cap, w_cap);
  }

  double x = pose.x, y = pose.y;
  const double th = pose.heading;
  const double th_next = th + w * dt;
  if (std::abs(w) < 1e-12) {
    x += v * dt * std::cos(th);
    y += v * dt * std::sin(th);
  } else {
    x += v / w * (std::sin(th_next) - std::sin(th));
    y -= v / w * (std::cos(th_next) - std::cos(th));
  }

  if (cfg.caster_lag.enabled) {
    const bool moving = std::abs(v) > 1e-12 || std::abs(w) > 1e-12;
    if (moving) {
      const int dir = std::abs(w) < 1e-12 ? 0 : (w > 0 ? 1 : -1);
      if (dir != caster.alignment) {
        caster.drift_sign = caster.alignment - dir > 0 ? 1 : -1;
        caster.alignment = dir;
        caster.elapsed = 0.0;
        caster.transient = true;
      }
    }
    if (caster.transient) {
      const double tau = cfg.caster_lag.tau;
      const double amount = cfg.caster_lag.drift_gain * cfg.half_length *
                            (std::exp(-caster.elapsed / tau) -
                             std::exp(-(caster.elapsed + dt) / tau));
      x += -std::sin(th_next) * caster.drift_sign * amount;
      y += std::cos(th_next) * caster.drift_sign * amount;
      caster.elapsed += dt;
      if (caster.elapsed > 30.0 * tau) caster.transient = false;
    }
  }
  return {Pose2D::make(x, y, th_next), caster};
}

Polygon RobotModel::basket_interior() const {
  return rectangle(basket_length - 2.0 * basket_wall_thickness,
                   basket_width - 2.0 * basket_wall_thickness);
}

std::vector<std::pair<Polygon, std::pair<double, double>>> RobotModel::basket_walls() const {
  const double hx = 0.5 * basket_length, hy = 0.5 * basket_width;
  const double t = basket_wall_thickness;
  const double z0 = basket_floor(), z1 = basket_floor() + basket_wall_height;
  const Vec2 c = basket_center;
  auto box = [&](double x0, double y0, double x1, double y1) {
    return Polygon{{c.x() + x0, c.y() + y0}, {c.x() + x1, c.y() + y0},
                   {c.x() + x1, c.y() + y1}, {c.x() + x0, c.y() + y1}};
  };
  return {{box(-hx, -hy, hx, -hy + t), {z0, z1}},
          {box(-hx, hy - t, hx, hy), {z0, z1}},
          {box(-hx, -hy + t, -hx + t, hy - t), {z0, z1}},
          {box(hx - t, -hy + t, hx, hy - t), {z0, z1}}};
}

World::World(const Scenario& scenario, RobotModel robot_model)
    : robot(scenario.start_pose),
      objects(scenario.objects),
      bin(scenario.bin),
      obstacles(scenario.obstacles),
      grid(scenario.grid),
      model(robot_model) {}

RigidObject& World::object(const std::string& id) {
  for (auto& o : objects)
    if (o.id == id) return o;
  throw std::out_of_range("unknown object '" + id + "'");
}

const RigidObject& World::object(const std::string& id) const {
  return const_cast<World*>(this)->object(id);
}

void World::apply_transfer(const std::string& id, LocationKind from, const Location& to) {
  RigidObject& obj = object(id);
  if (obj.location.kind != from)
    throw IllegalTransfer("object '" + id + "' is at " + to_string(obj.location.kind) +
                          ", not " + to_string(from));
  bool legal = false;
  switch (from) {
    case LocationKind::Floor:
    case LocationKind::Basket:
      legal = to.kind == LocationKind::Gripper;
      break;
    case LocationKind::Gripper:
      legal = to.kind == LocationKind::Floor ||
              (obj.picked_from == LocationKind::Floor && to.kind == LocationKind::Basket) ||
              (obj.picked_from == LocationKind::Basket && to.kind == LocationKind::Bin);
      break;
    case LocationKind::Bin:
      legal = false;
      break;
  }
  if (!legal)
    throw IllegalTransfer(std::string("illegal transition ") + to_string(from) + " -> " +
                          to_string(to.kind) + " for object '" + id + "'");
  if (to.kind == LocationKind::Gripper) obj.picked_from = from;
  obj.location = to;
}

std::map<LocationKind, int> World::census() const {
  std::map<LocationKind, int> counts;
  for (const auto& o : objects) ++counts[o.location.kind];
  return counts;
}

Polygon World::footprint_in_robot_frame(const RigidObject& obj) const {
  Polygon out;
  out.reserve(obj.footprint.size());
  if (obj.location.kind == LocationKind::Floor) {
    for (const auto& p : obj.footprint)
      out.push_back(robot.to_local(obj.location.pose.to_world(p)));
  } else if (obj.location.kind == LocationKind::Basket) {
    const Pose2D frame = model.basket_pose().compose(obj.location.pose);
    for (const auto& p : obj.footprint) out.push_back(frame.to_world(p));
  }
  return out;
}

double World::support_height(const RigidObject& obj) const {
  return obj.location.kind == LocationKind::Basket ? model.basket_floor() : 0.0;
}

Polygon World::bin_footprint_in_robot_frame() const {
  Polygon out;
  for (const auto& p : bin.world_footprint()) out.push_back(robot.to_local(p));
  return out;
}

Polygon World::obstacle_in_robot_frame(const Obstacle& obs) const {
  Polygon out;
  for (const auto& p : obs.footprint) out.push_back(robot.to_local(p));
  return out;
}

}  // namespace pickdrop
