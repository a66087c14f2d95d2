#pragma once

#include "pickdrop/world.hpp"

#include <json.hpp>

#include <string>

namespace fixtures {

// Empty square map of `size_m` meters at 0.1 m, one object at (x, y).
inline nlohmann::json minimal_document(double size_m = 10.0, double obj_x = 5.0, double obj_y = 5.0) {
  const int cells = static_cast<int>(size_m / 0.1 + 0.5);
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < cells; ++r) rows.push_back(std::to_string(cells) + ":0");
  return {
      {"schema_version", 1},
      {"kind", "scenario"},
      {"name", "minimal"},
      {"grid", {{"resolution", 0.1}, {"width", cells}, {"height", cells}, {"origin", {0.0, 0.0}}, {"rows", rows}}},
      {"objects",
       {{{"id", "box-0"},
         {"footprint", {{-0.05, -0.03}, {0.05, -0.03}, {0.05, 0.03}, {-0.05, 0.03}}},
         {"height", 0.06},
         {"pose", {obj_x, obj_y, 0.0}}}}},
      {"bin", {{"pose", {size_m / 2, size_m - 2.5, 0.0}}}},
      {"start_pose", {2.5, 2.5, 0.0}},
      {"pick_point", {obj_x - 1.45, obj_y, 0.0}},
      {"drop_point", {size_m / 2, size_m - 4.0, 1.5707963267948966}},
      {"task_mode", "collect-all"},
      {"seed", 1},
  };
}

// Open floor of the given extent with a robot at the origin facing +x.
inline pickdrop::Scenario open_floor(double size_m = 20.0) {
  pickdrop::Scenario s;
  const int cells = static_cast<int>(size_m / 0.1 + 0.5);
  s.grid = pickdrop::OccupancyGrid::empty(0.1, cells, cells);
  s.grid.origin = pickdrop::Vec2(-size_m / 2, -size_m / 2);
  s.bin.pose = pickdrop::Pose2D::make(-size_m / 2 + 2.0, -size_m / 2 + 2.0, 0.0);
  return s;
}

inline pickdrop::RigidObject box(const std::string& id, double length, double width, double height,
                                 const pickdrop::Pose2D& pose) {
  pickdrop::RigidObject o;
  o.id = id;
  o.footprint = pickdrop::rectangle(length, width);
  o.height = height;
  o.grasp_width = pickdrop::min_caliper_width(o.footprint);
  o.location = {pickdrop::LocationKind::Floor, pose};
  return o;
}

}  // namespace fixtures
