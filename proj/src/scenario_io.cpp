#include "pickdrop/scenario_io.hpp"

#include "pickdrop/navigation.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace pickdrop {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Schema, "schema violation: " + what);
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) schema_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

Pose2D pose_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    schema_error(std::string(what) + " must be [x, y, heading]");
  for (const auto& v : j)
    if (!v.is_number()) schema_error(std::string(what) + " entries must be numbers");
  const double x = j[0].get<double>(), y = j[1].get<double>(), h = j[2].get<double>();
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(h))
    schema_error(std::string(what) + " must be finite");
  return Pose2D::make(x, y, h);
}

json pose_to(const Pose2D& p) { return json::array({p.x, p.y, p.heading}); }

Polygon polygon_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() < 3)
    schema_error(std::string(what) + " must have at least three [x, y] points");
  std::vector<Vec2> pts;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      schema_error(std::string(what) + " points must be [x, y]");
    pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  Polygon hull = convex_hull(pts);
  if (hull.size() < 3 || polygon_area(hull) <= 0.0)
    throw ScenarioError(ScenarioError::Kind::InvalidDimension,
                        std::string(what) + " has zero area");
  return hull;
}

json polygon_to(const Polygon& poly) {
  json out = json::array();
  for (const auto& p : poly) out.push_back(json::array({p.x(), p.y()}));
  return out;
}

std::vector<std::uint8_t> decode_row(const std::string& text, int width, int row) {
  std::vector<std::uint8_t> cells;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) schema_error("grid row " + std::to_string(row) + " token '" + token + "'");
    long count = 0;
    int value = 0;
    try {
      count = std::stol(token.substr(0, colon));
      value = std::stoi(token.substr(colon + 1));
    } catch (const std::exception&) {
      schema_error("grid row " + std::to_string(row) + " token '" + token + "'");
    }
    if (count <= 0 || (value != 0 && value != 1))
      schema_error("grid row " + std::to_string(row) + " token '" + token + "'");
    cells.insert(cells.end(), static_cast<std::size_t>(count), static_cast<std::uint8_t>(value));
  }
  if (static_cast<int>(cells.size()) != width)
    schema_error("grid row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                 " cells, expected " + std::to_string(width));
  return cells;
}

}  // namespace

std::string encode_row(const OccupancyGrid& grid, int row) {
  std::string out;
  int ix = 0;
  while (ix < grid.width) {
    const bool v = grid.occupied(ix, row);
    int run = 0;
    while (ix < grid.width && grid.occupied(ix, row) == v) {
      ++ix;
      ++run;
    }
    if (!out.empty()) out += ',';
    out += std::to_string(run) + ':' + (v ? '1' : '0');
  }
  return out;
}

void validate_scenario(const Scenario& s, double global_inflation) {
  const auto& g = s.grid;
  if (!(g.resolution > 0.0) || g.width <= 0 || g.height <= 0)
    throw ScenarioError(ScenarioError::Kind::InvalidDimension, "grid dimensions must be positive");
  for (const auto& o : s.objects) {
    if (o.height < 0.0 || !(o.grasp_width > 0.0))
      throw ScenarioError(ScenarioError::Kind::InvalidDimension,
                          "object '" + o.id + "' has non-positive dimensions");
  }
  if (!(s.bin.height > 0.0))
    throw ScenarioError(ScenarioError::Kind::InvalidDimension, "bin height must be positive");
  const auto& n = s.noise;
  if (n.range_sigma_per_m < 0 || n.sunlight_artifact_rate < 0 || n.wind_event_probability < 0 ||
      n.wind_event_probability > 1 || n.wind_disc_radius < 0)
    throw ScenarioError(ScenarioError::Kind::InvalidDimension, "noise parameters out of range");
  const auto& e = s.execution;
  for (double p : {e.plan_fail, e.empty_close, e.slip_lift})
    if (p < 0.0 || p > 1.0)
      throw ScenarioError(ScenarioError::Kind::InvalidDimension, "execution probability out of range");

  const Costmap global = build_costmap(g, global_inflation);
  if (!global.free_at(s.pick_point.position()))
    throw ScenarioError(ScenarioError::Kind::GoalInCollision, "goal in collision: pick_point");
  if (!global.free_at(s.drop_point.position()))
    throw ScenarioError(ScenarioError::Kind::GoalInCollision, "goal in collision: drop_point");
}

Scenario parse_scenario(const std::string& text, double global_inflation) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error("document must be an object");
  const json& version = require(doc, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion)
    schema_error("unsupported schema_version");
  if (doc.contains("kind") && doc.at("kind") != "scenario")
    schema_error("kind must be 'scenario'");

  Scenario s;
  if (doc.contains("name")) s.name = doc.at("name").get<std::string>();

  const json& grid = require(doc, "grid");
  s.grid.resolution = number(grid, "resolution");
  s.grid.width = static_cast<int>(number(grid, "width"));
  s.grid.height = static_cast<int>(number(grid, "height"));
  if (!(s.grid.resolution > 0.0) || s.grid.width <= 0 || s.grid.height <= 0)
    throw ScenarioError(ScenarioError::Kind::InvalidDimension, "grid dimensions must be positive");
  if (grid.contains("origin")) {
    const json& o = grid.at("origin");
    if (!o.is_array() || o.size() != 2) schema_error("grid origin must be [x, y]");
    s.grid.origin = Vec2(o[0].get<double>(), o[1].get<double>());
  }
  const json& rows = require(grid, "rows");
  if (!rows.is_array() || static_cast<int>(rows.size()) != s.grid.height)
    schema_error("grid rows must list exactly 'height' rows");
  s.grid.cells.reserve(static_cast<std::size_t>(s.grid.width) * s.grid.height);
  for (int r = 0; r < s.grid.height; ++r) {
    if (!rows[r].is_string()) schema_error("grid rows must be strings");
    const auto cells = decode_row(rows[r].get<std::string>(), s.grid.width, r);
    s.grid.cells.insert(s.grid.cells.end(), cells.begin(), cells.end());
  }

  const json& objects = require(doc, "objects");
  if (!objects.is_array()) schema_error("objects must be an array");
  for (const auto& o : objects) {
    RigidObject obj;
    const json& id = require(o, "id");
    if (!id.is_string()) schema_error("object id must be a string");
    obj.id = id.get<std::string>();
    for (const auto& other : s.objects)
      if (other.id == obj.id) schema_error("duplicate object id '" + obj.id + "'");
    obj.footprint = polygon_from(require(o, "footprint"), "object footprint");
    obj.height = number(o, "height");
    obj.grasp_width = min_caliper_width(obj.footprint);
    obj.location = {LocationKind::Floor, pose_from(require(o, "pose"), "object pose")};
    obj.render_suppressed = o.value("render_suppressed", false);
    s.objects.push_back(std::move(obj));
  }

  const json& bin = require(doc, "bin");
  s.bin.pose = pose_from(require(bin, "pose"), "bin pose");
  if (bin.contains("footprint")) s.bin.footprint = polygon_from(bin.at("footprint"), "bin footprint");
  s.bin.height = number_or(bin, "height", s.bin.height);

  s.start_pose = pose_from(require(doc, "start_pose"), "start_pose");
  s.pick_point = pose_from(require(doc, "pick_point"), "pick_point");
  s.drop_point = pose_from(require(doc, "drop_point"), "drop_point");
  try {
    s.task_mode = task_mode_from_string(require(doc, "task_mode").get<std::string>());
  } catch (const std::exception& e) {
    schema_error(e.what());
  }
  const json& seed = require(doc, "seed");
  if (!seed.is_number_integer()) schema_error("seed must be an integer");
  s.seed = seed.get<std::uint64_t>();

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    s.noise.range_sigma_per_m = number_or(n, "range_sigma_per_m", 0.0);
    s.noise.sunlight_artifact_rate = number_or(n, "sunlight_artifact_rate", 0.0);
    s.noise.wind_event_probability = number_or(n, "wind_event_probability", 0.0);
    s.noise.wind_disc_radius = number_or(n, "wind_disc_radius", s.noise.wind_disc_radius);
  }
  if (doc.contains("execution")) {
    const json& e = doc.at("execution");
    s.execution.plan_fail = number_or(e, "plan_fail", 0.0);
    s.execution.empty_close = number_or(e, "empty_close", 0.0);
    s.execution.slip_lift = number_or(e, "slip_lift", 0.0);
  }
  if (doc.contains("obstacles")) {
    for (const auto& o : doc.at("obstacles")) {
      Obstacle obs;
      obs.footprint = polygon_from(require(o, "footprint"), "obstacle footprint");
      obs.height = number_or(o, "height", obs.height);
      s.obstacles.push_back(std::move(obs));
    }
  }
  validate_scenario(s, global_inflation);
  return s;
}

Scenario load_scenario(const std::string& path, double global_inflation) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Io, "cannot read scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), global_inflation);
}

std::string dump_scenario(const Scenario& s) {
  json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["kind"] = "scenario";
  doc["name"] = s.name;
  json rows = json::array();
  for (int r = 0; r < s.grid.height; ++r) rows.push_back(encode_row(s.grid, r));
  doc["grid"] = {{"resolution", s.grid.resolution},
                 {"width", s.grid.width},
                 {"height", s.grid.height},
                 {"origin", json::array({s.grid.origin.x(), s.grid.origin.y()})},
                 {"rows", rows}};
  json objects = json::array();
  for (const auto& o : s.objects) {
    json j = {{"id", o.id},
              {"footprint", polygon_to(o.footprint)},
              {"height", o.height},
              {"pose", pose_to(o.location.pose)}};
    if (o.render_suppressed) j["render_suppressed"] = true;
    objects.push_back(j);
  }
  doc["objects"] = objects;
  doc["bin"] = {{"pose", pose_to(s.bin.pose)},
                {"footprint", polygon_to(s.bin.footprint)},
                {"height", s.bin.height}};
  doc["start_pose"] = pose_to(s.start_pose);
  doc["pick_point"] = pose_to(s.pick_point);
  doc["drop_point"] = pose_to(s.drop_point);
  doc["task_mode"] = to_string(s.task_mode);
  doc["seed"] = s.seed;
  doc["noise"] = {{"range_sigma_per_m", s.noise.range_sigma_per_m},
                  {"sunlight_artifact_rate", s.noise.sunlight_artifact_rate},
                  {"wind_event_probability", s.noise.wind_event_probability},
                  {"wind_disc_radius", s.noise.wind_disc_radius}};
  doc["execution"] = {{"plan_fail", s.execution.plan_fail},
                      {"empty_close", s.execution.empty_close},
                      {"slip_lift", s.execution.slip_lift}};
  json obstacles = json::array();
  for (const auto& o : s.obstacles)
    obstacles.push_back({{"footprint", polygon_to(o.footprint)}, {"height", o.height}});
  doc["obstacles"] = obstacles;
  return doc.dump(2);
}

}  // namespace pickdrop
