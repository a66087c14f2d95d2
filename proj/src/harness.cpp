#include "pickdrop/harness.hpp"

#include "pickdrop/navigation.hpp"
#include "pickdrop/scenario_io.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace pickdrop {

using nlohmann::json;

std::vector<CatalogEntry> default_catalog() {
  return {
      {"can", 0.066, 0.066, 0.12},
      {"carton", 0.10, 0.05, 0.06},
      {"bar", 0.15, 0.04, 0.05},
      {"trowel", 0.25, 0.035, 0.04},
      {"fruit", 0.07, 0.07, 0.07},
      {"bag", 0.12, 0.06, 0.08},
  };
}

void ScenarioTemplate::validate() const {
  if (!(resolution > 0.0) || !(width_m > 0.0) || !(height_m > 0.0))
    throw std::invalid_argument("template map dimensions must be positive");
  if (object_count < 0) throw std::invalid_argument("object count must be non-negative");
  if (object_count > 0 && catalog.empty()) throw std::invalid_argument("object catalog is empty");
  for (const auto& c : catalog)
    if (!(c.length > 0.0) || !(c.width > 0.0) || !(c.height > 0.0))
      throw std::invalid_argument("catalog entry '" + c.name + "' needs positive dimensions");
  if (scatter_radius < 0.0 || min_separation < 0.0 || object_gap < 0.0 || random_obstacles < 0)
    throw std::invalid_argument("template distances and counts must be non-negative");
  if (max_tries < 1) throw std::invalid_argument("max_tries must be at least 1");
}

namespace {

[[noreturn]] void template_error(const std::string& what) {
  throw ScenarioError(ScenarioError::Kind::Schema, "template: " + what);
}

Polygon polygon_of(const json& j) {
  std::vector<Vec2> pts;
  for (const auto& p : j) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  Polygon hull = convex_hull(pts);
  if (hull.size() < 3) template_error("wall polygon needs three non-collinear points");
  return hull;
}

json polygon_json(const Polygon& poly) {
  json out = json::array();
  for (const auto& p : poly) out.push_back({p.x(), p.y()});
  return out;
}

}  // namespace

ScenarioTemplate parse_template(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    template_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "template") template_error("kind must be \"template\"");
  ScenarioTemplate t;
  try {
    t.name = j.value("name", t.name);
    if (j.contains("map")) {
      const json& m = j["map"];
      t.resolution = m.value("resolution", t.resolution);
      t.width_m = m.value("width_m", t.width_m);
      t.height_m = m.value("height_m", t.height_m);
      t.border = m.value("border", t.border);
      for (const auto& w : m.value("walls", json::array())) t.walls.push_back(polygon_of(w));
    }
    if (j.contains("objects")) {
      const json& o = j["objects"];
      t.object_count = o.value("count", t.object_count);
      t.scatter_radius = o.value("scatter_radius", t.scatter_radius);
      t.object_gap = o.value("gap", t.object_gap);
      if (o.contains("catalog")) {
        t.catalog.clear();
        for (const auto& c : o["catalog"])
          t.catalog.push_back({c.value("name", "object"), c.at("length").get<double>(),
                               c.at("width").get<double>(), c.at("height").get<double>()});
      }
    }
    t.min_separation = j.value("min_separation", t.min_separation);
    t.random_obstacles = j.value("random_obstacles", t.random_obstacles);
    if (j.contains("mode")) t.mode = task_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("noise")) {
      const json& n = j["noise"];
      if (n.is_string()) {
        t.noise = noise_profile(n.get<std::string>());
      } else {
        t.noise.range_sigma_per_m = n.value("range_sigma_per_m", 0.0);
        t.noise.sunlight_artifact_rate = n.value("sunlight_artifact_rate", 0.0);
        t.noise.wind_event_probability = n.value("wind_event_probability", 0.0);
        t.noise.wind_disc_radius = n.value("wind_disc_radius", t.noise.wind_disc_radius);
      }
    }
    if (j.contains("execution")) {
      const json& e = j["execution"];
      if (e.is_string()) {
        t.execution = execution_profile(e.get<std::string>());
      } else {
        t.execution.plan_fail = e.value("plan_fail", 0.0);
        t.execution.empty_close = e.value("empty_close", 0.0);
        t.execution.slip_lift = e.value("slip_lift", 0.0);
      }
    }
  } catch (const json::exception& e) {
    template_error(e.what());
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(ScenarioError::Kind::InvalidDimension, std::string("template: ") + e.what());
  }
  return t;
}

ScenarioTemplate load_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Io, "cannot open template '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_template(ss.str());
}

std::string dump_template(const ScenarioTemplate& t) {
  json walls = json::array();
  for (const auto& w : t.walls) walls.push_back(polygon_json(w));
  json catalog = json::array();
  for (const auto& c : t.catalog)
    catalog.push_back({{"name", c.name}, {"length", c.length}, {"width", c.width}, {"height", c.height}});
  json j = {
      {"kind", "template"},
      {"name", t.name},
      {"map", {{"resolution", t.resolution}, {"width_m", t.width_m}, {"height_m", t.height_m},
               {"border", t.border}, {"walls", walls}}},
      {"objects", {{"count", t.object_count}, {"scatter_radius", t.scatter_radius},
                   {"gap", t.object_gap}, {"catalog", catalog}}},
      {"min_separation", t.min_separation},
      {"random_obstacles", t.random_obstacles},
      {"mode", to_string(t.mode)},
      {"noise", {{"range_sigma_per_m", t.noise.range_sigma_per_m},
                 {"sunlight_artifact_rate", t.noise.sunlight_artifact_rate},
                 {"wind_event_probability", t.noise.wind_event_probability},
                 {"wind_disc_radius", t.noise.wind_disc_radius}}},
      {"execution", {{"plan_fail", t.execution.plan_fail},
                     {"empty_close", t.execution.empty_close},
                     {"slip_lift", t.execution.slip_lift}}},
  };
  return j.dump(2) + "\n";
}

NoiseConfig noise_profile(const std::string& name) {
  if (name == "none") return {};
  if (name == "field") return {0.002, 20.0, 0.05, 0.1};
  throw std::invalid_argument("unknown noise profile '" + name + "'");
}

ExecutionModel execution_profile(const std::string& name) {
  if (name == "none") return {};
  if (name == "field") return {0.05, 0.10, 0.05};
  throw std::invalid_argument("unknown execution profile '" + name + "'");
}

namespace {

OccupancyGrid template_grid(const ScenarioTemplate& t) {
  const int w = static_cast<int>(std::lround(t.width_m / t.resolution));
  const int h = static_cast<int>(std::lround(t.height_m / t.resolution));
  if (w <= 0 || h <= 0) throw GenerationError("template map has no cells");
  OccupancyGrid grid = OccupancyGrid::empty(t.resolution, w, h);
  if (t.border) {
    for (int ix = 0; ix < w; ++ix) {
      grid.set(ix, 0, true);
      grid.set(ix, h - 1, true);
    }
    for (int iy = 0; iy < h; ++iy) {
      grid.set(0, iy, true);
      grid.set(w - 1, iy, true);
    }
  }
  for (const auto& wall : t.walls) grid.fill_polygon(wall);
  return grid;
}

bool footprint_clear(const Costmap& cm, const Polygon& poly) {
  Vec2 lo = poly.front(), hi = poly.front();
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double r = cm.base.resolution;
  for (double x = lo.x(); x <= hi.x() + 1e-9; x += r / 2)
    for (double y = lo.y(); y <= hi.y() + 1e-9; y += r / 2)
      if (!cm.free_at({x, y})) return false;
  return true;
}

bool reachable(const Costmap& cm, const Pose2D& a, const Pose2D& b) {
  try {
    plan_global(cm, a, b);
    return true;
  } catch (const PlanningError&) {
    return false;
  }
}

}  // namespace

Scenario generate_random_scenario(const ScenarioTemplate& tpl, std::uint64_t seed) {
  tpl.validate();
  Rng rng(seed);
  Scenario sc;
  sc.name = tpl.name;
  sc.seed = seed;
  sc.task_mode = tpl.mode;
  sc.noise = tpl.noise;
  sc.execution = tpl.execution;
  sc.grid = template_grid(tpl);
  const Costmap global = build_costmap(sc.grid, 2.0);
  const Costmap local = build_costmap(sc.grid, 0.5);
  const double xmax = sc.grid.width * sc.grid.resolution;
  const double ymax = sc.grid.height * sc.grid.resolution;
  std::uniform_real_distribution<double> ux(0.0, xmax), uy(0.0, ymax),
      uh(-std::numbers::pi, std::numbers::pi), unit(0.0, 1.0);
  const RobotModel model;

  auto free_pose = [&]() -> std::optional<Pose2D> {
    for (int i = 0; i < tpl.max_tries; ++i) {
      const Pose2D p = Pose2D::make(sc.grid.origin.x() + ux(rng), sc.grid.origin.y() + uy(rng), uh(rng));
      if (global.free_at(p.position())) return p;
    }
    return std::nullopt;
  };
  // The work area ahead of a pose must be clear for the body and the target.
  auto work_area_clear = [&](const Pose2D& p, double ahead) {
    const Polygon area = transform_polygon(
        rectangle(ahead + 0.5 + model.body_length / 2, model.body_width),
        p.compose({(ahead + 0.5 - model.body_length / 2) / 2, 0.0, 0.0}));
    return footprint_clear(local, area);
  };

  for (int attempt = 0; attempt < tpl.max_tries; ++attempt) {
    const auto start = free_pose();
    const auto pick = free_pose();
    const auto drop = free_pose();
    if (!start || !pick || !drop)
      throw GenerationError("no free space for start, pick and drop poses");
    const double sep = tpl.min_separation;
    if ((start->position() - pick->position()).norm() < sep ||
        (start->position() - drop->position()).norm() < sep ||
        (pick->position() - drop->position()).norm() < sep)
      continue;
    if (!work_area_clear(*pick, tpl.object_offset + tpl.scatter_radius) ||
        !work_area_clear(*drop, tpl.bin_offset + 0.3))
      continue;

    sc.start_pose = *start;
    sc.pick_point = *pick;
    sc.drop_point = *drop;
    sc.bin = BinSpec{};
    sc.bin.pose = drop->compose({tpl.bin_offset, 0.0, 0.0});
    if ((pick->position() - sc.bin.pose.position()).norm() < sep) continue;

    // Objects.
    sc.objects.clear();
    const Vec2 center = pick->to_world({tpl.object_offset, 0.0});
    std::uniform_int_distribution<std::size_t> which(0, tpl.catalog.empty() ? 0 : tpl.catalog.size() - 1);
    bool placed_all = true;
    for (int k = 0; k < tpl.object_count && placed_all; ++k) {
      const CatalogEntry& entry = tpl.catalog[which(rng)];
      RigidObject obj;
      obj.id = entry.name + "-" + std::to_string(k);
      obj.footprint = rectangle(entry.length, entry.width);
      obj.height = entry.height;
      obj.grasp_width = min_caliper_width(obj.footprint);
      bool placed = false;
      for (int i = 0; i < 500 && !placed; ++i) {
        const double r = tpl.scatter_radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        obj.location = {LocationKind::Floor,
                        Pose2D::make(center.x() + r * std::cos(phi), center.y() + r * std::sin(phi), uh(rng))};
        const Polygon fp = transform_polygon(obj.footprint, obj.location.pose);
        placed = true;
        for (const auto& other : sc.objects)
          if (polygon_distance(fp, transform_polygon(other.footprint, other.location.pose)) < tpl.object_gap) {
            placed = false;
            break;
          }
      }
      if (placed)
        sc.objects.push_back(obj);
      else
        placed_all = false;
    }
    if (!placed_all) continue;

    // Dynamic obstacles away from every point of interest.
    sc.obstacles.clear();
    for (int k = 0; k < tpl.random_obstacles; ++k) {
      for (int i = 0; i < tpl.max_tries; ++i) {
        const Vec2 c(sc.grid.origin.x() + ux(rng), sc.grid.origin.y() + uy(rng));
        const Polygon fp = transform_polygon(rectangle(tpl.obstacle_size, tpl.obstacle_size),
                                             Pose2D::make(c.x(), c.y(), uh(rng)));
        const bool away = (c - start->position()).norm() > 2.0 && (c - pick->position()).norm() > 2.0 &&
                          (c - drop->position()).norm() > 2.0 && (c - center).norm() > 2.0 &&
                          (c - sc.bin.pose.position()).norm() > 2.0;
        if (away && footprint_clear(local, fp)) {
          sc.obstacles.push_back({fp, 0.5});
          break;
        }
      }
    }
    // Legs must stay feasible once every object, the bin and all obstacles are seen.
    Costmap sensed = global;
    const World world(sc);
    const std::vector<bool> all(world.obstacles.size() + 1 + world.objects.size(), true);
    for (const auto& fp : known_footprints(world, all)) add_obstacle(sensed, fp, FollowConfig{}.local_inflation);
    if (!reachable(sensed, *start, *pick) || !reachable(sensed, *pick, *drop) ||
        !reachable(sensed, *drop, *pick))
      continue;
    return sc;
  }
  throw GenerationError("could not place start, pick and drop poses for template '" + tpl.name +
                        "' within " + std::to_string(tpl.max_tries) + " tries");
}

std::vector<TrialRecord> run_batch(const std::vector<Scenario>& scenarios, const BatchOptions& opts) {
  if (scenarios.empty()) throw std::invalid_argument("batch needs at least one scenario");
  opts.task.validate();
  std::vector<TrialRecord> out(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      const Scenario& sc = scenarios[i];
      TaskSpec spec = TaskSpec::from(sc);
      if (opts.mode) spec.mode = *opts.mode;
      TrialRecord rec;
      try {
        validate_scenario(sc);
        rec = run_task(sc, spec, opts.task).record;
      } catch (const std::exception& e) {
        rec.scenario = sc.name;
        rec.seed = sc.seed;
        rec.mode = spec.mode;
        rec.outcome = std::string("error: ") + e.what();
      }
      rec.set = opts.set;
      out[i] = std::move(rec);
    }
  };
  const int n = std::max(1, std::min<int>(opts.parallelism, static_cast<int>(scenarios.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

namespace {

json legs_json(const LegStats& s) { return {s.legs, s.reached, s.plans}; }
LegStats legs_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }
json grasps_json(const GraspStats& s) { return {s.attempts, s.successes}; }
GraspStats grasps_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }
json pose_json(const Pose2D& p) { return {p.x, p.y, p.heading}; }
Pose2D pose_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

LocationKind location_from(const std::string& s) {
  for (auto k : {LocationKind::Floor, LocationKind::Gripper, LocationKind::Basket, LocationKind::Bin})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown location '" + s + "'");
}

std::pair<Process, Site> duration_key(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("bad duration key '" + s + "'");
  const std::string proc = s.substr(dot + 1), site = s.substr(0, dot);
  for (auto p : kProcesses)
    if (proc == to_string(p)) return {p, site == "pick" ? Site::Pick : Site::Drop};
  throw std::invalid_argument("bad duration key '" + s + "'");
}

}  // namespace

std::string record_to_json(const TrialRecord& r) {
  nlohmann::ordered_json j;
  j["set"] = r.set;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["mode"] = to_string(r.mode);
  j["pick_nav"] = legs_json(r.pick_nav);
  j["drop_nav"] = legs_json(r.drop_nav);
  j["pick_grasp"] = grasps_json(r.pick_grasp);
  j["drop_grasp"] = grasps_json(r.drop_grasp);
  j["task_success"] = r.task_success;
  j["outcome"] = r.outcome;
  j["steps"] = r.steps;
  j["total_time"] = r.total_time;
  json census = json::object();
  for (const auto& [k, v] : r.final_census) census[to_string(k)] = v;
  j["final_census"] = census;
  json durations = json::object();
  for (const auto& [key, samples] : r.durations)
    durations[std::string(to_string(key.second)) + "." + to_string(key.first)] = samples;
  j["durations"] = durations;
  j["start"] = pose_json(r.start);
  j["pick"] = pose_json(r.pick);
  j["drop"] = pose_json(r.drop);
  json traj = json::array();
  for (const auto& p : r.trajectory) traj.push_back({p.x(), p.y()});
  j["trajectory"] = traj;
  return j.dump();
}

TrialRecord record_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    TrialRecord r;
    r.set = j.at("set").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mode = task_mode_from_string(j.at("mode").get<std::string>());
    r.pick_nav = legs_from(j.at("pick_nav"));
    r.drop_nav = legs_from(j.at("drop_nav"));
    r.pick_grasp = grasps_from(j.at("pick_grasp"));
    r.drop_grasp = grasps_from(j.at("drop_grasp"));
    r.task_success = j.at("task_success").get<bool>();
    r.outcome = j.at("outcome").get<std::string>();
    r.steps = j.at("steps").get<int>();
    r.total_time = j.at("total_time").get<double>();
    for (const auto& [k, v] : j.at("final_census").items()) r.final_census[location_from(k)] = v.get<int>();
    for (const auto& [k, v] : j.at("durations").items()) r.durations[duration_key(k)] = v.get<std::vector<double>>();
    r.start = pose_from(j.at("start"));
    r.pick = pose_from(j.at("pick"));
    r.drop = pose_from(j.at("drop"));
    for (const auto& p : j.at("trajectory")) r.trajectory.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed trial record: ") + e.what());
  }
}

void save_records(const std::string& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write records to '" + path + "'");
  for (const auto& r : records) out << record_to_json(r) << '\n';
  if (!out) throw std::runtime_error("failed writing records to '" + path + "'");
}

std::vector<TrialRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records '" + path + "'");
  std::vector<TrialRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pickdrop
