#pragma once

#include "pickdrop/taskplanner.hpp"
#include "pickdrop/world.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pickdrop {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogEntry {
  std::string name;
  double length = 0.1;  // footprint extent along the object x axis
  double width = 0.05;
  double height = 0.06;
};

std::vector<CatalogEntry> default_catalog();

/// Recipe for random scenarios. Distances in meters.
struct ScenarioTemplate {
  std::string name = "template";
  double resolution = 0.1;
  double width_m = 20.0;
  double height_m = 20.0;
  bool border = true;
  std::vector<Polygon> walls;  // world frame, filled into the grid

  int object_count = 7;
  std::vector<CatalogEntry> catalog = default_catalog();
  double scatter_radius = 0.2;
  double object_gap = 0.04;      // minimum clearance between objects
  double object_offset = 1.45;   // disc center ahead of the pick pose
  double bin_offset = 1.45;      // bin center ahead of the drop pose
  double min_separation = 3.0;   // between start, pick and drop
  int random_obstacles = 0;      // dynamic obstacles unknown to the map
  double obstacle_size = 0.4;

  TaskMode mode = TaskMode::CollectAll;
  NoiseConfig noise;
  ExecutionModel execution;
  int max_tries = 2000;

  void validate() const;
};

ScenarioTemplate parse_template(const std::string& text);
ScenarioTemplate load_template(const std::string& path);
std::string dump_template(const ScenarioTemplate& tpl);

/// Start, pick and drop poses are drawn uniformly from free space of the
/// globally inflated costmap, pairwise separated and mutually reachable.
/// Objects are scattered without overlap in a disc ahead of the pick pose and
/// the bin sits ahead of the drop pose. Throws GenerationError when bounded
/// rejection sampling runs out of tries.
Scenario generate_random_scenario(const ScenarioTemplate& tpl, std::uint64_t seed);

/// Named noise profiles: "none" and "field".
NoiseConfig noise_profile(const std::string& name);
ExecutionModel execution_profile(const std::string& name);

struct BatchOptions {
  std::optional<TaskMode> mode;  // overrides each scenario's mode
  std::string set = "default";
  TaskConfig task;
  int parallelism = 1;
};

/// Runs every scenario independently. Record order follows the input order
/// for any parallelism; a trial that throws is recorded as failed.
std::vector<TrialRecord> run_batch(const std::vector<Scenario>& scenarios, const BatchOptions& opts);

std::string record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const std::string& line);
void save_records(const std::string& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> load_records(const std::string& path);

}  // namespace pickdrop
