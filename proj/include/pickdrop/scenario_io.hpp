#pragma once

#include "pickdrop/world.hpp"

#include <stdexcept>
#include <string>

namespace pickdrop {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Schema, GoalInCollision, InvalidDimension, Io };
  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Parses and validates a scenario document (JSON, `schema_version` 1).
/// Pick and drop points must be free in the costmap inflated by
/// `global_inflation`.
Scenario parse_scenario(const std::string& text, double global_inflation = 2.0);
Scenario load_scenario(const std::string& path, double global_inflation = 2.0);

/// Serializes a scenario; parse_scenario(dump_scenario(s)) == s.
std::string dump_scenario(const Scenario& scenario);

/// Run-length encoding of one grid row: "count:value" pairs joined by commas.
std::string encode_row(const OccupancyGrid& grid, int row);

/// Validates invariants of an in-memory scenario (same checks as parsing).
void validate_scenario(const Scenario& scenario, double global_inflation = 2.0);

}  // namespace pickdrop
