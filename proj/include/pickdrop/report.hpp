#pragma once

#include "pickdrop/taskplanner.hpp"
#include "pickdrop/world.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pickdrop {

/// Integer percentage of num/den rounded half up. den must be positive.
int percent_half_up(long long num, long long den);

struct Fraction {
  long long num = 0;
  long long den = 0;

  std::optional<int> percent() const;
  /// "20/23 (87%)", or "0/0 (-)" when nothing was counted.
  std::string cell() const;
  bool operator==(const Fraction&) const = default;
};

struct SetMetrics {
  std::string set;
  int trials = 0;
  Fraction p_nav;    // reached pick legs over pick plans
  Fraction p_grasp;  // grasp successes over attempts at the pick point
  Fraction d_nav;
  Fraction d_grasp;
  Fraction task;     // successful trials over trials
  bool operator==(const SetMetrics&) const = default;
};

struct TimingRow {
  Process process = Process::RegisterCloud;
  Site site = Site::Pick;
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 below two samples
  bool operator==(const TimingRow&) const = default;
};

/// One trial as drawn on a map plot.
struct PlotTrial {
  std::uint64_t seed = 0;
  TaskMode mode = TaskMode::CollectAll;
  Pose2D start, pick, drop;
  std::vector<Vec2> trajectory;
  bool operator==(const PlotTrial&) const;
};

struct Report {
  std::vector<SetMetrics> sets;      // sorted by set name
  std::vector<TimingRow> timing;     // process-major, pick before drop
  std::map<std::string, std::vector<PlotTrial>> plots;  // by scenario name
  bool operator==(const Report&) const = default;
};

/// Folds records into per-set metrics and timing rows. The result does not
/// depend on record order. Throws std::invalid_argument on an empty list.
Report aggregate_metrics(const std::vector<TrialRecord>& records);

enum class ReportFormat { Csv, Txt, Svg };

/// Parses "csv,txt,svg" (any subset, any order). An empty string is no formats.
std::vector<ReportFormat> parse_formats(const std::string& text);

std::string metrics_csv(const Report& report);
std::string timing_csv(const Report& report);
std::string summary_text(const Report& report);
std::string map_svg(const std::vector<PlotTrial>& trials, const OccupancyGrid* grid);

/// Writes metrics.csv and timing.csv, summary.txt, and map_<scenario>.svg
/// per scenario. Returns the written paths. Filesystem errors are raised as
/// std::runtime_error naming the path.
std::vector<std::string> emit_report(const Report& report, const std::vector<ReportFormat>& formats,
                                     const std::string& dir,
                                     const std::map<std::string, OccupancyGrid>& maps = {});

}  // namespace pickdrop
