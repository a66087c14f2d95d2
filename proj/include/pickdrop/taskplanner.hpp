#pragma once

#include "pickdrop/grasping.hpp"
#include "pickdrop/navigation.hpp"
#include "pickdrop/perception.hpp"
#include "pickdrop/world.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pickdrop {

enum class Phase {
  MovingToPick,
  AdjustingAtPick,
  Picking,
  MovingToDrop,
  AdjustingAtDrop,
  Dropping,
  Done,
  Failed
};

enum class Event {
  LegReached,
  LegFailed,
  Adjusted,
  AdjustStalled,
  ObjectPicked,
  ObjectDropped,
  GraspFailed,
  NoGraspsFound
};

const char* to_string(Phase phase);
const char* to_string(Event event);

struct TaskSpec {
  TaskMode mode = TaskMode::CollectAll;
  Pose2D pick_point;
  Pose2D drop_point;

  static TaskSpec from(const Scenario& scenario);
};

struct RetryPolicy {
  int max_grasp_attempts_per_object = 5;
  int max_replans_per_leg = 5;
  int max_cycles = 20;

  void validate() const;
};

struct EventRecord {
  double time = 0.0;
  Phase phase = Phase::MovingToPick;  // phase the event occurred in
  std::string event;
  std::string payload;
};

struct TaskState {
  Phase phase = Phase::MovingToPick;
  TaskMode mode = TaskMode::CollectAll;
  std::string failure_reason;
  double time = 0.0;

  int cycles = 0;                   // pick legs started
  int failed_plans_this_leg = 0;
  int failed_attempts_this_object = 0;
  int consecutive_misses = 0;       // sampler found nothing usable
  int steps = 0;
  std::map<LocationKind, int> census;
  std::vector<EventRecord> log;
};

class IllegalEvent : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Single documented transition; throws IllegalEvent for any other pair.
TaskState step_fsm(TaskState state, Event event);

enum class Termination { Continue, Done, Failed };

struct TerminationResult {
  Termination status = Termination::Continue;
  std::string reason;
};

/// Done when every object is in the bin or the FSM reached Done; Failed when
/// the FSM failed or a budget is exhausted.
TerminationResult termination_check(const TaskState& state, const RetryPolicy& policy);

/// Upper bound on FSM steps implied by the budgets for `objects` objects.
long long step_bound(const RetryPolicy& policy, std::size_t objects);

struct Gaussian {
  double mean = 0.0;
  double sd = 0.0;
};

enum class Process { RegisterCloud, CalculateGrasp, ExecuteGrasp, NavigateToPoint };
enum class Site { Pick, Drop };

inline constexpr std::array<Process, 4> kProcesses{Process::RegisterCloud, Process::CalculateGrasp,
                                                   Process::ExecuteGrasp, Process::NavigateToPoint};
const char* to_string(Process process);
const char* to_string(Site site);

/// Simulated clock. Navigation time follows from geometry; the other
/// processes are Gaussian draws truncated at zero.
struct TimingModel {
  double velocity = 0.5;
  Gaussian register_pick{3.78, 0.21};
  Gaussian register_drop{33.20, 9.00};
  Gaussian calculate_pick{10.14, 5.41};
  Gaussian calculate_drop{17.72, 8.05};
  Gaussian execute_pick{48.12, 7.09};
  Gaussian execute_drop{50.86, 13.72};

  const Gaussian& params(Process process, Site site) const;
  double draw(Process process, Site site, Rng& rng) const;
  double navigation(double path_length) const { return path_length / velocity; }
  void validate() const;
};

struct LegStats {
  int legs = 0;
  int reached = 0;
  int plans = 0;
};

struct GraspStats {
  int attempts = 0;
  int successes = 0;
};

struct TrialRecord {
  std::string set = "default";
  std::string scenario;
  std::uint64_t seed = 0;
  TaskMode mode = TaskMode::CollectAll;
  LegStats pick_nav, drop_nav;
  GraspStats pick_grasp, drop_grasp;
  bool task_success = false;
  std::string outcome;  // "Done", "left behind", or the failure reason
  int steps = 0;
  double total_time = 0.0;
  std::map<LocationKind, int> final_census;
  // Duration samples, one per occurrence, keyed by process and site.
  std::map<std::pair<Process, Site>, std::vector<double>> durations;
  Pose2D start, pick, drop;
  std::vector<Vec2> trajectory;

  bool operator==(const TrialRecord&) const;
};

struct TaskConfig {
  RetryPolicy policy;
  TimingModel timing;
  FollowConfig follow;
  BaseKinematicsConfig kinematics;
  AdjustConfig adjust;
  GripperSpec gripper;
  SamplerConfig sampler;
  DropConfig drop;
  HandCaptureModel capture;
  RenderConfig render = RenderConfig::defaults();
  std::size_t top_k = 50;
  std::size_t occlusion_threshold = 100000;
  bool keep_trajectory = true;

  /// Render density with the cluster and occlusion thresholds scaled along.
  static TaskConfig at_density(double samples_per_m2);
  void validate() const;
};

struct TaskResult {
  TaskState state;
  TrialRecord record;
};

TaskResult run_task(const Scenario& scenario, const TaskSpec& spec, const TaskConfig& cfg = {});

/// Event log as line-delimited JSON: {"t", "phase", "event", "payload"}.
void write_event_log(std::ostream& out, const std::vector<EventRecord>& log);

/// Replays transfer events from the log on top of the initial census.
std::vector<std::map<LocationKind, int>> replay_census(const std::vector<EventRecord>& log,
                                                      std::size_t object_count);

}  // namespace pickdrop
