#include "fixtures.hpp"
#include "pickdrop/harness.hpp"
#include "pickdrop/taskplanner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <numeric>
#include <sstream>

using namespace pickdrop;

namespace {

TaskState in(Phase phase, TaskMode mode = TaskMode::CollectAll) {
  TaskState s;
  s.phase = phase;
  s.mode = mode;
  return s;
}

Phase after(Phase phase, Event e, TaskMode mode = TaskMode::CollectAll) {
  return step_fsm(in(phase, mode), e).phase;
}

Scenario small_scenario(std::uint64_t seed, int objects = 2, TaskMode mode = TaskMode::CollectAll) {
  ScenarioTemplate tpl;
  tpl.object_count = objects;
  tpl.mode = mode;
  return generate_random_scenario(tpl, seed);
}

int total(const std::map<LocationKind, int>& census) {
  int n = 0;
  for (const auto& [k, v] : census) n += v;
  return n;
}

}  // namespace

TEST_CASE("collect-all transitions") {
  CHECK(after(Phase::MovingToPick, Event::LegReached) == Phase::AdjustingAtPick);
  CHECK(after(Phase::MovingToPick, Event::LegFailed) == Phase::MovingToPick);
  CHECK(after(Phase::AdjustingAtPick, Event::Adjusted) == Phase::Picking);
  CHECK(after(Phase::Picking, Event::ObjectPicked) == Phase::Picking);
  CHECK(after(Phase::Picking, Event::GraspFailed) == Phase::Picking);
  CHECK(after(Phase::Picking, Event::NoGraspsFound) == Phase::MovingToDrop);
  CHECK(after(Phase::MovingToDrop, Event::LegReached) == Phase::AdjustingAtDrop);
  CHECK(after(Phase::AdjustingAtDrop, Event::Adjusted) == Phase::Dropping);
  CHECK(after(Phase::Dropping, Event::ObjectDropped) == Phase::Dropping);
  CHECK(after(Phase::Dropping, Event::NoGraspsFound) == Phase::Done);
  const TaskState stalled = step_fsm(in(Phase::AdjustingAtDrop), Event::AdjustStalled);
  CHECK(stalled.phase == Phase::Failed);
  CHECK(stalled.failure_reason == "adjust stalled");
}

TEST_CASE("one-by-one transitions") {
  const auto m = TaskMode::OneByOne;
  CHECK(after(Phase::Picking, Event::ObjectPicked, m) == Phase::MovingToDrop);
  CHECK(after(Phase::Picking, Event::NoGraspsFound, m) == Phase::Done);
  CHECK(after(Phase::Dropping, Event::ObjectDropped, m) == Phase::MovingToPick);
  CHECK(after(Phase::Dropping, Event::NoGraspsFound, m) == Phase::MovingToPick);
}

TEST_CASE("undocumented pairs are rejected") {
  const Phase phases[] = {Phase::MovingToPick, Phase::AdjustingAtPick, Phase::Picking, Phase::MovingToDrop,
                          Phase::AdjustingAtDrop, Phase::Dropping, Phase::Done, Phase::Failed};
  const Event events[] = {Event::LegReached, Event::LegFailed, Event::Adjusted, Event::AdjustStalled,
                          Event::ObjectPicked, Event::ObjectDropped, Event::GraspFailed, Event::NoGraspsFound};
  int legal = 0;
  for (auto p : phases)
    for (auto e : events) {
      try {
        step_fsm(in(p), e);
        ++legal;
      } catch (const IllegalEvent&) {
      }
    }
  // Two per travel phase, two per adjust phase, three per manipulation phase.
  CHECK(legal == 14);
  CHECK_THROWS_AS(step_fsm(in(Phase::Done), Event::LegReached), IllegalEvent);
  CHECK_THROWS_AS(step_fsm(in(Phase::MovingToPick), Event::ObjectPicked), IllegalEvent);
  CHECK_THROWS_AS(step_fsm(in(Phase::Dropping), Event::ObjectPicked), IllegalEvent);
}

TEST_CASE("termination") {
  const RetryPolicy policy;
  TaskState s = in(Phase::Picking);
  s.census = {{LocationKind::Floor, 2}};
  CHECK(termination_check(s, policy).status == Termination::Continue);
  s.census = {{LocationKind::Bin, 2}};
  CHECK(termination_check(s, policy).status == Termination::Done);
  s.census = {{LocationKind::Floor, 2}};

  TaskState plans = s;
  plans.failed_plans_this_leg = policy.max_replans_per_leg + 1;
  CHECK(termination_check(plans, policy).reason == "replan budget");
  TaskState grasps = s;
  grasps.failed_attempts_this_object = policy.max_grasp_attempts_per_object;
  CHECK(termination_check(grasps, policy).reason == "grasp budget");
  TaskState cycles = s;
  cycles.cycles = policy.max_cycles + 1;
  CHECK(termination_check(cycles, policy).reason == "cycle budget");
  TaskState failed = in(Phase::Failed);
  failed.failure_reason = "adjust stalled";
  CHECK(termination_check(failed, policy).status == Termination::Failed);
}

TEST_CASE("step bound grows with objects and budgets") {
  RetryPolicy p;
  CHECK(step_bound(p, 3) > step_bound(p, 2));
  RetryPolicy q = p;
  q.max_cycles = 40;
  CHECK(step_bound(q, 2) > step_bound(p, 2));
  CHECK(step_bound(p, 0) > 0);
}

TEST_CASE("navigation time is path length over velocity") {
  const TimingModel t;
  CHECK(t.navigation(5.0) == 10.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double l = u(rng);
    CHECK(t.navigation(l) == l / 0.5);
  }
  CHECK_THROWS_AS(t.params(Process::NavigateToPoint, Site::Pick), std::invalid_argument);
}

TEST_CASE("timing draws match the configured distributions") {
  const TimingModel t;
  Rng rng(2024);
  const int n = 1000;
  for (auto p : {Process::RegisterCloud, Process::CalculateGrasp, Process::ExecuteGrasp})
    for (auto s : {Site::Pick, Site::Drop}) {
      const Gaussian g = t.params(p, s);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = t.draw(p, s, rng);
        CHECK(d >= 0.0);
        sum += d;
      }
      CAPTURE(to_string(p));
      CAPTURE(to_string(s));
      CHECK(std::abs(sum / n - g.mean) <= 2.0 * g.sd / std::sqrt(double(n)));
    }
  TimingModel bad;
  bad.velocity = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("noiseless collect-all run clears the floor") {
  const Scenario sc = small_scenario(100);
  const auto res = run_task(sc, TaskSpec::from(sc));
  CHECK(res.state.phase == Phase::Done);
  CHECK(res.record.task_success);
  CHECK(res.record.final_census == std::map<LocationKind, int>{{LocationKind::Bin, 2}});
  CHECK(res.record.steps <= step_bound(RetryPolicy{}, sc.objects.size()));

  // Every reached leg logs its length; the navigation samples follow from it.
  std::vector<double> lengths;
  for (const auto& e : res.state.log)
    if (e.event == "LegReached") lengths.push_back(std::stod(e.payload.substr(e.payload.find('=') + 1)));
  std::vector<double> nav;
  for (auto s : {Site::Pick, Site::Drop})
    for (double d : res.record.durations.at({Process::NavigateToPoint, s})) nav.push_back(d);
  REQUIRE(nav.size() == lengths.size());
  std::sort(nav.begin(), nav.end());
  std::sort(lengths.begin(), lengths.end());
  for (std::size_t i = 0; i < nav.size(); ++i) CHECK(nav[i] == doctest::Approx(lengths[i] / 0.5).epsilon(1e-3));

  // Replaying transfers conserves the object count at every step.
  const auto replay = replay_census(res.state.log, sc.objects.size());
  for (const auto& c : replay) CHECK(total(c) == 2);
  CHECK(replay.back() == res.record.final_census);
}

TEST_CASE("runs are deterministic for a fixed scenario") {
  const Scenario sc = small_scenario(101, 2, TaskMode::OneByOne);
  const auto a = run_task(sc, TaskSpec::from(sc));
  const auto b = run_task(sc, TaskSpec::from(sc));
  CHECK(a.record == b.record);
  std::ostringstream la, lb;
  write_event_log(la, a.state.log);
  write_event_log(lb, b.state.log);
  CHECK(la.str() == lb.str());

  std::istringstream lines(la.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("t"));
    CHECK(j.contains("phase"));
    CHECK(j.contains("event"));
    CHECK(j.contains("payload"));
    ++n;
  }
  CHECK(n == static_cast<int>(a.state.log.size()));
}

TEST_CASE("a closed gripper budget ends in failure within bounds") {
  Scenario sc = small_scenario(102, 1);
  sc.execution.empty_close = 1.0;
  const auto res = run_task(sc, TaskSpec::from(sc));
  CHECK(res.state.phase == Phase::Failed);
  CHECK_FALSE(res.record.task_success);
  CHECK(res.record.outcome == "grasp budget");
  CHECK(res.record.pick_grasp.successes == 0);
  CHECK(res.record.pick_grasp.attempts == RetryPolicy{}.max_grasp_attempts_per_object);
  CHECK(total(res.record.final_census) == 1);
}

TEST_CASE("malformed transfer records are rejected") {
  std::vector<EventRecord> log{{0.0, Phase::Picking, "Transfer", "garbage"}};
  CHECK_THROWS_AS(replay_census(log, 1), std::invalid_argument);
}
