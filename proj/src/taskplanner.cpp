#include "pickdrop/taskplanner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace pickdrop {

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::MovingToPick: return "MovingToPick";
    case Phase::AdjustingAtPick: return "AdjustingAtPick";
    case Phase::Picking: return "Picking";
    case Phase::MovingToDrop: return "MovingToDrop";
    case Phase::AdjustingAtDrop: return "AdjustingAtDrop";
    case Phase::Dropping: return "Dropping";
    case Phase::Done: return "Done";
    case Phase::Failed: return "Failed";
  }
  return "?";
}

const char* to_string(Event event) {
  switch (event) {
    case Event::LegReached: return "LegReached";
    case Event::LegFailed: return "LegFailed";
    case Event::Adjusted: return "Adjusted";
    case Event::AdjustStalled: return "AdjustStalled";
    case Event::ObjectPicked: return "ObjectPicked";
    case Event::ObjectDropped: return "ObjectDropped";
    case Event::GraspFailed: return "GraspFailed";
    case Event::NoGraspsFound: return "NoGraspsFound";
  }
  return "?";
}

const char* to_string(Process process) {
  switch (process) {
    case Process::RegisterCloud: return "register";
    case Process::CalculateGrasp: return "calculate";
    case Process::ExecuteGrasp: return "execute";
    case Process::NavigateToPoint: return "navigate";
  }
  return "?";
}

const char* to_string(Site site) { return site == Site::Pick ? "pick" : "drop"; }

TaskSpec TaskSpec::from(const Scenario& scenario) {
  return {scenario.task_mode, scenario.pick_point, scenario.drop_point};
}

void RetryPolicy::validate() const {
  if (max_grasp_attempts_per_object < 1 || max_replans_per_leg < 1 || max_cycles < 1)
    throw std::invalid_argument("retry budgets must be at least 1");
}

TaskState step_fsm(TaskState state, Event event) {
  const bool collect_all = state.mode == TaskMode::CollectAll;
  auto illegal = [&]() -> TaskState {
    throw IllegalEvent(std::string("event ") + to_string(event) + " is illegal in phase " +
                       to_string(state.phase));
  };
  Phase next = state.phase;
  switch (state.phase) {
    case Phase::MovingToPick:
    case Phase::MovingToDrop: {
      const bool pick = state.phase == Phase::MovingToPick;
      if (event == Event::LegReached)
        next = pick ? Phase::AdjustingAtPick : Phase::AdjustingAtDrop;
      else if (event != Event::LegFailed)
        return illegal();
      break;
    }
    case Phase::AdjustingAtPick:
    case Phase::AdjustingAtDrop:
      if (event == Event::Adjusted)
        next = state.phase == Phase::AdjustingAtPick ? Phase::Picking : Phase::Dropping;
      else if (event == Event::AdjustStalled) {
        next = Phase::Failed;
        state.failure_reason = "adjust stalled";
      } else
        return illegal();
      break;
    case Phase::Picking:
      if (event == Event::ObjectPicked)
        next = collect_all ? Phase::Picking : Phase::MovingToDrop;
      else if (event == Event::NoGraspsFound)
        next = collect_all ? Phase::MovingToDrop : Phase::Done;
      else if (event != Event::GraspFailed)
        return illegal();
      break;
    case Phase::Dropping:
      if (event == Event::ObjectDropped)
        next = collect_all ? Phase::Dropping : Phase::MovingToPick;
      else if (event == Event::NoGraspsFound)
        next = collect_all ? Phase::Done : Phase::MovingToPick;
      else if (event != Event::GraspFailed)
        return illegal();
      break;
    case Phase::Done:
    case Phase::Failed:
      return illegal();
  }
  state.phase = next;
  return state;
}

TerminationResult termination_check(const TaskState& state, const RetryPolicy& policy) {
  if (state.phase == Phase::Failed) return {Termination::Failed, state.failure_reason};
  int total = 0;
  for (const auto& [kind, count] : state.census) total += count;
  const auto bin = state.census.find(LocationKind::Bin);
  if (state.phase == Phase::Done || (bin != state.census.end() && bin->second == total))
    return {Termination::Done, {}};
  if (state.failed_plans_this_leg > policy.max_replans_per_leg)
    return {Termination::Failed, "replan budget"};
  if (state.failed_attempts_this_object >= policy.max_grasp_attempts_per_object)
    return {Termination::Failed, "grasp budget"};
  if (state.cycles > policy.max_cycles) return {Termination::Failed, "cycle budget"};
  return {Termination::Continue, {}};
}

long long step_bound(const RetryPolicy& policy, std::size_t objects) {
  const long long n = static_cast<long long>(objects);
  const long long leg = policy.max_replans_per_leg + 1 + 1;  // plans plus the adjustment
  const long long site = n * (2LL * policy.max_grasp_attempts_per_object + 2) + 2;
  return static_cast<long long>(policy.max_cycles) * (2 * leg + 2 * site) + 1;
}

const Gaussian& TimingModel::params(Process process, Site site) const {
  const bool pick = site == Site::Pick;
  switch (process) {
    case Process::RegisterCloud: return pick ? register_pick : register_drop;
    case Process::CalculateGrasp: return pick ? calculate_pick : calculate_drop;
    case Process::ExecuteGrasp: return pick ? execute_pick : execute_drop;
    case Process::NavigateToPoint: break;
  }
  throw std::invalid_argument("navigation time is derived from the path");
}

double TimingModel::draw(Process process, Site site, Rng& rng) const {
  const Gaussian& g = params(process, site);
  if (g.sd == 0.0) return std::max(0.0, g.mean);
  std::normal_distribution<double> dist(g.mean, g.sd);
  return std::max(0.0, dist(rng));
}

void TimingModel::validate() const {
  if (!(velocity > 0.0)) throw std::invalid_argument("velocity must be positive");
  for (const Gaussian* g : {&register_pick, &register_drop, &calculate_pick, &calculate_drop,
                            &execute_pick, &execute_drop})
    if (!(g->mean > 0.0) || !(g->sd >= 0.0))
      throw std::invalid_argument("timing means must be positive and deviations non-negative");
}

bool TrialRecord::operator==(const TrialRecord& o) const {
  auto legs = [](const LegStats& a, const LegStats& b) {
    return a.legs == b.legs && a.reached == b.reached && a.plans == b.plans;
  };
  auto grasps = [](const GraspStats& a, const GraspStats& b) {
    return a.attempts == b.attempts && a.successes == b.successes;
  };
  return set == o.set && scenario == o.scenario && seed == o.seed && mode == o.mode &&
         legs(pick_nav, o.pick_nav) && legs(drop_nav, o.drop_nav) &&
         grasps(pick_grasp, o.pick_grasp) && grasps(drop_grasp, o.drop_grasp) &&
         task_success == o.task_success && outcome == o.outcome && steps == o.steps &&
         total_time == o.total_time && final_census == o.final_census &&
         durations == o.durations && start == o.start && pick == o.pick && drop == o.drop &&
         trajectory == o.trajectory;
}

TaskConfig TaskConfig::at_density(double samples_per_m2) {
  if (!(samples_per_m2 > 0.0)) throw std::invalid_argument("render density must be positive");
  TaskConfig cfg;
  const double scale = samples_per_m2 / cfg.render.samples_per_m2;
  cfg.render.samples_per_m2 = samples_per_m2;
  cfg.drop.min_cluster = std::max<std::size_t>(1, std::llround(10000 * scale));
  cfg.occlusion_threshold = std::max<std::size_t>(1, std::llround(100000 * scale));
  cfg.gripper.width_tolerance = std::max(cfg.gripper.width_tolerance, 1.5 * cfg.render.spacing());
  return cfg;
}

void TaskConfig::validate() const {
  policy.validate();
  timing.validate();
  follow.validate();
  gripper.validate();
  drop.validate();
  if (top_k == 0 || occlusion_threshold == 0)
    throw std::invalid_argument("top_k and occlusion threshold must be positive");
}

namespace {

std::string fmt(const char* format, double a, double b = 0.0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

// Free pose in the basket frame, clear of the walls and of other objects by
// `margin`; falls back to the basket center when the basket is too crowded.
// Random slot first; when the basket is crowded, a grid scan over two
// headings, then the same scan at a third of the margin.
Pose2D place_in_basket(const World& world, const RigidObject& obj, Rng& rng, double margin = 0.03) {
  const Polygon interior = world.model.basket_interior();
  Vec2 lo = interior.front(), hi = interior.front();
  for (const auto& p : interior) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  auto fits = [&](const Pose2D& pose, double gap) {
    const Polygon fp = transform_polygon(obj.footprint, pose);
    for (const auto& v : fp)
      if (v.x() < lo.x() + gap || v.x() > hi.x() - gap || v.y() < lo.y() + gap || v.y() > hi.y() - gap)
        return false;
    for (const auto& other : world.objects)
      if (other.location.kind == LocationKind::Basket &&
          polygon_distance(fp, transform_polygon(other.footprint, other.location.pose)) < gap)
        return false;
    return true;
  };
  std::uniform_real_distribution<double> ux(lo.x() + margin, hi.x() - margin),
      uy(lo.y() + margin, hi.y() - margin), uh(-std::numbers::pi, std::numbers::pi);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Pose2D pose = Pose2D::make(ux(rng), uy(rng), uh(rng));
    if (fits(pose, margin)) return pose;
  }
  for (const double gap : {margin, margin / 3})
    for (const double heading : {0.0, std::numbers::pi / 2})
      for (double x = lo.x(); x <= hi.x(); x += 0.01)
        for (double y = lo.y(); y <= hi.y(); y += 0.01)
          if (fits({x, y, heading}, gap)) return {x, y, heading};
  return world.model.basket_pose();
}

class Runner {
 public:
  Runner(const Scenario& sc, const TaskSpec& spec, const TaskConfig& cfg)
      : sc_(sc), spec_(spec), cfg_(cfg), world_(sc), rng_(sc.seed),
        timing_rng_(sc.seed ^ 0x9e3779b97f4a7c15ULL),
        global_static_(build_costmap(world_.grid, cfg.follow.global_inflation)),
        local_static_(build_costmap(world_.grid, cfg.follow.local_inflation)) {
    st_.mode = spec.mode;
    st_.census = world_.census();
    rec_.scenario = sc.name;
    rec_.seed = sc.seed;
    rec_.mode = spec.mode;
    rec_.start = world_.robot;
    rec_.pick = spec.pick_point;
    rec_.drop = spec.drop_point;
    if (cfg.keep_trajectory) rec_.trajectory.push_back(world_.robot.position());
  }

  TaskResult run() {
    enter(Phase::MovingToPick, Phase::Done);
    const long long bound = step_bound(cfg_.policy, world_.object_count());
    while (true) {
      const TerminationResult term = termination_check(st_, cfg_.policy);
      if (term.status == Termination::Done) {
        if (st_.phase != Phase::Done) {
          log("Terminated", "all objects in bin");
          st_.phase = Phase::Done;
        }
        break;
      }
      if (term.status == Termination::Failed) {
        if (st_.phase != Phase::Failed) log("Terminated", term.reason);
        st_.phase = Phase::Failed;
        st_.failure_reason = term.reason;
        break;
      }
      if (st_.steps >= bound) {
        log("Terminated", "step bound");
        st_.phase = Phase::Failed;
        st_.failure_reason = "step bound";
        break;
      }
      ++st_.steps;
      switch (st_.phase) {
        case Phase::MovingToPick: navigate(Site::Pick); break;
        case Phase::MovingToDrop: navigate(Site::Drop); break;
        case Phase::AdjustingAtPick:
        case Phase::AdjustingAtDrop: adjust(); break;
        case Phase::Picking: pick(); break;
        case Phase::Dropping: drop(); break;
        case Phase::Done:
        case Phase::Failed: break;
      }
      st_.census = world_.census();
    }
    return finish();
  }

 private:
  void log(const std::string& event, const std::string& payload) {
    st_.log.push_back({st_.time, st_.phase, event, payload});
  }

  void fire(Event e, const std::string& payload) {
    log(to_string(e), payload);
    const Phase before = st_.phase;
    st_ = step_fsm(std::move(st_), e);
    if (st_.phase != before) enter(st_.phase, before);
  }

  void enter(Phase phase, Phase from) {
    switch (phase) {
      case Phase::MovingToPick:
        ++st_.cycles;
        ++rec_.pick_nav.legs;
        st_.failed_plans_this_leg = 0;
        (void)from;
        break;
      case Phase::MovingToDrop:
        ++rec_.drop_nav.legs;
        st_.failed_plans_this_leg = 0;
        break;
      case Phase::Picking:
      case Phase::Dropping:
        st_.failed_attempts_this_object = 0;
        st_.consecutive_misses = 0;
        break;
      default: break;
    }
  }

  void transfer(const std::string& id, LocationKind from, const Location& to) {
    world_.apply_transfer(id, from, to);
    log("Transfer", id + " " + to_string(from) + "->" + to_string(to.kind));
  }

  void spend(Process p, Site site, double seconds) {
    st_.time += seconds;
    rec_.durations[{p, site}].push_back(seconds);
  }

  void trace(const std::vector<Vec2>& points) {
    if (!cfg_.keep_trajectory) return;
    for (const auto& p : points)
      if ((p - rec_.trajectory.back()).norm() >= 0.2) rec_.trajectory.push_back(p);
  }

  void navigate(Site site) {
    LegStats& stats = site == Site::Pick ? rec_.pick_nav : rec_.drop_nav;
    const Pose2D goal = site == Site::Pick ? spec_.pick_point : spec_.drop_point;
    Costmap global = global_static_;
    for (const auto& fp : known_footprints(world_, known_))
      add_obstacle(global, fp, cfg_.follow.local_inflation);
    ++stats.plans;
    PlanPath path;
    try {
      path = plan_global(global, world_.robot, goal);
    } catch (const PlanningError& e) {
      ++st_.failed_plans_this_leg;
      fire(Event::LegFailed, e.what());
      return;
    }
    log("Plan", fmt("length=%.3f", path.length));
    const FollowOutcome out =
        follow_path(world_, path, cfg_.follow, cfg_.kinematics, local_static_, known_);
    trace(out.trace);
    if (out.status == FollowStatus::Reached) {
      spend(Process::NavigateToPoint, site, cfg_.timing.navigation(path.length));
      ++stats.reached;
      fire(Event::LegReached, fmt("length=%.17g", path.length));
    } else {
      st_.time += cfg_.timing.navigation(out.progress);
      ++st_.failed_plans_this_leg;
      fire(Event::LegFailed, out.reason);
    }
  }

  void adjust() {
    const ScanSource scans = [this](const World& w) { return fixed_camera_scans(w, cfg_.render); };
    const AdjustOutcome a = adjust_final_pose(world_, scans, cfg_.adjust, cfg_.kinematics);
    st_.time += std::abs(a.forward) / cfg_.kinematics.max_linear_velocity +
                std::abs(a.turn) / cfg_.kinematics.max_angular_velocity;
    trace({world_.robot.position()});
    const std::string payload = fmt("forward=%.3f turn=%.4f", a.forward, a.turn);
    fire(a.status == AdjustStatus::Stalled ? Event::AdjustStalled : Event::Adjusted, payload);
  }

  struct Attempt {
    enum Kind { Miss, Failed, Held } kind = Miss;
    std::string detail;
  };

  // Samples, prunes, ranks, executes and verifies one grasp.
  Attempt grasp(const PointCloud& cloud, LocationKind support, double h_min, Site site) {
    GraspStats& stats = site == Site::Pick ? rec_.pick_grasp : rec_.drop_grasp;
    spend(Process::CalculateGrasp, site, cfg_.timing.draw(Process::CalculateGrasp, site, timing_rng_));
    std::vector<GraspCandidate> feasible;
    try {
      const auto sampled = sample_grasp_candidates(cloud, cfg_.gripper, rng_, h_min, cfg_.sampler);
      const auto ctx = FeasibilityContext::from_world(world_, support, cfg_.gripper);
      feasible = prune_infeasible(top_k(sampled, cfg_.top_k), ctx);
    } catch (const GraspError&) {
      return {Attempt::Miss, "no candidates"};
    }
    if (feasible.empty()) return {Attempt::Miss, "all candidates pruned"};
    const GraspCandidate best = select_best_grasp(feasible, RankingParams{cfg_.gripper, h_min});

    ++stats.attempts;
    spend(Process::ExecuteGrasp, site, cfg_.timing.draw(Process::ExecuteGrasp, site, timing_rng_));
    const PickResult res =
        simulate_grasp_execution(world_, best, support, sc_.execution, cfg_.gripper, rng_);
    if (res.outcome == PickOutcome::PlanFail) return {Attempt::Failed, to_string(res.outcome)};
    const bool holding = res.outcome == PickOutcome::Grasped;
    HandState hand{res.aperture, std::nullopt};
    const HandCheck check = check_hand_state(
        hand, cfg_.gripper,
        [&] { return cfg_.capture.count(cfg_.render.samples_per_m2, holding); },
        cfg_.occlusion_threshold);
    if (check == HandCheck::Success && holding) return {Attempt::Held, res.object_id};
    return {Attempt::Failed, to_string(res.outcome)};
  }

  void register_cloud(Site site) {
    if (auto moved = inject_wind_event(world_, sc_.noise, rng_)) log("Wind", *moved);
    spend(Process::RegisterCloud, site, cfg_.timing.draw(Process::RegisterCloud, site, timing_rng_));
  }

  void miss(const std::string& detail) {
    log("Miss", detail);
    if (++st_.consecutive_misses >= 2) fire(Event::NoGraspsFound, detail);
  }

  void pick() {
    register_cloud(Site::Pick);
    const PointCloud cloud = render_fixed_cloud(world_, sc_.noise, rng_, cfg_.render);
    const Attempt a = grasp(cloud, LocationKind::Floor, 0.0, Site::Pick);
    if (a.kind == Attempt::Miss) return miss(a.detail);
    st_.consecutive_misses = 0;
    if (a.kind == Attempt::Failed) {
      ++st_.failed_attempts_this_object;
      return fire(Event::GraspFailed, a.detail);
    }
    transfer(a.detail, LocationKind::Floor, {LocationKind::Gripper, {}});
    const Pose2D slot = place_in_basket(world_, world_.object(a.detail), rng_);
    transfer(a.detail, LocationKind::Gripper, {LocationKind::Basket, slot});
    ++rec_.pick_grasp.successes;
    st_.failed_attempts_this_object = 0;
    fire(Event::ObjectPicked, a.detail);
  }

  void drop() {
    register_cloud(Site::Drop);
    const PointCloud cloud =
        render_hand_eye_cloud(world_, cfg_.render.basket_views, sc_.noise, rng_, cfg_.render);
    const Attempt a = grasp(cloud, LocationKind::Basket, world_.model.basket_floor(), Site::Drop);
    if (a.kind == Attempt::Miss) return miss(a.detail);
    st_.consecutive_misses = 0;
    if (a.kind == Attempt::Failed) {
      ++st_.failed_attempts_this_object;
      return fire(Event::GraspFailed, a.detail);
    }
    transfer(a.detail, LocationKind::Basket, {LocationKind::Gripper, {}});
    const PointCloud view = render_fixed_cloud(world_, sc_.noise, rng_, cfg_.render);
    const DropTarget target = compute_drop_point(view, 0.0, cfg_.drop);
    const Vec2 xy = target.position.head<2>();
    if (point_in_convex_polygon(world_.bin_footprint_in_robot_frame(), xy)) {
      transfer(a.detail, LocationKind::Gripper, {LocationKind::Bin, {}});
      ++rec_.drop_grasp.successes;
      st_.failed_attempts_this_object = 0;
      fire(Event::ObjectDropped, a.detail);
    } else {
      const Vec2 w = world_.robot.to_world(xy);
      transfer(a.detail, LocationKind::Gripper, {LocationKind::Floor, Pose2D{w.x(), w.y(), 0.0}});
      ++st_.failed_attempts_this_object;
      fire(Event::GraspFailed, "drop missed the bin");
    }
  }

  TaskResult finish() {
    rec_.steps = st_.steps;
    rec_.total_time = st_.time;
    rec_.final_census = world_.census();
    const int total = static_cast<int>(world_.object_count());
    const auto bin = rec_.final_census.find(LocationKind::Bin);
    const bool all_in_bin = bin != rec_.final_census.end() && bin->second == total;
    rec_.task_success = st_.phase == Phase::Done && all_in_bin;
    if (rec_.task_success)
      rec_.outcome = "Done";
    else if (st_.phase == Phase::Done)
      rec_.outcome = "left behind";
    else
      rec_.outcome = st_.failure_reason;
    return {std::move(st_), std::move(rec_)};
  }

  const Scenario& sc_;
  const TaskSpec& spec_;
  const TaskConfig& cfg_;
  World world_;
  Rng rng_;
  Rng timing_rng_;
  Costmap global_static_;
  Costmap local_static_;
  std::vector<bool> known_;
  TaskState st_;
  TrialRecord rec_;
};

}  // namespace

TaskResult run_task(const Scenario& scenario, const TaskSpec& spec, const TaskConfig& cfg) {
  cfg.validate();
  return Runner(scenario, spec, cfg).run();
}

void write_event_log(std::ostream& out, const std::vector<EventRecord>& log) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["t"] = std::round(e.time * 1000.0) / 1000.0;
    j["phase"] = to_string(e.phase);
    j["event"] = e.event;
    j["payload"] = e.payload;
    out << j.dump() << '\n';
  }
}

std::vector<std::map<LocationKind, int>> replay_census(const std::vector<EventRecord>& log,
                                                      std::size_t object_count) {
  auto parse = [](const std::string& s) {
    for (auto k : {LocationKind::Floor, LocationKind::Gripper, LocationKind::Basket, LocationKind::Bin})
      if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown location in log: " + s);
  };
  std::map<LocationKind, int> census{{LocationKind::Floor, static_cast<int>(object_count)}};
  std::vector<std::map<LocationKind, int>> out{census};
  for (const auto& e : log) {
    if (e.event != "Transfer") continue;
    const auto space = e.payload.rfind(' ');
    const auto arrow = e.payload.find("->", space);
    if (space == std::string::npos || arrow == std::string::npos)
      throw std::invalid_argument("malformed transfer record: " + e.payload);
    const LocationKind from = parse(e.payload.substr(space + 1, arrow - space - 1));
    const LocationKind to = parse(e.payload.substr(arrow + 2));
    if (--census[from] == 0) census.erase(from);
    ++census[to];
    out.push_back(census);
  }
  return out;
}

}  // namespace pickdrop
