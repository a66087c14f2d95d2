// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include "oracles.hpp"
#include "pickdrop/grasping.hpp"
#include "pickdrop/harness.hpp"
#include "pickdrop/navigation.hpp"
#include "pickdrop/report.hpp"
#include "pickdrop/taskplanner.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace pickdrop;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

int total(const std::map<LocationKind, int>& census) {
  int n = 0;
  for (const auto& [k, v] : census) n += v;
  return n;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

GraspCandidate top_down(const Vec3& t, double theta) {
  GraspCandidate c;
  c.translation = t;
  c.axes.col(0) = -Vec3::UnitZ();
  c.axes.col(1) = Vec3::UnitY();
  c.axes.col(2) = c.axes.col(0).cross(c.axes.col(1));
  c.theta = theta;
  return c;
}

// Navigation samples must equal the logged path lengths over the velocity.
void check_navigation_times(const TaskResult& res, Verdict& v) {
  std::vector<double> lengths, nav;
  for (const auto& e : res.state.log)
    if (e.event == "LegReached") lengths.push_back(std::stod(e.payload.substr(e.payload.find('=') + 1)));
  for (const auto& [key, samples] : res.record.durations)
    if (key.first == Process::NavigateToPoint) nav.insert(nav.end(), samples.begin(), samples.end());
  std::sort(lengths.begin(), lengths.end());
  std::sort(nav.begin(), nav.end());
  if (lengths.size() != nav.size()) return v.fail("navigation sample count differs from reached legs");
  for (std::size_t i = 0; i < nav.size(); ++i)
    if (nav[i] != lengths[i] / 0.5) return v.fail(fmt("navigation time %.17g for length %.17g", nav[i], lengths[i]));
}

Verdict noiseless_end_to_end(std::vector<TaskResult>& runs) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (TaskMode mode : {TaskMode::CollectAll, TaskMode::OneByOne}) {
    ScenarioTemplate tpl;
    tpl.object_count = 3;
    tpl.mode = mode;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      const Scenario sc = generate_random_scenario(tpl, seed);
      TaskResult res = run_task(sc, TaskSpec::from(sc));
      const int n = static_cast<int>(sc.objects.size());
      if (!res.record.task_success)
        v.fail(std::string(to_string(mode)) + " seed " + std::to_string(seed) + ": " + res.record.outcome);
      if (res.record.final_census != std::map<LocationKind, int>{{LocationKind::Bin, n}})
        v.fail("seed " + std::to_string(seed) + " final census not all in bin");
      for (const auto& c : replay_census(res.state.log, sc.objects.size()))
        if (total(c) != n) v.fail("seed " + std::to_string(seed) + " lost an object");
      runs.push_back(std::move(res));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= 60.0) v.fail(fmt("took %.1f s", secs));
  if (v.ok) v.detail = fmt("40/40 trials in %.1f s", secs);
  return v;
}

Verdict ranking_formula() {
  Verdict v;
  RankingParams p;
  p.h_min = 0.1;
  const GripperSpec& g = p.gripper;
  auto at = [&](double theta) { return rank_grasp(top_down({1.0, 0.0, p.h_min + 0.4}, theta), p); };
  if (std::abs(at(g.alpha).w) > 1e-12) v.fail("w at alpha");
  if (std::abs(at(0.008).w - 0.6) > 1e-12) v.fail("w at 0.008");
  if (std::abs(at((g.alpha + g.beta) / 2).R - 0.0125) > 1e-12) v.fail("worked example R");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.05, 0.15);
  for (int i = 0; i < 10000; ++i) {
    const double w = at(u(rng)).w;
    if (!(w >= 0.0 && w <= 1.0)) v.fail("w outside [0, 1]");
  }
  if (v.ok) v.detail = "examples match, 10000 weights in [0, 1]";
  return v;
}

Verdict argmax_invariance() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> theta(0.0, 0.09), z(0.0, 0.5), ang(-1.5, 1.5), scale(0.01, 100.0);
  std::uniform_int_distribution<int> count(1, 40), which(0, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GraspCandidate> cs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      GraspCandidate c;
      c.translation = Vec3(1.0, 0.0, z(rng));
      c.axes = Eigen::AngleAxisd(ang(rng), Vec3::UnitY()).toRotationMatrix();
      c.theta = theta(rng);
      c.index = static_cast<std::size_t>(i);
      cs.push_back(c);
    }
    RankingParams a, b;
    const int k = which(rng);  // h only, v only, or both
    if (k != 1) b.h_coeff *= scale(rng);
    if (k != 0) b.v_coeff *= scale(rng);
    if (select_best_grasp(cs, a).index != select_best_grasp(cs, b).index) v.fail("choice changed in trial " + std::to_string(trial));
  }
  if (v.ok) v.detail = "1000 candidate sets";
  return v;
}

Verdict planner_optimality() {
  Verdict v;
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> dim(2, 25);
  int compared = 0, grids = 0;
  while (grids < 200) {
    const int w = dim(rng), h = dim(rng);
    const auto g = oracles::random_grid(rng, w, h, 0.25);
    const auto cm = build_costmap(g, 0.0);
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1);
    const int sx = ux(rng), sy = uy(rng), gx = ux(rng), gy = uy(rng);
    if (!cm.free(sx, sy) || !cm.free(gx, gy)) continue;
    ++grids;
    const auto c0 = g.cell_center(sx, sy), c1 = g.cell_center(gx, gy);
    const auto oracle = oracles::ucs(cm, sx, sy, gx, gy);
    try {
      const auto path = plan_global(cm, {c0.x(), c0.y(), 0.0}, {c1.x(), c1.y(), 0.0}, 0.0);
      if (!oracle) v.fail("planner found a path the oracle did not");
      else if (path.cost.straight != oracle->first || path.cost.diagonal != oracle->second) v.fail("cost mismatch");
      ++compared;
    } catch (const PlanningError&) {
      if (oracle) v.fail("planner missed a path");
    }
  }
  if (v.ok) v.detail = std::to_string(grids) + " grids, " + std::to_string(compared) + " with paths";
  return v;
}

Verdict adjust_postcondition() {
  Verdict v;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(0.3, 3.0), tilt(-0.6, 0.6), off(-0.5, 0.5);
  int stalled = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Scenario s;
    s.grid = OccupancyGrid::empty(0.1, 100, 100);
    s.grid.origin = Vec2(-5.0, -5.0);
    s.bin.pose = {-3.0, -3.0, 0.0};
    World w(s);
    const auto out = adjust_final_pose(w, oracles::wall_scans(dist(rng), tilt(rng), off(rng)), {}, {});
    if (out.status == AdjustStatus::Stalled) {
      ++stalled;
      continue;
    }
    const auto& h = out.final_halves;
    const bool inf = h.either_infinite();
    if (!(inf || h.mu_l + h.mu_r < 1.75) || !(inf || std::abs(h.mu_l - h.mu_r) < 0.3))
      v.fail("postcondition violated in scene " + std::to_string(trial));
  }
  if (v.ok) v.detail = "100 scenes, " + std::to_string(stalled) + " stalled";
  return v;
}

Verdict drop_point() {
  Verdict v;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> cx(0.8, 1.6), cy(-0.5, 0.5), top(0.3, 0.9), half(0.1, 0.25);
  for (int trial = 0; trial < 20; ++trial) {
    const double x = cx(rng), y = cy(rng), z = top(rng), hx = half(rng), hy = half(rng);
    PointCloud c;
    std::uniform_real_distribution<double> px(x - hx, x + hx), py(y - hy, y + hy), pz(z - 0.2, z);
    for (int i = 0; i < 20000; ++i) c.points.push_back({px(rng), py(rng), i % 4 == 0 ? z : pz(rng)});
    Vec3 oracle = Vec3::Zero();
    double zmax = -1e300;
    for (const auto& p : c.points) {
      oracle += p;
      zmax = std::max(zmax, p.z());
    }
    oracle /= double(c.size());
    oracle.z() = zmax + 0.30;
    const auto t = compute_drop_point(c, 0.0, {});
    if (t.used_default || (t.position - oracle).norm() > 0.005) v.fail("cluster " + std::to_string(trial));
  }
  PointCloud box;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 100; ++j) box.points.push_back({1.0 - 0.199 + 0.002 * i, 0.2 - 0.099 + 0.002 * j, 0.5});
  if ((compute_drop_point(box, 0.0, {}).position - Vec3(1.0, 0.2, 0.8)).norm() > 0.005) v.fail("box example");
  box.points.resize(9999);
  const auto fb = compute_drop_point(box, 0.0, {});
  if (!fb.used_default || fb.position != DropConfig{}.default_position) v.fail("9999 points did not fall back");
  if (v.ok) v.detail = "21 clusters within 0.005 m, 9999 points fall back";
  return v;
}

Verdict success_table() {
  Verdict v;
  struct Cell {
    long long num, den;
    int pct;
  };
  const Cell cells[] = {
      {20, 23, 87}, {15, 19, 79}, {15, 15, 100}, {15, 15, 100}, {5, 5, 100},   // bags
      {6, 6, 100},  {50, 56, 89}, {6, 8, 75},    {50, 60, 83},  {5, 6, 83},    // garbage
      {5, 5, 100},  {17, 28, 61}, {5, 5, 100},   {18, 27, 67},  {3, 5, 60},    // tools
      {5, 5, 100},  {30, 33, 91}, {5, 5, 100},   {30, 39, 77},  {5, 5, 100},   // fruits
  };
  int mismatches = 0;
  for (const auto& c : cells) {
    std::vector<TrialRecord> recs(1);
    recs[0].pick_grasp = {static_cast<int>(c.den), static_cast<int>(c.num)};
    const Report r = aggregate_metrics(recs);
    if (r.sets.at(0).p_grasp.percent() != c.pct || Fraction{c.num, c.den}.cell().find(std::to_string(c.pct) + "%") == std::string::npos)
      ++mismatches;
  }
  if (mismatches) v.fail(std::to_string(mismatches) + " mismatches");
  else v.detail = "20/20 cells";
  return v;
}

Verdict timing_model(const std::vector<TaskResult>& runs) {
  Verdict v;
  for (const auto& r : runs) check_navigation_times(r, v);
  const TimingModel t;
  Rng rng(2024);
  const int n = 1000;
  for (auto p : {Process::RegisterCloud, Process::CalculateGrasp, Process::ExecuteGrasp})
    for (auto s : {Site::Pick, Site::Drop}) {
      const Gaussian g = t.params(p, s);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += t.draw(p, s, rng);
      if (std::abs(sum / n - g.mean) > 2.0 * g.sd / std::sqrt(double(n)))
        v.fail(std::string(to_string(p)) + "/" + to_string(s) + fmt(" mean %.3f vs %.3f", sum / n, g.mean));
    }
  if (v.ok) v.detail = "navigation exact over " + std::to_string(runs.size()) + " trials, 6 draw means in range";
  return v;
}

Verdict slip_calibration() {
  Verdict v;
  Scenario s;
  s.grid = OccupancyGrid::empty(0.1, 100, 100);
  s.grid.origin = Vec2(-5.0, -5.0);
  s.bin.pose = {-3.0, -3.0, 0.0};
  RigidObject o;
  o.id = "b";
  o.footprint = rectangle(0.10, 0.05);
  o.height = 0.06;
  o.grasp_width = 0.05;
  o.location = {LocationKind::Floor, {1.0, 0.0, 0.0}};
  s.objects.push_back(o);
  const World w(s);
  ExecutionModel m;
  m.slip_lift = 0.1;
  Rng rng(77);
  int slips = 0, other = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto out = simulate_grasp_execution(w, top_down({1.0, 0.0, 0.03}, 0.05), LocationKind::Floor, m, {}, rng);
    slips += out.outcome == PickOutcome::SlipDuringLift;
    other += out.outcome != PickOutcome::SlipDuringLift && out.outcome != PickOutcome::Grasped;
  }
  const double f = slips / double(n);
  if (other) v.fail("unexpected outcomes");
  if (std::abs(f - 0.1) > 0.01) v.fail(fmt("frequency %.4f", f));
  if (v.ok) v.detail = fmt("slip frequency %.4f", f);
  return v;
}

// Each scenario combines a base layout with one kind of adversity.
Verdict fsm_termination() {
  Verdict v;
  const TaskConfig cfg = TaskConfig::at_density(3000.0);
  const RetryPolicy& policy = cfg.policy;
  std::vector<Scenario> bases;
  for (std::uint64_t seed = 500; seed < 510; ++seed) {
    ScenarioTemplate tpl;
    tpl.object_count = 1 + static_cast<int>(seed % 3);
    tpl.random_obstacles = static_cast<int>(seed % 2);
    tpl.mode = seed % 2 ? TaskMode::OneByOne : TaskMode::CollectAll;
    bases.push_back(generate_random_scenario(tpl, seed));
  }
  std::map<std::string, int> outcomes;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    Scenario sc = bases[static_cast<std::size_t>(i) % bases.size()];
    sc.seed = 10000 + static_cast<std::uint64_t>(i);
    TaskSpec spec = TaskSpec::from(sc);
    switch (i % 6) {
      case 0:  // grasps that never hold
        sc.execution = {0.3, 0.7, 0.0};
        break;
      case 1:  // objects too flat to be seen
        for (auto& o : sc.objects) o.height = 0.004;
        break;
      case 2:  // gusts on every registration
        sc.noise = noise_profile("field");
        sc.noise.wind_event_probability = 1.0;
        sc.noise.wind_disc_radius = 0.6;
        break;
      case 3:  // frequent slips
        sc.execution = {0.0, 0.0, 0.8};
        break;
      case 4: {  // pick point walled in
        auto [cx, cy] = sc.grid.cell_of(spec.pick_point.position());
        for (int dx = -3; dx <= 3; ++dx)
          for (int dy = -3; dy <= 3; ++dy)
            if (sc.grid.in_bounds(cx + dx, cy + dy)) sc.grid.set(cx + dx, cy + dy, true);
        break;
      }
      case 5:  // everything at once, field noise
        sc.noise = noise_profile("field");
        sc.execution = execution_profile("field");
        sc.execution.slip_lift = 0.5;
        break;
    }
    TaskResult res;
    try {
      res = run_task(sc, spec, cfg);
    } catch (const std::exception& e) {
      v.fail("scenario " + std::to_string(i) + " threw: " + e.what());
      continue;
    }
    const int n = static_cast<int>(sc.objects.size());
    if (res.state.phase != Phase::Done && res.state.phase != Phase::Failed)
      v.fail("scenario " + std::to_string(i) + " did not halt");
    if (res.record.steps > step_bound(policy, sc.objects.size()) || res.record.outcome == "step bound")
      v.fail("scenario " + std::to_string(i) + " reached the step bound");
    if (res.state.cycles > policy.max_cycles + 1) v.fail("scenario " + std::to_string(i) + " overran cycles");
    if (total(res.record.final_census) != n) v.fail("scenario " + std::to_string(i) + " lost an object");
    ++outcomes[res.record.outcome];
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (v.ok) {
    v.detail = fmt("1000 halted in %.0f s:", secs);
    for (const auto& [o, k] : outcomes) v.detail += " " + o + "=" + std::to_string(k);
  }
  return v;
}

}  // namespace

int main() {
  std::vector<TaskResult> runs;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"noiseless end-to-end", [&] { return noiseless_end_to_end(runs); }},
      {"ranking formula", ranking_formula},
      {"argmax invariance", argmax_invariance},
      {"planner optimality", planner_optimality},
      {"adjust postcondition", adjust_postcondition},
      {"drop point", drop_point},
      {"success table", success_table},
      {"timing model", [&] { return timing_model(runs); }},
      {"slip calibration", slip_calibration},
      {"fsm termination", fsm_termination},
  };
  int failed = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    failed += v.ok ? 0 : 1;
    std::printf("%s %2d %s: %s\n", v.ok ? "PASS" : "FAIL", ++k, name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
