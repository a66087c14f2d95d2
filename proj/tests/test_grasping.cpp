#include "fixtures.hpp"
#include "pickdrop/grasping.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace pickdrop;

namespace {

// Aperture weight written directly from its definition: distance to the
// nearer aperture limit relative to the clearance, capped at one.
double weight_oracle(double theta, const GripperSpec& g) {
  const double margin = std::min(std::abs(theta - g.alpha), std::abs(theta - g.beta));
  return std::min(1.0, margin / g.gamma);
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

World world_with(std::vector<RigidObject> objects) {
  Scenario s = fixtures::open_floor();
  s.objects = std::move(objects);
  return World(s);
}

PointCloud render(const World& w) {
  Rng rng(1);
  return render_fixed_cloud(w, {}, rng, RenderConfig::defaults());
}

}  // namespace

TEST_CASE("ranking formula examples") {
  RankingParams p;
  const GripperSpec& g = p.gripper;
  p.h_min = 0.1;

  auto at = [&](double theta) { return rank_grasp(top_down({1.0, 0.0, p.h_min + 0.4}, theta), p); };
  CHECK(at(g.alpha).w == 0.0);
  CHECK(std::abs(at(0.008).w - 0.6) < 1e-12);
  const Rank mid = at((g.alpha + g.beta) / 2);
  CHECK(mid.w == 1.0);
  CHECK(std::abs(mid.h - 0.05) < 1e-12);
  CHECK(std::abs(mid.v - 0.25) < 1e-12);
  CHECK(std::abs(mid.R - 0.0125) < 1e-12);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int i = 0; i < 10000; ++i) {
    const double theta = u(rng);
    const Rank r = at(theta);
    CHECK(r.w >= 0.0);
    CHECK(r.w <= 1.0);
    CHECK(std::abs(r.w - weight_oracle(theta, g)) < 1e-12);
  }
}

TEST_CASE("argmax ignores rescaled height and verticality coefficients") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> theta(0.0, 0.09), z(0.0, 0.5), ang(-1.5, 1.5), scale(0.01, 100.0);
  std::uniform_int_distribution<int> count(1, 40);
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
    b.h_coeff = a.h_coeff * scale(rng);
    b.v_coeff = a.v_coeff * scale(rng);
    CHECK(select_best_grasp(cs, a).index == select_best_grasp(cs, b).index);
  }
}

TEST_CASE("selection ties fall back to sampler score then index") {
  RankingParams p;
  GraspCandidate a = top_down({1.0, 0.0, 0.2}, 0.04), b = a, c = a;
  a.index = 0;
  b.index = 1;
  b.sampler_score = 2.0;
  c.index = 2;
  c.sampler_score = 2.0;
  CHECK(select_best_grasp({a, b, c}, p).index == 1);
  CHECK_THROWS_AS(select_best_grasp({}, p), GraspError);
}

TEST_CASE("top_k keeps the best sampler scores in stable order") {
  std::vector<GraspCandidate> cs(5);
  const double scores[] = {1.0, 3.0, 2.0, 3.0, 0.5};
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cs[i].sampler_score = scores[i];
    cs[i].index = i;
  }
  const auto k = top_k(cs, 3);
  REQUIRE(k.size() == 3);
  CHECK(k[0].index == 1);
  CHECK(k[1].index == 3);
  CHECK(k[2].index == 2);
  CHECK(top_k(cs, 50).size() == 5);
}

TEST_CASE("a block wider than the aperture in every direction yields no candidates") {
  const World w = world_with({fixtures::box("slab", 0.30, 0.20, 0.20, {1.6, 0.0, 0.0})});
  Rng rng(3);
  try {
    sample_grasp_candidates(render(w), {}, rng, 0.0);
    FAIL("expected NoCandidates");
  } catch (const GraspError& e) {
    CHECK(e.kind() == GraspError::Kind::NoCandidates);
  }
}

TEST_CASE("a 4 cm box is grasped across its width") {
  const World w = world_with({fixtures::box("bar", 0.12, 0.04, 0.06, {1.6, 0.0, 0.3})});
  Rng rng(3);
  const GripperSpec g;
  const auto cs = sample_grasp_candidates(render(w), g, rng, 0.0);
  REQUIRE(!cs.empty());
  RankingParams p;
  const auto best = select_best_grasp(cs, p);
  CHECK(std::abs(best.theta - 0.04) <= g.width_tolerance);
  for (const auto& c : cs) {
    CHECK(c.theta <= g.beta);
    CHECK(std::abs(c.axes.determinant() - 1.0) < 1e-9);
  }
}

TEST_CASE("feasibility pruning") {
  FeasibilityContext ctx;
  ctx.arm_base = Vec3(0.0, 0.0, 0.5);
  const auto near = top_down({1.0, 0.0, 0.1}, 0.04);
  const auto far = top_down({2.5, 0.0, 0.1}, 0.04);
  const auto buried = top_down({1.0, 0.0, -0.05}, 0.04);
  CHECK(reachable(near, ctx));
  CHECK_FALSE(reachable(far, ctx));
  CHECK(collision_free(near, ctx));
  CHECK_FALSE(collision_free(buried, ctx));
  ctx.obstacles.push_back(ConvexSolid::box(Vec3(1.0, 0.0, 0.1), Mat3::Identity(), Vec3(0.05, 0.05, 0.05)));
  CHECK_FALSE(collision_free(near, ctx));
  const auto kept = prune_infeasible({near, far, buried, top_down({1.0, 0.5, 0.1}, 0.04)}, ctx);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].translation.y() == 0.5);
}

TEST_CASE("wrist-down hand check") {
  const GripperSpec g;
  int captures = 0;
  auto capture = [&](std::size_t n) {
    return [&captures, n] {
      ++captures;
      return n;
    };
  };
  HandState open{0.03, std::nullopt};
  CHECK(check_hand_state(open, g, capture(0)) == HandCheck::Success);
  CHECK(captures == 0);
  HandState thin{0.0, std::nullopt};
  CHECK(check_hand_state(thin, g, capture(40000)) == HandCheck::Success);
  CHECK(thin.occlusion_points == 40000u);
  HandState empty{0.0, std::nullopt};
  CHECK(check_hand_state(empty, g, capture(150000)) == HandCheck::Failure);
  CHECK(captures == 2);

  const HandCaptureModel m;
  CHECK(m.count(20000.0, false) == 120000u);
  CHECK(m.count(20000.0, true) == 48000u);
}

TEST_CASE("drop point over a box top") {
  PointCloud c;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 100; ++j) c.points.push_back({1.0 - 0.199 + 0.002 * i, 0.2 - 0.099 + 0.002 * j, 0.5});
  REQUIRE(c.size() == 20000);
  Vec3 oracle = Vec3::Zero();
  for (const auto& p : c.points) oracle += p;
  oracle /= double(c.size());
  oracle.z() = 0.5 + 0.30;

  const auto t = compute_drop_point(c, 0.0, {});
  CHECK_FALSE(t.used_default);
  CHECK((t.position - oracle).norm() <= 0.005);
  CHECK((t.position - Vec3(1.0, 0.2, 0.80)).norm() <= 0.005);
  CHECK((t.orientation.col(0) - (-Vec3::UnitZ())).norm() < 1e-12);

  c.points.resize(9999);
  const auto fallback = compute_drop_point(c, 0.0, {});
  CHECK(fallback.used_default);
  CHECK(fallback.position == DropConfig{}.default_position);
  CHECK(fallback.cluster_size == 9999);
}

TEST_CASE("execution outcomes") {
  World w = world_with({fixtures::box("b", 0.10, 0.05, 0.06, {1.0, 0.0, 0.0})});
  const GripperSpec g;
  const auto grasp = top_down({1.0, 0.0, 0.03}, 0.05);
  Rng rng(5);
  SUBCASE("noiseless grasp succeeds") {
    const auto r = simulate_grasp_execution(w, grasp, LocationKind::Floor, {}, g, rng);
    CHECK(r.outcome == PickOutcome::Grasped);
    CHECK(r.object_id == "b");
    CHECK(r.aperture == doctest::Approx(0.05));
  }
  SUBCASE("missing the object closes empty") {
    const auto r = simulate_grasp_execution(w, top_down({1.5, 0.0, 0.03}, 0.05), LocationKind::Floor, {}, g, rng);
    CHECK(r.outcome == PickOutcome::EmptyClose);
  }
  SUBCASE("too narrow an opening closes empty") {
    const auto r = simulate_grasp_execution(w, top_down({1.0, 0.0, 0.03}, 0.02), LocationKind::Floor, {}, g, rng);
    CHECK(r.outcome == PickOutcome::EmptyClose);
  }
  SUBCASE("slip frequency matches the configured probability") {
    ExecutionModel m;
    m.slip_lift = 0.1;
    int slips = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      slips += simulate_grasp_execution(w, grasp, LocationKind::Floor, m, g, rng).outcome == PickOutcome::SlipDuringLift;
    CHECK(std::abs(slips / double(n) - 0.1) <= 0.01);
  }
}

TEST_CASE("candidate dump has seventeen columns") {
  std::ostringstream out;
  write_candidates(out, {top_down({1.0, 0.0, 0.2}, 0.04), top_down({1.0, 0.1, 0.2}, 0.03)}, {});
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    double v;
    int n = 0;
    while (fields >> v) ++n;
    CHECK(n == 17);
    ++lines;
  }
  CHECK(lines == 2);
}

TEST_CASE("gripper validation") {
  GripperSpec g;
  g.alpha = 0.1;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  DropConfig d;
  d.clearance = -1.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}
