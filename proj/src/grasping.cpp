#include "pickdrop/grasping.hpp"

#include "spatial_hash.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace pickdrop {

void GripperSpec::validate() const {
  if (!(alpha > 0.0 && alpha < beta)) throw std::invalid_argument("gripper needs 0 < alpha < beta");
  if (!(gamma > 0.0)) throw std::invalid_argument("gripper clearance must be positive");
}

void DropConfig::validate() const {
  if (!(clearance > 0.0) || min_cluster == 0)
    throw std::invalid_argument("drop clearance and minimum cluster must be positive");
}

namespace {

Mat3 frame_from(const Vec3& approach, const Vec3& closing_hint) {
  const Vec3 x = approach.normalized();
  Vec3 y = closing_hint - closing_hint.dot(x) * x;
  if (y.norm() < 1e-6) {
    y = x.cross(Vec3::UnitZ());
    if (y.norm() < 1e-6) y = Vec3::UnitY();
  }
  y.normalize();
  Mat3 axes;
  axes.col(0) = x;
  axes.col(1) = y;
  axes.col(2) = x.cross(y);
  return axes;
}

std::optional<Vec3> surface_normal(const PointCloud& cloud, const detail::SpatialHash& hash,
                                   std::size_t seed, const SamplerConfig& cfg) {
  const Vec3& p = cloud.points[seed];
  std::vector<std::pair<double, std::size_t>> near;
  hash.for_each_within(p, cfg.normal_radius, [&](std::size_t j) {
    near.emplace_back((cloud.points[j] - p).squaredNorm(), j);
  });
  if (near.size() < 3) return std::nullopt;
  std::sort(near.begin(), near.end());
  if (near.size() > cfg.k_neighbors) near.resize(cfg.k_neighbors);
  Vec3 mean = Vec3::Zero();
  for (const auto& [d, j] : near) mean += cloud.points[j];
  mean /= double(near.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& [d, j] : near) {
    const Vec3 q = cloud.points[j] - mean;
    cov += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Vec3 n = solver.eigenvectors().col(0);
  if (std::abs(n.z()) >= 0.5) {
    if (n.z() < 0) n = -n;
  } else {
    // Point away from the bulk of the surrounding surface.
    Vec3 centroid = Vec3::Zero();
    std::size_t count = 0;
    hash.for_each_within(p, 2.0 * cfg.normal_radius, [&](std::size_t j) {
      centroid += cloud.points[j];
      ++count;
    });
    centroid /= double(count);
    if (n.dot(p - centroid) < 0) n = -n;
  }
  return n.normalized();
}

}  // namespace

std::vector<GraspCandidate> sample_grasp_candidates(const PointCloud& cloud,
                                                    const GripperSpec& gripper, Rng& rng,
                                                    double h_min, const SamplerConfig& cfg) {
  std::vector<std::size_t> eligible;
  PointCloud above;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud.points[i].z() > h_min + cfg.min_seed_height) {
      eligible.push_back(i);
      above.points.push_back(cloud.points[i]);
    }
  if (eligible.empty())
    throw GraspError(GraspError::Kind::NoCandidates, "no points above the support surface");

  // Segment the points above the support into objects.
  std::vector<double> object_heading(cloud.size(), 0.0);
  for (const auto& cluster : euclidean_clusters(above, cfg.cluster_tolerance)) {
    std::vector<Vec2> xy;
    xy.reserve(cluster.size());
    for (std::size_t i : cluster) xy.push_back(above.points[i].head<2>());
    const Polygon hull = convex_hull(xy);
    const double heading = hull.size() >= 3 ? min_area_rectangle_heading(hull) : 0.0;
    for (std::size_t i : cluster) object_heading[eligible[i]] = heading;
  }

  const double inner_half = gripper.beta / 2;
  const double window = inner_half + gripper.finger_width;
  const detail::SpatialHash hash(cloud.points, 0.02);
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);

  std::vector<GraspCandidate> out;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const std::size_t seed = eligible[pick(rng)];
    const auto normal = surface_normal(cloud, hash, seed, cfg);
    if (!normal) continue;
    const Vec3& p = cloud.points[seed];

    std::vector<std::size_t> local;
    hash.for_each_within(p, window + gripper.finger_depth, [&](std::size_t j) { local.push_back(j); });

    // Top approaches close along the object's bounding-rectangle sides; side
    // approaches close horizontally or vertically.
    const Vec3 x = -*normal;
    const bool top = std::abs(normal->z()) >= 0.5;
    std::array<Vec3, 2> hints;
    if (top) {
      const double phi = object_heading[seed];
      hints = {Vec3(std::cos(phi), std::sin(phi), 0.0), Vec3(-std::sin(phi), std::cos(phi), 0.0)};
    } else {
      const Vec3 h = x.cross(Vec3::UnitZ()).normalized();
      hints = {h, x.cross(h)};
    }
    std::optional<GraspCandidate> best;
    for (const Vec3& hint : hints) {
      // A top grasp keeps the closing axis level so the fingers meet the
      // sides rather than a chord across an upper edge.
      const Mat3 axes = top ? frame_from(x - x.dot(hint) * hint, hint) : frame_from(x, hint);
      double lo = 0.0, hi = 0.0;
      bool fits = true;
      // Width near the entry of the pads; a wedge such as a vertical box
      // corner is much narrower there than at full finger depth.
      double shallow_lo = 0.0, shallow_hi = 0.0;
      for (std::size_t j : local) {
        const Vec3 d = cloud.points[j] - p;
        const double a = axes.col(0).dot(d), b = axes.col(1).dot(d), c = axes.col(2).dot(d);
        if (a < -0.005 || a > gripper.finger_depth || std::abs(c) > gripper.finger_height / 2 ||
            std::abs(b) > window)
          continue;
        if (std::abs(b) >= inner_half) {
          fits = false;
          break;
        }
        lo = std::min(lo, b);
        hi = std::max(hi, b);
        if (a <= cfg.taper_depth) {
          shallow_lo = std::min(shallow_lo, b);
          shallow_hi = std::max(shallow_hi, b);
        }
      }
      if (!fits) continue;
      const double theta = hi - lo;
      if (theta > gripper.beta) continue;
      if (best && theta >= best->theta) continue;
      if (shallow_hi - shallow_lo < cfg.min_taper_ratio * theta) continue;
      GraspCandidate c;
      c.axes = axes;
      c.theta = theta;
      c.translation = p + axes.col(0) * (gripper.finger_depth / 2) + axes.col(1) * (0.5 * (lo + hi));
      // Clearance margin: the smaller of the jaw clearance around the object
      // and the height of the closed gripper above the support surface.
      c.sampler_score = std::min(0.5 * (gripper.beta - theta), closed_gripper_box(c, gripper).min_z() - h_min);
      best = c;
    }
    if (best) {
      best->index = out.size();
      out.push_back(*best);
    }
  }
  if (out.empty())
    throw GraspError(GraspError::Kind::NoCandidates, "no grasp fits within the maximum aperture");
  return out;
}

std::vector<GraspCandidate> top_k(std::vector<GraspCandidate> candidates, std::size_t k) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const GraspCandidate& a, const GraspCandidate& b) {
                     return a.sampler_score > b.sampler_score;
                   });
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

FeasibilityContext FeasibilityContext::from_world(const World& world, LocationKind support,
                                                  const GripperSpec& gripper) {
  const RobotModel& m = world.model;
  FeasibilityContext ctx;
  ctx.arm_base = m.arm_base;
  ctx.reach_min = m.reach_min;
  ctx.reach_max = m.reach_max;
  ctx.reach_max_height = m.reach_max_height;
  ctx.support_plane = support == LocationKind::Basket ? m.basket_floor() : 0.0;
  ctx.gripper = gripper;
  for (const auto& [poly, z] : m.basket_walls())
    ctx.obstacles.push_back(ConvexSolid::prism(poly, z.first, z.second));
  ctx.obstacles.push_back(ConvexSolid::prism(world.bin_footprint_in_robot_frame(), 0.0, world.bin.height));
  ctx.obstacles.push_back(ConvexSolid::prism(m.body_footprint(), 0.0, m.deck_height));
  return ctx;
}

ConvexSolid closed_gripper_box(const GraspCandidate& c, const GripperSpec& g) {
  const double len = g.finger_depth + g.palm_depth;
  const Vec3 center = c.translation + c.approach() * (g.finger_depth / 2 - len / 2);
  const Vec3 half(len / 2, c.theta / 2 + g.finger_width, g.finger_height / 2);
  return ConvexSolid::box(center, c.axes, half);
}

bool reachable(const GraspCandidate& c, const FeasibilityContext& ctx) {
  const double d = (c.translation - ctx.arm_base).norm();
  return d >= ctx.reach_min && d <= ctx.reach_max && c.translation.z() <= ctx.reach_max_height;
}

bool collision_free(const GraspCandidate& c, const FeasibilityContext& ctx) {
  const ConvexSolid box = closed_gripper_box(c, ctx.gripper);
  if (box.min_z() < ctx.support_plane - 1e-9) return false;
  for (const auto& obstacle : ctx.obstacles)
    if (intersects(box, obstacle)) return false;
  return true;
}

std::vector<GraspCandidate> prune_infeasible(const std::vector<GraspCandidate>& candidates,
                                             const FeasibilityContext& ctx) {
  std::vector<GraspCandidate> out;
  for (const auto& c : candidates)
    if (reachable(c, ctx) && collision_free(c, ctx)) out.push_back(c);
  return out;
}

Rank rank_grasp(const GraspCandidate& c, const RankingParams& p) {
  const auto& g = p.gripper;
  Rank r;
  const double margin = std::min(std::abs(c.theta - g.alpha), std::abs(c.theta - g.beta));
  r.w = 1.0 - std::max(0.0, g.gamma - margin) / g.gamma;
  r.h = p.h_coeff * std::abs(c.translation.z() - p.h_min);
  r.v = p.v_coeff * std::abs(c.approach().z());
  r.R = r.w * r.h * r.v;
  return r;
}

GraspCandidate select_best_grasp(const std::vector<GraspCandidate>& candidates,
                                 const RankingParams& p) {
  if (candidates.empty())
    throw GraspError(GraspError::Kind::EmptyCandidateSet, "no candidates to select from");
  std::size_t best = 0;
  double best_r = rank_grasp(candidates[0], p).R;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double r = rank_grasp(candidates[i], p).R;
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    const bool better =
        r > best_r ||
        (r == best_r && (a.sampler_score > b.sampler_score ||
                         (a.sampler_score == b.sampler_score && a.index < b.index)));
    if (better) {
      best = i;
      best_r = r;
    }
  }
  return candidates[best];
}

const char* to_string(PickOutcome outcome) {
  switch (outcome) {
    case PickOutcome::Grasped: return "Grasped";
    case PickOutcome::EmptyClose: return "EmptyClose";
    case PickOutcome::SlipDuringLift: return "SlipDuringLift";
    case PickOutcome::PlanFail: return "PlanFail";
  }
  return "?";
}

PickResult simulate_grasp_execution(const World& world, const GraspCandidate& grasp,
                                    LocationKind support, const ExecutionModel& model,
                                    const GripperSpec& gripper, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u_plan = unit(rng), u_close = unit(rng), u_slip = unit(rng);

  PickResult result;
  if (u_plan < model.plan_fail) {
    result.outcome = PickOutcome::PlanFail;
    return result;
  }

  // Region swept by the finger pads while closing from theta.
  const ConvexSolid region = ConvexSolid::box(
      grasp.translation, grasp.axes,
      Vec3(gripper.finger_depth / 2, grasp.theta / 2 + 0.002, gripper.finger_height / 2));
  const RigidObject* hit = nullptr;
  int hits = 0;
  for (const auto& obj : world.objects) {
    if (obj.location.kind != support) continue;
    const double z0 = world.support_height(obj);
    if (intersects(region, ConvexSolid::prism(world.footprint_in_robot_frame(obj), z0, z0 + obj.height))) {
      hit = &obj;
      ++hits;
    }
  }
  if (hits != 1 || grasp.theta < hit->grasp_width - gripper.width_tolerance || u_close < model.empty_close) {
    result.outcome = PickOutcome::EmptyClose;
    return result;
  }
  result.object_id = hit->id;
  if (u_slip < model.slip_lift) {
    result.outcome = PickOutcome::SlipDuringLift;
    return result;
  }
  result.outcome = PickOutcome::Grasped;
  result.aperture = hit->grasp_width <= gripper.closed_epsilon
                        ? 0.0
                        : std::clamp(hit->grasp_width, 0.0, gripper.beta);
  return result;
}

HandCheck check_hand_state(HandState& hand, const GripperSpec& gripper,
                           const std::function<std::size_t()>& capture,
                           std::size_t occlusion_threshold) {
  if (hand.aperture > gripper.closed_epsilon) return HandCheck::Success;
  hand.occlusion_points = capture();
  return *hand.occlusion_points < occlusion_threshold ? HandCheck::Success : HandCheck::Failure;
}

std::size_t HandCaptureModel::count(double samples_per_m2, bool holding) const {
  const double visible = visible_area_m2 * (holding ? 1.0 - hanging_occlusion : 1.0);
  return static_cast<std::size_t>(std::llround(samples_per_m2 * visible));
}

DropTarget compute_drop_point(const PointCloud& cloud, double h_min, const DropConfig& cfg) {
  DropTarget t;
  t.orientation = frame_from(-Vec3::UnitZ(), Vec3::UnitY());
  const PointCloud bin = segment_bin_cluster(cloud, h_min, cfg.cluster_tolerance);
  t.cluster_size = bin.size();
  if (bin.size() < cfg.min_cluster) {
    t.position = cfg.default_position;
    t.used_default = true;
    return t;
  }
  double sx = 0.0, sy = 0.0, zmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : bin.points) {
    sx += p.x();
    sy += p.y();
    zmax = std::max(zmax, p.z());
  }
  const double n = double(bin.size());
  t.position = Vec3(sx / n, sy / n, zmax + cfg.clearance);
  return t;
}

void write_candidates(std::ostream& out, const std::vector<GraspCandidate>& candidates,
                      const RankingParams& params) {
  char line[512];
  for (const auto& c : candidates) {
    const Rank r = rank_grasp(c, params);
    const Vec3& t = c.translation;
    const Mat3& a = c.axes;
    std::snprintf(line, sizeof line,
                  "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f "
                  "%.6f %.6f\n",
                  t.x(), t.y(), t.z(), a(0, 0), a(1, 0), a(2, 0), a(0, 1), a(1, 1), a(2, 1),
                  a(0, 2), a(1, 2), a(2, 2), c.theta, r.w, r.h, r.v, r.R);
    out << line;
  }
}

}  // namespace pickdrop
