#pragma once

#include "pickdrop/perception.hpp"
#include "pickdrop/world.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pickdrop {

struct GripperSpec {
  double alpha = 0.005;  // minimum aperture
  double beta = 0.085;   // maximum aperture
  double gamma = 0.005;  // clearance kept from both limits
  double closed_epsilon = 0.004;
  // Finger geometry used by the sampler and collision checks.
  double finger_depth = 0.03;
  double finger_width = 0.01;
  double finger_height = 0.02;
  double palm_depth = 0.08;
  // Measured widths may undershoot the true width by up to the sample spacing.
  double width_tolerance = 0.01;

  void validate() const;
};

/// Grasp pose in the robot frame. Column 0 of `axes` is the approach axis X,
/// column 1 the closing axis Y, column 2 is X x Y.
struct GraspCandidate {
  Vec3 translation = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  double theta = 0.0;
  double sampler_score = 0.0;  // clearance margin of the closed fingers
  std::size_t index = 0;

  Vec3 approach() const { return axes.col(0); }
  Vec3 closing() const { return axes.col(1); }
};

struct RankingParams {
  GripperSpec gripper;
  double h_min = 0.0;
  double h_coeff = 0.125;
  double v_coeff = 0.25;
};

struct Rank {
  double R = 0.0;
  double w = 0.0;
  double h = 0.0;
  double v = 0.0;
};

class GraspError : public std::runtime_error {
 public:
  enum class Kind { NoCandidates, EmptyCandidateSet };
  GraspError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct SamplerConfig {
  std::size_t n_seeds = 500;
  std::size_t k_neighbors = 12;
  double normal_radius = 0.03;
  // Points above the support are split into objects with this tolerance.
  double cluster_tolerance = 0.015;
  // Seeds come from points this far above the support surface.
  double min_seed_height = 0.01;
  // Parallel jaws need sides that do not taper: the width within
  // `taper_depth` of the seed must be at least this fraction of the width
  // over the full finger depth.
  double taper_depth = 0.01;
  double min_taper_ratio = 0.6;
};

/// Antipodal-style sampler: for each seed point the local surface normal
/// (plane fit over nearest neighbors) gives the approach axis. Top approaches
/// close along a side of the seed object's minimum-area bounding rectangle,
/// side approaches horizontally or vertically; the narrower closing whose slab
/// leaves room for both fingers wins. Throws NoCandidates when no seed yields
/// a width within the gripper's maximum aperture.
std::vector<GraspCandidate> sample_grasp_candidates(const PointCloud& cloud,
                                                    const GripperSpec& gripper, Rng& rng,
                                                    double h_min,
                                                    const SamplerConfig& cfg = {});

/// Highest sampler scores first; ties keep candidate order.
std::vector<GraspCandidate> top_k(std::vector<GraspCandidate> candidates, std::size_t k = 50);

/// Everything the reach and collision checks need, in the robot frame.
struct FeasibilityContext {
  Vec3 arm_base = Vec3::Zero();
  double reach_min = 0.3;
  double reach_max = 1.3;
  double reach_max_height = 1.2;
  double support_plane = 0.0;  // the assumed floor under the grasp area
  std::vector<ConvexSolid> obstacles;
  GripperSpec gripper;

  static FeasibilityContext from_world(const World& world, LocationKind support,
                                       const GripperSpec& gripper);
};

/// Box swept by the closed gripper, fingers plus palm.
ConvexSolid closed_gripper_box(const GraspCandidate& c, const GripperSpec& gripper);

bool reachable(const GraspCandidate& c, const FeasibilityContext& ctx);
bool collision_free(const GraspCandidate& c, const FeasibilityContext& ctx);

std::vector<GraspCandidate> prune_infeasible(const std::vector<GraspCandidate>& candidates,
                                             const FeasibilityContext& ctx);

Rank rank_grasp(const GraspCandidate& c, const RankingParams& p);

/// Argmax of R; ties go to the higher sampler score, then the lower index.
GraspCandidate select_best_grasp(const std::vector<GraspCandidate>& candidates,
                                 const RankingParams& p);

enum class PickOutcome { Grasped, EmptyClose, SlipDuringLift, PlanFail };
const char* to_string(PickOutcome outcome);

struct PickResult {
  PickOutcome outcome = PickOutcome::EmptyClose;
  std::string object_id;  // the object the fingers closed on, if any
  double aperture = 0.0;  // after close and lift
};

/// Geometric execution model. The fingers' closing region must intersect
/// exactly one object resting on `support` whose minimal width fits the
/// measured grasp width; the configured probabilities then inject planning
/// failures, empty closes and slips.
PickResult simulate_grasp_execution(const World& world, const GraspCandidate& grasp,
                                    LocationKind support, const ExecutionModel& model,
                                    const GripperSpec& gripper, Rng& rng);

struct HandState {
  double aperture = 0.0;
  std::optional<std::size_t> occlusion_points;
};

enum class HandCheck { Success, Failure };

/// Partially open gripper means success. A fully closed one triggers the
/// wrist-down capture; fewer points than the threshold means a thin object
/// hangs in front of the camera.
HandCheck check_hand_state(HandState& hand, const GripperSpec& gripper,
                           const std::function<std::size_t()>& capture,
                           std::size_t occlusion_threshold = 100000);

/// Point count of the wrist-down hand-eye view.
struct HandCaptureModel {
  double visible_area_m2 = 6.0;
  double hanging_occlusion = 0.6;

  std::size_t count(double samples_per_m2, bool holding) const;
};

struct DropConfig {
  double clearance = 0.30;
  std::size_t min_cluster = 10000;
  double cluster_tolerance = 0.05;
  Vec3 default_position{1.3, 0.0, 0.9};

  void validate() const;
};

struct DropTarget {
  Vec3 position = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();  // approach axis pointing down
  bool used_default = false;
  std::size_t cluster_size = 0;
};

DropTarget compute_drop_point(const PointCloud& cloud, double h_min, const DropConfig& cfg);

/// One line per candidate: translation, axes (X, Y, Z), theta, w, h, v, R,
/// six decimals, space separated.
void write_candidates(std::ostream& out, const std::vector<GraspCandidate>& candidates,
                      const RankingParams& params);

}  // namespace pickdrop
