#pragma once

// Evaluation metrics over predicted vs ground-truth pose sequences:
// rotation error (degrees), position/velocity errors (cm, cm/s), jerk-based
// jitter, and per-part position errors. Position metrics anchor the root of
// both sequences to the ground-truth head trajectory, mirroring deployment
// where only tracker signals carry global position.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "twmlp/kinematics.hpp"

namespace twmlp {

struct MetricsReport {
  double mpjre_deg = 0.0;
  double mpjpe_cm = 0.0;
  double mpjve_cm_s = 0.0;
  double jitter_1e2_m_s3 = 0.0;
  double root_pe_cm = 0.0;
  double hand_pe_cm = 0.0;
  double upper_pe_cm = 0.0;
  double lower_pe_cm = 0.0;
  std::size_t frames = 0;
  int fps = 60;
};

/// Fixed joint partition: root = pelvis; hand = the two wrists; upper =
/// spine chain, neck, head, collars, shoulders, elbows, wrists; lower =
/// hips, knees, ankles, feet. upper + lower + root covers all 22 joints.
struct JointPartition {
  static std::span<const int> root();
  static std::span<const int> hand();
  static std::span<const int> upper();
  static std::span<const int> lower();
};

/// FK positions per frame using each frame's stored root translation.
std::vector<std::array<Vec3, kNumJoints>> global_positions(const PoseSequence& seq,
                                                           const KinematicTree& tree);

/// FK positions with the root recovered per frame so the head lands on
/// observed_head[t].
std::vector<std::array<Vec3, kNumJoints>> anchored_positions(const PoseSequence& seq,
                                                             std::span<const Vec3> observed_head,
                                                             const KinematicTree& tree);

/// Ground-truth head trajectory (FK with stored roots).
std::vector<Vec3> head_trajectory(const PoseSequence& seq, const KinematicTree& tree);

/// Mean geodesic angle between decoded local rotations, degrees.
double mpjre(const PoseSequence& pred, const PoseSequence& gt);

/// Mean Euclidean joint-position error in cm, both sequences head-anchored
/// to the ground-truth head trajectory.
double mpjpe(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree);

/// Mean joint-velocity error in cm/s using frame differences scaled by fps.
double mpjve(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree,
             int fps);

/// Mean L2 jerk magnitude (third finite difference x fps^3) of global joint
/// positions, reported in 10^2 m/s^3. Needs at least 4 frames.
double jitter(const PoseSequence& seq, const KinematicTree& tree, int fps);

/// mpjpe restricted to a joint subset. Empty subsets are a contract error.
double part_pe(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree,
               std::span<const int> joints);

/// All metrics at once (pred jitter uses head-anchored roots).
MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt,
                              const KinematicTree& tree, int fps);

/// One metric per line: "name value unit".
std::string format_metrics_text(const MetricsReport& report);
std::string format_metrics_json(const MetricsReport& report);

}  // namespace twmlp
