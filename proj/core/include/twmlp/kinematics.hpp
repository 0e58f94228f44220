#pragma once

// Fixed 22-joint kinematic tree (SMPL joint order and parentage, constant
// bone offsets) with forward kinematics and head-anchored root recovery.

#include <array>
#include <string>
#include <vector>

#include "twmlp/rotation.hpp"

namespace twmlp {

inline constexpr int kNumJoints = 22;
inline constexpr int kOutputDim = kNumJoints * 6;  // 132: one 6D rotation per joint
inline constexpr int kHeadJoint = 15;
inline constexpr int kLeftWristJoint = 20;
inline constexpr int kRightWristJoint = 21;
inline constexpr int kRootJoint = 0;

/// Topologically sorted: parent[j] < j for every non-root joint;
/// parent[0] == -1 and offset[0] == 0.
struct KinematicTree {
  std::array<std::string, kNumJoints> name;
  std::array<int, kNumJoints> parent;
  std::array<Vec3, kNumJoints> offset;  // meters, in the parent frame
};

/// Local joint rotations in 6D plus root translation. rotation6[j] decodes
/// to the rotation of joint j relative to its parent.
struct FullBodyPose {
  std::array<Rot6, kNumJoints> rotation6;
  Vec3 root{0.0, 0.0, 0.0};

  static FullBodyPose identity();
};

struct PoseSequence {
  std::vector<FullBodyPose> frames;
  int fps = 60;
};

struct FkResult {
  std::array<Vec3, kNumJoints> position;
  std::array<Mat3, kNumJoints> rotation;
};

/// Built-in y-up tree: pelvis root, +x is the body's left. Segment lengths
/// in meters: hips +-0.09 lateral, thigh 0.38, shin 0.40, foot 0.05 down /
/// 0.13 forward, spine 0.12/0.13/0.05, neck 0.10, head 0.10, collar +-0.08
/// lateral + 0.10 up, clavicle 0.15, upper arm 0.26, forearm 0.25.
KinematicTree default_skeleton();

/// Global transform chain: rotation[j] = rotation[parent] * local[j],
/// position[j] = position[parent] + rotation[parent] * offset[j]; the root
/// takes the pose's root translation directly. Degenerate 6D inputs
/// propagate DegenerateRotationError.
FkResult forward_kinematics(const FullBodyPose& pose, const KinematicTree& tree);

/// Translation that places the FK head at the observed head position:
/// observed - head position under zero root translation.
Vec3 recover_root_translation(const std::array<Rot6, kNumJoints>& rotations,
                              const Vec3& observed_head_position, const KinematicTree& tree);

/// Plain text skeleton file: one joint per line as
///   name parent_name dx dy dz
/// with "none" as the root's parent, '#' comments, parents declared before
/// children. Rejected (FormatError) unless exactly 22 joints and one root.
KinematicTree load_skeleton(const std::string& path);
void save_skeleton(const KinematicTree& tree, const std::string& path);

/// Unpack one 132-value model output row (22 x 6D, joint-major) into a pose;
/// the root translation is left at zero.
template <typename S>
FullBodyPose pose_from_values(const S* row) {
  FullBodyPose pose;
  for (int j = 0; j < kNumJoints; ++j) {
    for (int c = 0; c < 6; ++c) {
      pose.rotation6[j][c] = static_cast<double>(row[j * 6 + c]);
    }
  }
  return pose;
}

/// Pack a pose's rotations into a 132-value row (inverse of
/// pose_from_values, ignoring the root translation).
template <typename S>
void pose_to_values(const FullBodyPose& pose, S* row) {
  for (int j = 0; j < kNumJoints; ++j) {
    for (int c = 0; c < 6; ++c) {
      row[j * 6 + c] = static_cast<S>(pose.rotation6[j][c]);
    }
  }
}

}  // namespace twmlp
