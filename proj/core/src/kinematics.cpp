#include "twmlp/kinematics.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "twmlp/errors.hpp"

namespace twmlp {

FullBodyPose FullBodyPose::identity() {
  FullBodyPose pose;
  for (auto& r : pose.rotation6) r = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  return pose;
}

KinematicTree default_skeleton() {
  struct JointDef {
    const char* name;
    int parent;
    Vec3 offset;
  };
  static constexpr JointDef kDefs[kNumJoints] = {
      {"pelvis", -1, {0.0, 0.0, 0.0}},
      {"l_hip", 0, {0.09, 0.0, 0.0}},
      {"r_hip", 0, {-0.09, 0.0, 0.0}},
      {"spine1", 0, {0.0, 0.12, 0.0}},
      {"l_knee", 1, {0.0, -0.38, 0.0}},
      {"r_knee", 2, {0.0, -0.38, 0.0}},
      {"spine2", 3, {0.0, 0.13, 0.0}},
      {"l_ankle", 4, {0.0, -0.40, 0.0}},
      {"r_ankle", 5, {0.0, -0.40, 0.0}},
      {"spine3", 6, {0.0, 0.05, 0.0}},
      {"l_foot", 7, {0.0, -0.05, 0.13}},
      {"r_foot", 8, {0.0, -0.05, 0.13}},
      {"neck", 9, {0.0, 0.10, 0.0}},
      {"l_collar", 9, {0.08, 0.10, 0.0}},
      {"r_collar", 9, {-0.08, 0.10, 0.0}},
      {"head", 12, {0.0, 0.10, 0.0}},
      {"l_shoulder", 13, {0.15, 0.0, 0.0}},
      {"r_shoulder", 14, {-0.15, 0.0, 0.0}},
      {"l_elbow", 16, {0.26, 0.0, 0.0}},
      {"r_elbow", 17, {-0.26, 0.0, 0.0}},
      {"l_wrist", 18, {0.25, 0.0, 0.0}},
      {"r_wrist", 19, {-0.25, 0.0, 0.0}},
  };
  KinematicTree tree;
  for (int j = 0; j < kNumJoints; ++j) {
    tree.name[j] = kDefs[j].name;
    tree.parent[j] = kDefs[j].parent;
    tree.offset[j] = kDefs[j].offset;
  }
  return tree;
}

FkResult forward_kinematics(const FullBodyPose& pose, const KinematicTree& tree) {
  FkResult out;
  out.rotation[0] = rot6d_to_matrix(pose.rotation6[0]);
  out.position[0] = pose.root;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = tree.parent[j];
    out.rotation[j] = out.rotation[p] * rot6d_to_matrix(pose.rotation6[j]);
    out.position[j] = out.position[p] + out.rotation[p] * tree.offset[j];
  }
  return out;
}

Vec3 recover_root_translation(const std::array<Rot6, kNumJoints>& rotations,
                              const Vec3& observed_head_position, const KinematicTree& tree) {
  FullBodyPose pose;
  pose.rotation6 = rotations;
  pose.root = {0.0, 0.0, 0.0};
  const FkResult fk = forward_kinematics(pose, tree);
  return observed_head_position - fk.position[kHeadJoint];
}

KinematicTree load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_skeleton: cannot open " + path);

  KinematicTree tree;
  std::unordered_map<std::string, int> index;
  int count = 0;
  int roots = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name, parent;
    double x, y, z;
    if (!(ls >> name)) continue;  // blank line
    if (!(ls >> parent >> x >> y >> z)) {
      throw FormatError("load_skeleton: " + path + ":" + std::to_string(line_no) +
                        ": expected 'name parent dx dy dz'");
    }
    if (count >= kNumJoints) {
      throw FormatError("load_skeleton: " + path + ": more than " + std::to_string(kNumJoints) +
                        " joints");
    }
    if (index.count(name)) {
      throw FormatError("load_skeleton: " + path + ": duplicate joint '" + name + "'");
    }
    if (parent == "none") {
      tree.parent[count] = -1;
      ++roots;
    } else {
      const auto it = index.find(parent);
      if (it == index.end()) {
        throw FormatError("load_skeleton: " + path + ":" + std::to_string(line_no) +
                          ": parent '" + parent + "' not declared before '" + name + "'");
      }
      tree.parent[count] = it->second;
    }
    tree.name[count] = name;
    tree.offset[count] = {x, y, z};
    index.emplace(name, count);
    ++count;
  }
  if (count != kNumJoints) {
    throw FormatError("load_skeleton: " + path + ": expected " + std::to_string(kNumJoints) +
                      " joints, found " + std::to_string(count));
  }
  if (roots != 1) {
    throw FormatError("load_skeleton: " + path + ": expected exactly one root, found " +
                      std::to_string(roots));
  }
  if (tree.parent[0] != -1) {
    throw FormatError("load_skeleton: " + path + ": first joint must be the root");
  }
  return tree;
}

void save_skeleton(const KinematicTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("save_skeleton: cannot open " + path);
  out << "# joint parent dx dy dz (meters)\n";
  for (int j = 0; j < kNumJoints; ++j) {
    out << tree.name[j] << ' ' << (tree.parent[j] < 0 ? "none" : tree.name[tree.parent[j]]) << ' '
        << tree.offset[j][0] << ' ' << tree.offset[j][1] << ' ' << tree.offset[j][2] << '\n';
  }
  if (!out) throw FormatError("save_skeleton: write failed for " + path);
}

}  // namespace twmlp
