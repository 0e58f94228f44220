#include "twmlp/metrics.hpp"

#include <cmath>
#include <sstream>

#include "twmlp/errors.hpp"

namespace twmlp {

namespace {

constexpr int kRootSet[] = {0};
constexpr int kHandSet[] = {kLeftWristJoint, kRightWristJoint};
constexpr int kUpperSet[] = {3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};
constexpr int kLowerSet[] = {1, 2, 4, 5, 7, 8, 10, 11};

void check_pair(const PoseSequence& pred, const PoseSequence& gt, const char* where,
                std::size_t min_frames = 1) {
  if (pred.frames.size() != gt.frames.size()) {
    throw ShapeError(std::string(where) + ": frame counts differ");
  }
  if (pred.frames.size() < min_frames) {
    throw ContractError(std::string(where) + ": needs at least " + std::to_string(min_frames) +
                        " frames");
  }
}

using Positions = std::vector<std::array<Vec3, kNumJoints>>;

double mean_position_error_cm(const Positions& a, const Positions& b,
                              std::span<const int> joints) {
  double acc = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (const int j : joints) acc += norm(a[t][j] - b[t][j]);
  }
  return acc / (static_cast<double>(a.size()) * static_cast<double>(joints.size())) * 100.0;
}

struct AnchoredPair {
  Positions pred;
  Positions gt;
};

AnchoredPair anchor_both(const PoseSequence& pred, const PoseSequence& gt,
                         const KinematicTree& tree) {
  const std::vector<Vec3> heads = head_trajectory(gt, tree);
  return {anchored_positions(pred, heads, tree), anchored_positions(gt, heads, tree)};
}

constexpr int kAllJoints[] = {0,  1,  2,  3,  4,  5,  6,  7,  8,  9,  10,
                              11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};

}  // namespace

std::span<const int> JointPartition::root() { return kRootSet; }
std::span<const int> JointPartition::hand() { return kHandSet; }
std::span<const int> JointPartition::upper() { return kUpperSet; }
std::span<const int> JointPartition::lower() { return kLowerSet; }

Positions global_positions(const PoseSequence& seq, const KinematicTree& tree) {
  Positions out;
  out.reserve(seq.frames.size());
  for (const FullBodyPose& pose : seq.frames) {
    out.push_back(forward_kinematics(pose, tree).position);
  }
  return out;
}

Positions anchored_positions(const PoseSequence& seq, std::span<const Vec3> observed_head,
                             const KinematicTree& tree) {
  if (observed_head.size() != seq.frames.size()) {
    throw ShapeError("anchored_positions: head trajectory length mismatch");
  }
  Positions out;
  out.reserve(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    FullBodyPose pose = seq.frames[t];
    pose.root = recover_root_translation(pose.rotation6, observed_head[t], tree);
    out.push_back(forward_kinematics(pose, tree).position);
  }
  return out;
}

std::vector<Vec3> head_trajectory(const PoseSequence& seq, const KinematicTree& tree) {
  std::vector<Vec3> heads;
  heads.reserve(seq.frames.size());
  for (const FullBodyPose& pose : seq.frames) {
    heads.push_back(forward_kinematics(pose, tree).position[kHeadJoint]);
  }
  return heads;
}

double mpjre(const PoseSequence& pred, const PoseSequence& gt) {
  check_pair(pred, gt, "mpjre");
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.frames.size(); ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      acc += geodesic_angle_deg(rot6d_to_matrix(pred.frames[t].rotation6[j]),
                                rot6d_to_matrix(gt.frames[t].rotation6[j]));
    }
  }
  return acc / (static_cast<double>(pred.frames.size()) * kNumJoints);
}

double mpjpe(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree) {
  check_pair(pred, gt, "mpjpe");
  const AnchoredPair p = anchor_both(pred, gt, tree);
  return mean_position_error_cm(p.pred, p.gt, kAllJoints);
}

double mpjve(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree,
             int fps) {
  check_pair(pred, gt, "mpjve", 2);
  const AnchoredPair p = anchor_both(pred, gt, tree);
  const double scale = static_cast<double>(fps);
  double acc = 0.0;
  const std::size_t n = p.pred.size() - 1;
  for (std::size_t t = 0; t < n; ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 vp = scale * (p.pred[t + 1][j] - p.pred[t][j]);
      const Vec3 vg = scale * (p.gt[t + 1][j] - p.gt[t][j]);
      acc += norm(vp - vg);
    }
  }
  return acc / (static_cast<double>(n) * kNumJoints) * 100.0;
}

double jitter(const PoseSequence& seq, const KinematicTree& tree, int fps) {
  if (seq.frames.size() < 4) throw ContractError("jitter: needs at least 4 frames");
  const Positions p = global_positions(seq, tree);
  const double f3 = static_cast<double>(fps) * fps * fps;
  double acc = 0.0;
  const std::size_t n = p.size() - 3;
  for (std::size_t t = 0; t < n; ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 jerk =
          f3 * (p[t + 3][j] - 3.0 * p[t + 2][j] + 3.0 * p[t + 1][j] - 1.0 * p[t][j]);
      acc += norm(jerk);
    }
  }
  return acc / (static_cast<double>(n) * kNumJoints) / 100.0;
}

double part_pe(const PoseSequence& pred, const PoseSequence& gt, const KinematicTree& tree,
               std::span<const int> joints) {
  check_pair(pred, gt, "part_pe");
  if (joints.empty()) throw ContractError("part_pe: empty joint selection");
  for (const int j : joints) {
    if (j < 0 || j >= kNumJoints) throw ContractError("part_pe: joint index out of range");
  }
  const AnchoredPair p = anchor_both(pred, gt, tree);
  return mean_position_error_cm(p.pred, p.gt, joints);
}

MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt,
                              const KinematicTree& tree, int fps) {
  check_pair(pred, gt, "compute_metrics", 4);
  MetricsReport r;
  r.frames = pred.frames.size();
  r.fps = fps;
  r.mpjre_deg = mpjre(pred, gt);
  r.mpjpe_cm = mpjpe(pred, gt, tree);
  r.mpjve_cm_s = mpjve(pred, gt, tree, fps);
  r.root_pe_cm = part_pe(pred, gt, tree, JointPartition::root());
  r.hand_pe_cm = part_pe(pred, gt, tree, JointPartition::hand());
  r.upper_pe_cm = part_pe(pred, gt, tree, JointPartition::upper());
  r.lower_pe_cm = part_pe(pred, gt, tree, JointPartition::lower());

  // Jitter of the prediction as it would be deployed: head-anchored roots.
  PoseSequence anchored = pred;
  const std::vector<Vec3> heads = head_trajectory(gt, tree);
  for (std::size_t t = 0; t < anchored.frames.size(); ++t) {
    anchored.frames[t].root =
        recover_root_translation(anchored.frames[t].rotation6, heads[t], tree);
  }
  r.jitter_1e2_m_s3 = jitter(anchored, tree, fps);
  return r;
}

namespace {

void metric_line(std::ostringstream& os, const char* name, double value, const char* unit) {
  os << name << ' ' << value << ' ' << unit << '\n';
}

}  // namespace

std::string format_metrics_text(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  metric_line(os, "mpjre", r.mpjre_deg, "deg");
  metric_line(os, "mpjpe", r.mpjpe_cm, "cm");
  metric_line(os, "mpjve", r.mpjve_cm_s, "cm/s");
  metric_line(os, "jitter", r.jitter_1e2_m_s3, "1e2_m/s3");
  metric_line(os, "root_pe", r.root_pe_cm, "cm");
  metric_line(os, "hand_pe", r.hand_pe_cm, "cm");
  metric_line(os, "upper_pe", r.upper_pe_cm, "cm");
  metric_line(os, "lower_pe", r.lower_pe_cm, "cm");
  os << "frames " << r.frames << " count\n";
  os << "fps " << r.fps << " hz\n";
  return os.str();
}

std::string format_metrics_json(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "{\n"
     << "  \"mpjre_deg\": " << r.mpjre_deg << ",\n"
     << "  \"mpjpe_cm\": " << r.mpjpe_cm << ",\n"
     << "  \"mpjve_cm_s\": " << r.mpjve_cm_s << ",\n"
     << "  \"jitter_1e2_m_s3\": " << r.jitter_1e2_m_s3 << ",\n"
     << "  \"root_pe_cm\": " << r.root_pe_cm << ",\n"
     << "  \"hand_pe_cm\": " << r.hand_pe_cm << ",\n"
     << "  \"upper_pe_cm\": " << r.upper_pe_cm << ",\n"
     << "  \"lower_pe_cm\": " << r.lower_pe_cm << ",\n"
     << "  \"frames\": " << r.frames << ",\n"
     << "  \"fps\": " << r.fps << "\n"
     << "}\n";
  return os.str();
}

}  // namespace twmlp
