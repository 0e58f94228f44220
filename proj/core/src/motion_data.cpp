#include "twmlp/motion_data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "twmlp/errors.hpp"
#include "twmlp/rng.hpp"

namespace twmlp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGravity = 9.81;  // m/s^2

// Joint indices driven by the generator.
constexpr int kLHip = 1, kRHip = 2, kLKnee = 4, kRKnee = 5;
constexpr int kLShoulder = 16, kRShoulder = 17, kLElbow = 18, kRElbow = 19;

}  // namespace

MotionKind parse_motion_kind(const std::string& name) {
  if (name == "walk") return MotionKind::kWalk;
  if (name == "run") return MotionKind::kRun;
  if (name == "jump") return MotionKind::kJump;
  if (name == "idle") return MotionKind::kIdle;
  throw ConfigError("unknown motion kind '" + name + "' (walk|run|jump|idle)");
}

std::string motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::kWalk: return "walk";
    case MotionKind::kRun: return "run";
    case MotionKind::kJump: return "jump";
    case MotionKind::kIdle: return "idle";
  }
  return "walk";
}

KindProfile kind_profile(MotionKind kind) {
  switch (kind) {
    case MotionKind::kWalk:
      return {1.0, 0.5, 0.7, 0.25, 0.3, 1.2, 0.03, 0.85};
    case MotionKind::kRun:
      return {1.6, 0.8, 1.1, 0.45, 0.5, 3.0, 0.05, 0.85};
    case MotionKind::kJump:
      return {2.0 / 3.0, 0.1, 1.0, 0.8, 0.2, 0.0, 0.0, 0.85};
    case MotionKind::kIdle:
      return {1.0, 0.05, 0.1, 0.1, 0.3, 0.0, 0.0, 0.85};
  }
  return {};
}

SynthDraws synth_draws(std::uint64_t seed) {
  Rng rng(seed);
  SynthDraws d;
  d.phase = rng.uniform(0.0, 2.0 * kPi);
  d.amp_scale = rng.uniform(0.9, 1.1);
  return d;
}

MotionClip synth_motion(const MotionSpec& spec, std::uint64_t seed) {
  if (spec.fps < 1) throw ConfigError("synth_motion: fps must be >= 1");
  const auto frames = static_cast<std::int64_t>(std::llround(spec.duration_s * spec.fps));
  if (frames < 2) throw ConfigError("synth_motion: duration must cover at least 2 frames");

  const KindProfile p = kind_profile(spec.kind);
  const SynthDraws d = synth_draws(seed);
  const double w = 2.0 * kPi * p.freq_hz;
  const double a = d.amp_scale;
  const double phi = d.phase;

  MotionClip clip;
  clip.id = motion_kind_name(spec.kind) + "_" + std::to_string(seed);
  clip.fps = spec.fps;
  clip.frames.resize(static_cast<std::size_t>(frames));

  for (std::int64_t f = 0; f < frames; ++f) {
    // Idle freezes the clock: every frame equals the t = 0 pose exactly.
    const double t = spec.kind == MotionKind::kIdle
                         ? 0.0
                         : static_cast<double>(f) / static_cast<double>(spec.fps);
    MotionFrame& out = clip.frames[static_cast<std::size_t>(f)];

    const double swing = std::sin(w * t + phi);
    double root_y = p.height + p.bob_amp * std::sin(2.0 * w * t + phi);
    double knee_l = p.knee_amp * a * 0.5 * (1.0 + swing);
    double knee_r = p.knee_amp * a * 0.5 * (1.0 - swing);
    double shoulder_l = -p.shoulder_amp * a * swing;
    double shoulder_r = p.shoulder_amp * a * swing;

    if (spec.kind == MotionKind::kJump) {
      // Cycle: 20% crouch, 30% ballistic flight, 50% stand. The launch
      // speed makes the arc land exactly at the end of the flight phase.
      const double period = 1.0 / p.freq_hz;
      const double u = std::fmod(t, period) / period;
      const double flight_s = 0.3 * period;
      const double v0 = kGravity * flight_s / 2.0;
      if (u < 0.2) {
        const double c = std::sin(kPi * u / 0.2);
        root_y = p.height - 0.15 * a * c;
        knee_l = knee_r = p.knee_amp * a * c;
        shoulder_l = shoulder_r = -0.3 * p.shoulder_amp * a * c;
      } else if (u < 0.5) {
        const double tf = (u - 0.2) * period;
        const double c = std::sin(kPi * (u - 0.2) / 0.3);
        root_y = p.height + v0 * tf - 0.5 * kGravity * tf * tf;
        knee_l = knee_r = 0.3 * p.knee_amp * a * c;
        shoulder_l = shoulder_r = p.shoulder_amp * a * c;
      } else {
        root_y = p.height;
        knee_l = knee_r = 0.0;
        shoulder_l = shoulder_r = 0.0;
      }
    }

    out.root = {0.0, root_y, p.speed_mps * t};
    out.axis_angle[kLHip] = {p.hip_amp * a * swing, 0.0, 0.0};
    out.axis_angle[kRHip] = {-p.hip_amp * a * swing, 0.0, 0.0};
    out.axis_angle[kLKnee] = {knee_l, 0.0, 0.0};
    out.axis_angle[kRKnee] = {knee_r, 0.0, 0.0};
    out.axis_angle[kLShoulder] = {shoulder_l, 0.0, 0.0};
    out.axis_angle[kRShoulder] = {shoulder_r, 0.0, 0.0};
    const double elbow = p.elbow_amp * (0.8 + 0.2 * std::sin(w * t + phi));
    out.axis_angle[kLElbow] = {elbow, 0.0, 0.0};
    out.axis_angle[kRElbow] = {elbow, 0.0, 0.0};
  }
  return clip;
}

std::vector<TrackedFrame> derive_sparse_stream(const MotionClip& clip,
                                               const KinematicTree& tree) {
  const PoseSequence poses = clip_to_pose_sequence(clip);
  std::vector<TrackedFrame> stream;
  stream.reserve(poses.frames.size());
  for (std::size_t f = 0; f < poses.frames.size(); ++f) {
    const FkResult fk = forward_kinematics(poses.frames[f], tree);
    TrackedFrame tf;
    tf.t = static_cast<std::int64_t>(f);
    const int joints[kNumTrackers] = {kHeadJoint, kLeftWristJoint, kRightWristJoint};
    for (int i = 0; i < kNumTrackers; ++i) {
      tf.position[i] = fk.position[joints[i]];
      tf.orientation[i] = fk.rotation[joints[i]];
    }
    stream.push_back(tf);
  }
  return stream;
}

PoseSequence clip_to_pose_sequence(const MotionClip& clip) {
  PoseSequence seq;
  seq.fps = clip.fps;
  seq.frames.reserve(clip.frames.size());
  for (const MotionFrame& f : clip.frames) {
    FullBodyPose pose;
    pose.root = f.root;
    for (int j = 0; j < kNumJoints; ++j) {
      pose.rotation6[j] = matrix_to_rot6d(axis_angle_to_matrix(f.axis_angle[j]));
    }
    seq.frames.push_back(pose);
  }
  return seq;
}

namespace {

constexpr char kMotnMagic[4] = {'M', 'O', 'T', 'N'};
constexpr std::uint32_t kMotnVersion = 1;

}  // namespace

void save_clip(const MotionClip& clip, const std::string& path) {
  if (clip.frames.size() < 2) throw InvalidInputError("save_clip: clip needs at least 2 frames");
  io::Writer w(path);
  w.bytes(kMotnMagic, sizeof(kMotnMagic));
  w.u32(kMotnVersion);
  w.u32(static_cast<std::uint32_t>(clip.fps));
  w.u32(static_cast<std::uint32_t>(clip.frames.size()));
  w.u32(static_cast<std::uint32_t>(kNumJoints));
  w.u32(0);  // reserved, keeps the header at 24 bytes
  for (const MotionFrame& f : clip.frames) {
    for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(f.root[c]));
    for (int j = 0; j < kNumJoints; ++j) {
      for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(f.axis_angle[j][c]));
    }
  }
  w.close();
}

MotionClip load_clip(const std::string& path) {
  io::Reader r(path);
  char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMotnMagic, sizeof(kMotnMagic)) != 0) {
    throw FormatError("load_clip: bad magic in " + path, 0);
  }
  const std::uint32_t version = r.u32();
  if (version != kMotnVersion) {
    throw FormatError("load_clip: unsupported version " + std::to_string(version), 4);
  }
  MotionClip clip;
  clip.id = path;
  clip.fps = static_cast<int>(r.u32());
  const std::uint32_t frames = r.u32();
  const std::uint32_t joints = r.u32();
  if (joints != static_cast<std::uint32_t>(kNumJoints)) {
    throw FormatError("load_clip: joint count " + std::to_string(joints) + " != " +
                          std::to_string(kNumJoints),
                      16);
  }
  r.u32();  // reserved
  if (clip.fps < 1) throw FormatError("load_clip: fps must be positive", 8);
  if (frames < 2) throw FormatError("load_clip: frame count must be >= 2", 12);
  clip.frames.resize(frames);
  for (std::uint32_t f = 0; f < frames; ++f) {
    MotionFrame& out = clip.frames[f];
    for (int c = 0; c < 3; ++c) out.root[c] = r.f32();
    for (int j = 0; j < kNumJoints; ++j) {
      for (int c = 0; c < 3; ++c) out.axis_angle[j][c] = r.f32();
    }
    for (int c = 0; c < 3; ++c) {
      if (!std::isfinite(out.root[c])) {
        throw FormatError("load_clip: non-finite root translation", r.offset());
      }
    }
  }
  if (!r.at_eof()) throw FormatError("load_clip: trailing bytes", r.offset());
  return clip;
}

std::vector<std::string> DatasetManifest::train_paths() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.train) out.push_back(e.path);
  }
  return out;
}

std::vector<std::string> DatasetManifest::test_paths() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (!e.train) out.push_back(e.path);
  }
  return out;
}

DatasetManifest split_dataset(const std::vector<std::string>& clip_paths, double ratio,
                              std::uint64_t seed) {
  if (clip_paths.size() < 2) throw ContractError("split_dataset: needs at least 2 clips");
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split_dataset: ratio must be in (0, 1)");
  }
  std::vector<std::size_t> order(clip_paths.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(clip_paths.size())));
  DatasetManifest m;
  m.seed = seed;
  m.ratio = ratio;
  for (std::size_t i = 0; i < order.size(); ++i) {
    m.entries.push_back({clip_paths[order[i]], i < n_train});
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("save_manifest: cannot open " + path);
  out << "# dataset manifest\n";
  out << "seed " << manifest.seed << '\n';
  out << "ratio " << manifest.ratio << '\n';
  out << "fps " << manifest.fps << '\n';
  for (const auto& e : manifest.entries) {
    out << (e.train ? "train " : "test ") << e.path << '\n';
  }
  if (!out) throw FormatError("save_manifest: write failed for " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_manifest: cannot open " + path);
  DatasetManifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "seed") {
      ls >> m.seed;
    } else if (tag == "ratio") {
      ls >> m.ratio;
    } else if (tag == "fps") {
      ls >> m.fps;
    } else if (tag == "train" || tag == "test") {
      std::string rest;
      std::getline(ls, rest);
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string::npos) {
        throw FormatError("load_manifest: " + path + ":" + std::to_string(line_no) +
                          ": missing clip path");
      }
      m.entries.push_back({rest.substr(start), tag == "train"});
    } else {
      throw FormatError("load_manifest: " + path + ":" + std::to_string(line_no) +
                        ": unknown tag '" + tag + "'");
    }
    if (ls.fail()) {
      throw FormatError("load_manifest: " + path + ":" + std::to_string(line_no) +
                        ": malformed line");
    }
  }
  return m;
}

}  // namespace twmlp
