#pragma once

// Synthetic motion clips, sparse-tracker derivation, clip file I/O, and
// deterministic dataset splits. Clips store axis-angle joint rotations plus
// root translation per frame at a fixed fps.

#include <cstdint>
#include <string>
#include <vector>

#include "twmlp/features.hpp"
#include "twmlp/kinematics.hpp"

namespace twmlp {

struct MotionFrame {
  Vec3 root{0.0, 0.0, 0.0};
  std::array<Vec3, kNumJoints> axis_angle{};  // radians, rotation vector per joint
};

struct MotionClip {
  std::string id;
  int fps = 60;
  std::vector<MotionFrame> frames;
};

enum class MotionKind { kWalk, kRun, kJump, kIdle };

MotionKind parse_motion_kind(const std::string& name);  // "walk"|"run"|"jump"|"idle"
std::string motion_kind_name(MotionKind kind);

struct MotionSpec {
  MotionKind kind = MotionKind::kWalk;
  double duration_s = 10.0;
  int fps = 60;
};

/// Kind-dependent closed-form constants. The generator evaluates exactly
/// these signals (time in seconds, w = 2*pi*freq_hz, a = amp_scale drawn
/// once per clip, phi = phase drawn once per clip):
///   left hip    x-rotation  hip_amp * a * sin(w*t + phi)
///   right hip   x-rotation -hip_amp * a * sin(w*t + phi)
///   left knee   x-rotation  knee_amp * a * 0.5 * (1 + sin(w*t + phi))
///   right knee  x-rotation  knee_amp * a * 0.5 * (1 - sin(w*t + phi))
///   left shoulder           -shoulder_amp * a * sin(w*t + phi)
///   right shoulder           shoulder_amp * a * sin(w*t + phi)
///   elbows      x-rotation  elbow_amp * (0.8 + 0.2 * sin(w*t + phi))
///   root position (0, height + bob_amp * sin(2*w*t + phi), speed_mps * t)
/// Jump replaces the root height with a ballistic arc per jump cycle and
/// idle holds every signal at its t=0 value with zero speed.
struct KindProfile {
  double freq_hz = 1.0;
  double hip_amp = 0.5;       // radians
  double knee_amp = 0.7;
  double shoulder_amp = 0.25;
  double elbow_amp = 0.3;
  double speed_mps = 1.2;
  double bob_amp = 0.03;      // meters
  double height = 0.85;       // standing pelvis height, meters
};

KindProfile kind_profile(MotionKind kind);

/// Per-clip draws: phase in [0, 2*pi), amp_scale in [0.9, 1.1]. Exposed so
/// tests can reconstruct the closed-form signals independently.
struct SynthDraws {
  double phase = 0.0;
  double amp_scale = 1.0;
};

SynthDraws synth_draws(std::uint64_t seed);

/// Deterministic procedural clip; same (spec, seed) gives identical frames.
/// Requires duration of at least 2 frames.
MotionClip synth_motion(const MotionSpec& spec, std::uint64_t seed);

/// Head + wrist global positions/rotations from FK per frame, as a headset
/// and two controllers would report them.
std::vector<TrackedFrame> derive_sparse_stream(const MotionClip& clip,
                                               const KinematicTree& tree);

/// Decode axis-angle storage to the 6D pose representation.
PoseSequence clip_to_pose_sequence(const MotionClip& clip);

/// Binary clip container (little-endian): magic "MOTN", u32 version = 1,
/// u32 fps, u32 frame count, u32 joint count (= 22), u32 reserved = 0
/// (24-byte header), then per frame the root translation and 22 axis-angle
/// rotations as 3 x f32 each. Errors carry the offending byte offset.
void save_clip(const MotionClip& clip, const std::string& path);
MotionClip load_clip(const std::string& path);

struct ManifestEntry {
  std::string path;
  bool train = true;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  double ratio = 0.9;
  int fps = 60;

  std::vector<std::string> train_paths() const;
  std::vector<std::string> test_paths() const;
};

/// Fisher-Yates shuffle by seed, first ceil(ratio*N) clips to train.
/// Requires at least 2 clips.
DatasetManifest split_dataset(const std::vector<std::string>& clip_paths, double ratio,
                              std::uint64_t seed);

/// Text manifest: "seed", "ratio", "fps" headers then one
/// "train|test <path>" line per clip.
void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace twmlp
