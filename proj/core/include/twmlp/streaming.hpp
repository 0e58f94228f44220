#pragma once

// Real-time streaming inference. A session consumes one tracked frame at a
// time, keeps the last (K+1)*T feature vectors in a ring, and once warm
// emits the final-frame pose of the forward pass with a head-anchored root.
// Streaming outputs are bit-identical to offline windowed inference over
// the same stream.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "twmlp/features.hpp"
#include "twmlp/kinematics.hpp"
#include "twmlp/model.hpp"

namespace twmlp {

struct StreamingOptions {
  /// Reuse per-frame window-block activations instead of recomputing every
  /// past window each frame. Must not change any output bit.
  bool fast_path = false;
  /// Emit poses before warm-up by left-padding windows with the earliest
  /// frame. Off by default: padded outputs are not comparable to offline
  /// evaluation.
  bool pad_history = false;
};

class StreamingSession {
 public:
  StreamingSession(ModelParams<float> params, KinematicTree tree, StreamingOptions options = {});

  /// Featurizes against the previous frame, advances the ring, and returns
  /// a pose once at least (K+1)*T frames were consumed (earlier when
  /// pad_history is set). Non-consecutive timestamps raise SequencingError.
  std::optional<FullBodyPose> push_frame(const TrackedFrame& frame);

  std::int64_t frames_consumed() const { return count_; }
  bool warm() const { return count_ >= static_cast<std::int64_t>(capacity_); }
  const ModelConfig& config() const { return params_.config; }

 private:
  void fill_window(std::vector<double>& dst, int k) const;
  FeatureWindowSet windows_from_ring() const;
  std::vector<float> cached_token(int k) const;

  ModelParams<float> params_;
  KinematicTree tree_;
  StreamingOptions options_;
  std::size_t capacity_ = 0;
  std::deque<FeatureVector> ring_;
  std::optional<TrackedFrame> prev_;
  std::int64_t count_ = 0;
  // Fast path: per window block, activations of the frames currently inside
  // that window, oldest first (at most T rows of D floats each).
  std::vector<std::deque<std::vector<float>>> caches_;
};

struct LatencyReport {
  std::vector<double> samples_ms;  // one entry per push_frame call
  int warmup_frames = 0;           // calls before the first emitted pose
  double mean_ms = 0.0;            // statistics over emitting calls only
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double achieved_fps = 0.0;  // min(input_fps, 1000/mean_ms)
  int input_fps = 0;
};

/// Streams duration_s * input_fps synthetic tracker frames through a
/// session with freshly initialized weights and measures per-call wall
/// time on a monotonic clock. The frame budget must exceed warm-up by at
/// least 5 emitting calls.
LatencyReport bench_latency(const ModelConfig& config, double duration_s, int input_fps,
                            std::uint64_t seed = 1, bool fast_path = false);

std::string format_latency_report(const LatencyReport& report);

/// CSV adapters for the CLI streaming mode. Input line: t, then for each of
/// head/left/right the position xyz and the 9 row-major rotation-matrix
/// entries (37 fields). Output line: t, 132 pose values, root xyz
/// (136 fields).
TrackedFrame parse_tracked_frame_csv(const std::string& line);
std::string format_pose_csv(std::int64_t t, const FullBodyPose& pose);

}  // namespace twmlp
