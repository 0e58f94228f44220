#pragma once

// Sparse-tracker featurization: three tracked joints (head, left hand,
// right hand) become a 54-dim vector per frame, and consecutive frames are
// grouped into one current window plus K non-overlapping past windows.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "twmlp/rotation.hpp"

namespace twmlp {

inline constexpr int kNumTrackers = 3;          // head, left hand, right hand
inline constexpr int kFeatureDim = 54;          // 3 trackers x 18 values
inline constexpr int kTrackerFeatureDim = 18;   // p(3) + theta(6) + v(3) + w(6)

/// One frame of raw tracker input. Index order: 0 head, 1 left, 2 right.
struct TrackedFrame {
  std::array<Vec3, kNumTrackers> position{};
  std::array<Mat3, kNumTrackers> orientation{Mat3::identity(), Mat3::identity(),
                                             Mat3::identity()};
  std::int64_t t = 0;  // frame count at fixed fps; strictly increasing in a stream
};

using FeatureVector = std::array<double, kFeatureDim>;

/// Current window (T x 54) plus K past windows (each T x 54), row-major with
/// rows in chronological order (row 0 oldest, row T-1 newest).
struct FeatureWindowSet {
  int T = 0;
  int K = 0;
  std::vector<double> current;
  std::vector<std::vector<double>> past;  // past[k-1] is window k
};

/// Per-tracker layout [p, theta, v, w], tracker order head/left/right.
/// Velocity is a plain frame difference (meters/frame); relative rotation is
/// prev^T * cur encoded as 6D. Throws SequencingError unless
/// prev.t == cur.t - 1.
FeatureVector frame_features(const TrackedFrame& prev, const TrackedFrame& cur);

/// Cold-start variant for the first frame of a stream: v = 0 and w is the
/// identity encoded as 6D.
FeatureVector frame_features(const TrackedFrame& cur);

/// Featurize a whole stream. Frame 0 uses the cold-start rule.
std::vector<FeatureVector> featurize_stream(std::span<const TrackedFrame> frames);

/// Assemble windows ending at frame t. current covers [t-T+1, t]; past
/// window k covers [t-(k+1)T+1, t-kT]. With pad_history, indices before the
/// stream start repeat frame 0; otherwise insufficient history throws
/// HistoryError. Requires T >= 2 and K >= 0.
FeatureWindowSet build_window_set(std::span<const FeatureVector> stream, std::int64_t t, int T,
                                  int K, bool pad_history = false);

/// Earliest t with full history: T*(K+1) - 1.
constexpr std::int64_t earliest_full_window(int T, int K) {
  return static_cast<std::int64_t>(T) * (K + 1) - 1;
}

}  // namespace twmlp
