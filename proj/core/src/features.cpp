#include "twmlp/features.hpp"

#include <string>

#include "twmlp/errors.hpp"

namespace twmlp {

namespace {

void write_tracker(double* out, const Vec3& p, const Rot6& theta, const Vec3& v,
                   const Rot6& w) {
  out[0] = p[0];
  out[1] = p[1];
  out[2] = p[2];
  for (int i = 0; i < 6; ++i) out[3 + i] = theta[i];
  out[9] = v[0];
  out[10] = v[1];
  out[11] = v[2];
  for (int i = 0; i < 6; ++i) out[12 + i] = w[i];
}

constexpr Rot6 kIdentity6 = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

}  // namespace

FeatureVector frame_features(const TrackedFrame& prev, const TrackedFrame& cur) {
  if (prev.t != cur.t - 1) {
    throw SequencingError("frame_features: frames not consecutive (" + std::to_string(prev.t) +
                          " -> " + std::to_string(cur.t) + ")");
  }
  FeatureVector f{};
  for (int j = 0; j < kNumTrackers; ++j) {
    const Vec3 v = cur.position[j] - prev.position[j];
    const Rot6 w = matrix_to_rot6d(relative_rotation(prev.orientation[j], cur.orientation[j]));
    write_tracker(f.data() + j * kTrackerFeatureDim, cur.position[j],
                  matrix_to_rot6d(cur.orientation[j]), v, w);
  }
  return f;
}

FeatureVector frame_features(const TrackedFrame& cur) {
  FeatureVector f{};
  for (int j = 0; j < kNumTrackers; ++j) {
    write_tracker(f.data() + j * kTrackerFeatureDim, cur.position[j],
                  matrix_to_rot6d(cur.orientation[j]), Vec3{0.0, 0.0, 0.0}, kIdentity6);
  }
  return f;
}

std::vector<FeatureVector> featurize_stream(std::span<const TrackedFrame> frames) {
  std::vector<FeatureVector> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.push_back(i == 0 ? frame_features(frames[0]) : frame_features(frames[i - 1], frames[i]));
  }
  return out;
}

FeatureWindowSet build_window_set(std::span<const FeatureVector> stream, std::int64_t t, int T,
                                  int K, bool pad_history) {
  if (T < 2) throw InvalidInputError("build_window_set: T must be >= 2");
  if (K < 0) throw InvalidInputError("build_window_set: K must be >= 0");
  if (t < 0 || t >= static_cast<std::int64_t>(stream.size())) {
    throw InvalidInputError("build_window_set: t=" + std::to_string(t) + " outside stream of " +
                            std::to_string(stream.size()) + " frames");
  }
  const std::int64_t first_needed = t - static_cast<std::int64_t>(T) * (K + 1) + 1;
  if (first_needed < 0 && !pad_history) {
    throw HistoryError("build_window_set: t=" + std::to_string(t) + " needs history from frame " +
                       std::to_string(first_needed) + " (earliest valid t is " +
                       std::to_string(earliest_full_window(T, K)) + ")");
  }

  FeatureWindowSet set;
  set.T = T;
  set.K = K;
  auto fill = [&](std::vector<double>& dst, std::int64_t last) {
    dst.resize(static_cast<std::size_t>(T) * kFeatureDim);
    for (int r = 0; r < T; ++r) {
      std::int64_t idx = last - T + 1 + r;
      if (idx < 0) idx = 0;  // left padding repeats the earliest frame
      const FeatureVector& f = stream[static_cast<std::size_t>(idx)];
      std::copy(f.begin(), f.end(), dst.begin() + static_cast<std::size_t>(r) * kFeatureDim);
    }
  };
  fill(set.current, t);
  set.past.resize(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    fill(set.past[static_cast<std::size_t>(k - 1)], t - static_cast<std::int64_t>(k) * T);
  }
  return set;
}

}  // namespace twmlp
