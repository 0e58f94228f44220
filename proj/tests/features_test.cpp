#include "twmlp/features.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "twmlp/errors.hpp"
#include "twmlp/rng.hpp"

using namespace twmlp;

namespace {

TrackedFrame random_frame(Rng& rng, std::int64_t t) {
  TrackedFrame f;
  f.t = t;
  for (int i = 0; i < kNumTrackers; ++i) {
    f.position[i] = {rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)};
    f.orientation[i] = twtest::random_rotation(rng);
  }
  return f;
}

std::vector<TrackedFrame> random_stream(Rng& rng, int n) {
  std::vector<TrackedFrame> out;
  for (int t = 0; t < n; ++t) out.push_back(random_frame(rng, t));
  return out;
}

}  // namespace

TEST_CASE("per-tracker feature layout is p, theta, v, w") {
  Rng rng(31);
  const TrackedFrame prev = random_frame(rng, 4);
  const TrackedFrame cur = random_frame(rng, 5);
  const FeatureVector f = frame_features(prev, cur);

  for (int tr = 0; tr < kNumTrackers; ++tr) {
    const int base = tr * kTrackerFeatureDim;
    for (int i = 0; i < 3; ++i) CHECK(f[base + i] == cur.position[tr][i]);
    const Rot6 theta = matrix_to_rot6d(cur.orientation[tr]);
    for (int i = 0; i < 6; ++i) CHECK(f[base + 3 + i] == theta[i]);
    for (int i = 0; i < 3; ++i) {
      CHECK(f[base + 9 + i] == cur.position[tr][i] - prev.position[tr][i]);
    }
    // Relative rotation oracle: decode the stored 6D and compose with the
    // previous orientation; the product must be the current orientation.
    Rot6 w;
    for (int i = 0; i < 6; ++i) w[i] = f[base + 12 + i];
    const Mat3 recomposed = cur.orientation[tr];
    CHECK(twtest::max_abs_diff(prev.orientation[tr] * rot6d_to_matrix(w), recomposed) < 1e-12);
  }
}

TEST_CASE("cold start zeroes velocity and uses the identity relative rotation") {
  Rng rng(32);
  const TrackedFrame cur = random_frame(rng, 0);
  const FeatureVector f = frame_features(cur);
  for (int tr = 0; tr < kNumTrackers; ++tr) {
    const int base = tr * kTrackerFeatureDim;
    for (int i = 0; i < 3; ++i) CHECK(f[base + 9 + i] == 0.0);
    const Rot6 ident{1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(f[base + 12 + i] == ident[i]);
  }
}

TEST_CASE("non-consecutive timestamps are rejected") {
  Rng rng(33);
  const TrackedFrame a = random_frame(rng, 3);
  const TrackedFrame b = random_frame(rng, 5);
  CHECK_THROWS_AS(frame_features(a, b), SequencingError);
  CHECK_THROWS_AS(frame_features(b, a), SequencingError);
  CHECK_THROWS_AS(frame_features(a, a), SequencingError);
}

TEST_CASE("featurize_stream applies the cold-start rule only at frame 0") {
  Rng rng(34);
  const auto frames = random_stream(rng, 6);
  const auto feats = featurize_stream(frames);
  REQUIRE(feats.size() == 6);
  CHECK(feats[0] == frame_features(frames[0]));
  for (std::size_t i = 1; i < 6; ++i) CHECK(feats[i] == frame_features(frames[i - 1], frames[i]));
}

TEST_CASE("window assembly matches brute-force index enumeration") {
  Rng rng(35);
  const auto frames = random_stream(rng, 40);
  const auto feats = featurize_stream(frames);

  for (const int T : {2, 4, 5}) {
    for (const int K : {0, 1, 2, 3}) {
      const std::int64_t first = earliest_full_window(T, K);
      for (std::int64_t t = first; t < 40; t += 3) {
        const FeatureWindowSet ws = build_window_set(feats, t, T, K);
        REQUIRE(ws.T == T);
        REQUIRE(ws.K == K);
        REQUIRE(static_cast<int>(ws.past.size()) == K);
        // Oracle: window k covers [t-(k+1)T+1, t-kT] in chronological order.
        for (int k = 0; k <= K; ++k) {
          const std::vector<double>& block = k == 0 ? ws.current : ws.past[k - 1];
          REQUIRE(block.size() == static_cast<std::size_t>(T) * kFeatureDim);
          for (int row = 0; row < T; ++row) {
            const std::int64_t src = t - static_cast<std::int64_t>(k + 1) * T + 1 + row;
            for (int c = 0; c < kFeatureDim; ++c) {
              REQUIRE(block[static_cast<std::size_t>(row) * kFeatureDim + c] ==
                      feats[static_cast<std::size_t>(src)][c]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("the documented worked example indexes the expected frames") {
  // T=4, K=2, t=12: current {9..12}, past1 {5..8}, past2 {1..4}.
  std::vector<FeatureVector> feats(13);
  for (std::size_t i = 0; i < feats.size(); ++i) feats[i].fill(static_cast<double>(i));
  const FeatureWindowSet ws = build_window_set(feats, 12, 4, 2);
  CHECK(ws.current.front() == 9.0);
  CHECK(ws.current.back() == 12.0);
  CHECK(ws.past[0].front() == 5.0);
  CHECK(ws.past[0].back() == 8.0);
  CHECK(ws.past[1].front() == 1.0);
  CHECK(ws.past[1].back() == 4.0);
  CHECK(earliest_full_window(4, 2) == 11);
}

TEST_CASE("insufficient history throws unless padding is requested") {
  std::vector<FeatureVector> feats(10);
  for (std::size_t i = 0; i < feats.size(); ++i) feats[i].fill(static_cast<double>(i));
  CHECK_THROWS_AS(build_window_set(feats, 6, 4, 1), HistoryError);  // needs t >= 7
  CHECK_NOTHROW(build_window_set(feats, 7, 4, 1));

  // Padding clamps pre-stream indices to frame 0.
  const FeatureWindowSet ws = build_window_set(feats, 4, 4, 1, /*pad_history=*/true);
  CHECK(ws.past[0].front() == 0.0);                    // frames -3..0 clamp to 0
  CHECK(ws.past[0][3 * kFeatureDim] == 0.0);
  CHECK(ws.current.front() == 1.0);
}

TEST_CASE("window assembly validates its arguments") {
  std::vector<FeatureVector> feats(10);
  CHECK_THROWS_AS(build_window_set(feats, 3, 1, 0), InvalidInputError);    // T < 2
  CHECK_THROWS_AS(build_window_set(feats, 3, 4, -1), InvalidInputError);   // K < 0
  CHECK_THROWS_AS(build_window_set(feats, 12, 4, 0), InvalidInputError);   // t beyond stream
  CHECK_THROWS_AS(build_window_set(feats, -1, 4, 0), InvalidInputError);
}

TEST_CASE("translating all trackers shifts only positions, not motion features") {
  Rng rng(36);
  auto frames = random_stream(rng, 3);
  auto shifted = frames;
  const Vec3 offset{1.5, -0.25, 3.0};
  for (auto& fr : shifted) {
    for (auto& p : fr.position) p = p + offset;
  }
  const FeatureVector base = frame_features(frames[1], frames[2]);
  const FeatureVector moved = frame_features(shifted[1], shifted[2]);
  for (int tr = 0; tr < kNumTrackers; ++tr) {
    const int b = tr * kTrackerFeatureDim;
    for (int i = 0; i < 3; ++i) CHECK(moved[b + i] == doctest::Approx(base[b + i] + offset[i]));
    // theta, v, w identical
    for (int i = 3; i < 9; ++i) CHECK(moved[b + i] == base[b + i]);
    for (int i = 9; i < 12; ++i) CHECK(moved[b + i] == doctest::Approx(base[b + i]).epsilon(1e-12));
    for (int i = 12; i < 18; ++i) CHECK(moved[b + i] == base[b + i]);
  }
}
