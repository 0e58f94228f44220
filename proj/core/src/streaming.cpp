#include "twmlp/streaming.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "twmlp/errors.hpp"
#include "twmlp/motion_data.hpp"

namespace twmlp {

namespace {

/// One window-block row: silu(layer_norm(W x + b)) for a single frame. The
/// arithmetic mirrors the graph kernels expression for expression so cached
/// activations are bit-identical to the batch path.
std::vector<float> window_row_activation(const ModelParams<float>& params, int k,
                                         const FeatureVector& feature) {
  const ModelConfig& c = params.config;
  const auto& wi = params.windows[static_cast<std::size_t>(k)];
  const auto& w = params.tensors[static_cast<std::size_t>(wi.proj_weight)];
  const auto& b = params.tensors[static_cast<std::size_t>(wi.proj_bias)];
  const auto& gain = params.tensors[static_cast<std::size_t>(wi.ln_gain)];
  const auto& bias = params.tensors[static_cast<std::size_t>(wi.ln_bias)];
  const int d = c.D;

  float x[kFeatureDim];
  for (int i = 0; i < kFeatureDim; ++i) x[i] = static_cast<float>(feature[i]);

  std::vector<float> row(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const float* wj = w.data.data() + static_cast<std::size_t>(j) * kFeatureDim;
    float acc = b.data[static_cast<std::size_t>(j)];
    for (int i = 0; i < kFeatureDim; ++i) acc += x[i] * wj[i];
    row[static_cast<std::size_t>(j)] = acc;
  }

  float mean = 0.0f;
  for (int j = 0; j < d; ++j) mean += row[static_cast<std::size_t>(j)];
  mean /= static_cast<float>(d);
  float var = 0.0f;
  for (int j = 0; j < d; ++j) {
    const float t = row[static_cast<std::size_t>(j)] - mean;
    var += t * t;
  }
  var /= static_cast<float>(d);
  const float rstd = 1.0f / std::sqrt(var + 1e-5f);
  for (int j = 0; j < d; ++j) {
    const float normed = (row[static_cast<std::size_t>(j)] - mean) * rstd *
                             gain.data[static_cast<std::size_t>(j)] +
                         bias.data[static_cast<std::size_t>(j)];
    const float sg = 1.0f / (1.0f + std::exp(-normed));
    row[static_cast<std::size_t>(j)] = normed * sg;
  }
  return row;
}

}  // namespace

StreamingSession::StreamingSession(ModelParams<float> params, KinematicTree tree,
                                   StreamingOptions options)
    : params_(std::move(params)), tree_(std::move(tree)), options_(options) {
  validate_config(params_.config);
  capacity_ = static_cast<std::size_t>(params_.config.T) *
              static_cast<std::size_t>(params_.config.K + 1);
  caches_.resize(static_cast<std::size_t>(params_.config.K));
}

void StreamingSession::fill_window(std::vector<double>& dst, int k) const {
  // ring_.back() is the newest frame; row r of window k is kT + T-1-r
  // frames back from it. Missing history repeats the oldest held frame
  // (only reachable with pad_history).
  const int T = params_.config.T;
  dst.resize(static_cast<std::size_t>(T) * kFeatureDim);
  const auto newest = static_cast<std::int64_t>(ring_.size()) - 1;
  for (int r = 0; r < T; ++r) {
    std::int64_t pos = newest - (static_cast<std::int64_t>(k) * T + (T - 1 - r));
    if (pos < 0) {
      if (!options_.pad_history) {
        throw HistoryError("streaming: window assembly before warm-up");
      }
      pos = 0;
    }
    const FeatureVector& f = ring_[static_cast<std::size_t>(pos)];
    std::copy(f.begin(), f.end(), dst.begin() + static_cast<std::size_t>(r) * kFeatureDim);
  }
}

FeatureWindowSet StreamingSession::windows_from_ring() const {
  const int K = params_.config.K;
  FeatureWindowSet set;
  set.T = params_.config.T;
  set.K = K;
  fill_window(set.current, 0);
  set.past.resize(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) fill_window(set.past[static_cast<std::size_t>(k - 1)], k);
  return set;
}

std::vector<float> StreamingSession::cached_token(int k) const {
  // Chronological mean over the cached rows, summed oldest to newest in the
  // same order as the batch mean-pool.
  const auto& cache = caches_[static_cast<std::size_t>(k)];
  const int d = params_.config.D;
  std::vector<float> token(static_cast<std::size_t>(d), 0.0f);
  for (const auto& row : cache) {
    for (int j = 0; j < d; ++j) token[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
  }
  const float inv = 1.0f / static_cast<float>(cache.size());
  for (int j = 0; j < d; ++j) token[static_cast<std::size_t>(j)] *= inv;
  return token;
}

std::optional<FullBodyPose> StreamingSession::push_frame(const TrackedFrame& frame) {
  if (prev_.has_value() && frame.t != prev_->t + 1) {
    throw SequencingError("push_frame: timestamp " + std::to_string(frame.t) +
                          " does not follow " + std::to_string(prev_->t));
  }
  const FeatureVector feature =
      prev_.has_value() ? frame_features(*prev_, frame) : frame_features(frame);
  prev_ = frame;
  ring_.push_back(feature);
  if (ring_.size() > capacity_) ring_.pop_front();
  const std::int64_t t = count_;  // session-relative index of this frame
  ++count_;

  if (options_.fast_path) {
    // Frame t - kT is the newest member of window k; compute its activation
    // exactly once when it enters.
    const int T = params_.config.T;
    for (int k = 1; k <= params_.config.K; ++k) {
      const std::int64_t entering = t - static_cast<std::int64_t>(k) * T;
      if (entering < 0) continue;
      const std::int64_t back = t - entering;  // distance from newest ring entry
      const auto pos = static_cast<std::size_t>(static_cast<std::int64_t>(ring_.size()) - 1 - back);
      auto& cache = caches_[static_cast<std::size_t>(k - 1)];
      cache.push_back(window_row_activation(params_, k - 1, ring_[pos]));
      if (cache.size() > static_cast<std::size_t>(T)) cache.pop_front();
    }
  }

  const bool ready = warm() || (options_.pad_history && count_ >= 1);
  if (!ready) return std::nullopt;

  const ModelConfig& c = params_.config;
  std::vector<float> output;
  if (options_.fast_path && warm()) {
    Graph<float> g;
    const std::vector<TensorId> leaves = make_param_leaves(g, params_, false);
    std::vector<double> current_rows;
    fill_window(current_rows, 0);  // cached tokens replace the past windows
    TensorId current = g.constant(c.T, c.d_in, detail::cast_row_major<float>(current_rows));
    std::vector<TensorId> tokens;
    for (int k = 0; k < c.K; ++k) {
      const std::vector<float> z = cached_token(k);
      tokens.push_back(g.constant(1, c.D, z));
    }
    const TensorId out = forward_core(g, params_, std::span<const TensorId>(leaves), current,
                                      std::span<const TensorId>(tokens));
    const auto v = g.value(out);
    output.assign(v.begin(), v.end());
  } else {
    output = forward(params_, windows_from_ring());
  }

  FullBodyPose pose =
      pose_from_values(output.data() + static_cast<std::size_t>(c.T - 1) * kOutputDim);
  pose.root = recover_root_translation(pose.rotation6, frame.position[0], tree_);
  return pose;
}

LatencyReport bench_latency(const ModelConfig& config, double duration_s, int input_fps,
                            std::uint64_t seed, bool fast_path) {
  validate_config(config);
  if (input_fps < 1) throw InvalidInputError("bench_latency: input_fps must be >= 1");
  const auto frames = static_cast<std::int64_t>(std::llround(duration_s * input_fps));
  const auto warm = earliest_full_window(config.T, config.K) + 1;
  if (frames < warm + 5) {
    throw InvalidInputError("bench_latency: " + std::to_string(frames) +
                            " frames leave fewer than 5 measurements after the " +
                            std::to_string(warm) + "-frame warm-up");
  }

  MotionSpec spec;
  spec.kind = MotionKind::kWalk;
  spec.fps = input_fps;
  spec.duration_s = static_cast<double>(frames) / input_fps + 1.0;
  const KinematicTree tree = default_skeleton();
  const std::vector<TrackedFrame> stream = derive_sparse_stream(synth_motion(spec, seed), tree);

  StreamingOptions options;
  options.fast_path = fast_path;
  StreamingSession session(init_params<float>(config, seed), tree, options);

  LatencyReport report;
  report.input_fps = input_fps;
  report.samples_ms.reserve(static_cast<std::size_t>(frames));
  std::vector<double> emitting;
  using Clock = std::chrono::steady_clock;
  for (std::int64_t f = 0; f < frames; ++f) {
    const auto t0 = Clock::now();
    const auto pose = session.push_frame(stream[static_cast<std::size_t>(f)]);
    const auto t1 = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report.samples_ms.push_back(ms);
    if (pose.has_value()) {
      emitting.push_back(ms);
    } else {
      ++report.warmup_frames;
    }
  }

  double sum = 0.0;
  for (const double ms : emitting) sum += ms;
  report.mean_ms = sum / static_cast<double>(emitting.size());
  std::vector<double> sorted = emitting;
  std::sort(sorted.begin(), sorted.end());
  auto rank = [&sorted](double q) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
  };
  report.p50_ms = rank(0.5);
  report.p99_ms = rank(0.99);
  report.achieved_fps = std::min(static_cast<double>(input_fps), 1000.0 / report.mean_ms);
  return report;
}

std::string format_latency_report(const LatencyReport& report) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  os << "samples " << report.samples_ms.size() << '\n'
     << "warmup_frames " << report.warmup_frames << '\n'
     << "mean_ms " << report.mean_ms << '\n'
     << "p50_ms " << report.p50_ms << '\n'
     << "p99_ms " << report.p99_ms << '\n'
     << "input_fps " << report.input_fps << '\n'
     << "achieved_fps " << report.achieved_fps << '\n';
  return os.str();
}

TrackedFrame parse_tracked_frame_csv(const std::string& line) {
  std::istringstream ls(line);
  std::string field;
  std::vector<double> values;
  while (std::getline(ls, field, ',')) {
    try {
      values.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw FormatError("stream frame: non-numeric field '" + field + "'");
    }
  }
  if (values.size() != 37) {
    throw FormatError("stream frame: expected 37 comma-separated fields, got " +
                      std::to_string(values.size()));
  }
  TrackedFrame frame;
  frame.t = static_cast<std::int64_t>(std::llround(values[0]));
  std::size_t at = 1;
  for (int j = 0; j < kNumTrackers; ++j) {
    frame.position[j] = {values[at], values[at + 1], values[at + 2]};
    at += 3;
    Mat3 r;
    for (int e = 0; e < 9; ++e) r.m[static_cast<std::size_t>(e)] = values[at + e];
    at += 9;
    if (!is_rotation_matrix(r, 1e-3)) {
      throw InvalidInputError("stream frame: tracker " + std::to_string(j) +
                              " orientation is not a rotation matrix");
    }
    frame.orientation[j] = r;
  }
  return frame;
}

std::string format_pose_csv(std::int64_t t, const FullBodyPose& pose) {
  std::ostringstream os;
  os.precision(9);
  os << t;
  for (int j = 0; j < kNumJoints; ++j) {
    for (int c = 0; c < 6; ++c) os << ',' << pose.rotation6[j][c];
  }
  for (int c = 0; c < 3; ++c) os << ',' << pose.root[c];
  return os.str();
}

}  // namespace twmlp
