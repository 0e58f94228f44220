#include <benchmark/benchmark.h>

#include "twmlp/features.hpp"
#include "twmlp/model.hpp"
#include "twmlp/motion_data.hpp"
#include "twmlp/streaming.hpp"

using namespace twmlp;

namespace {

ModelConfig desk_config() {
  ModelConfig c;
  c.T = 16;
  c.K = 2;
  c.L = 4;
  c.D = 64;
  c.fusion_layers = {1, 3};
  return c;
}

ModelConfig windowed_config() {
  ModelConfig c;
  c.T = 41;
  c.K = 2;
  c.L = 10;
  c.D = 512;
  c.fusion_layers = default_fusion_layers(10);
  return c;
}

ModelConfig wide_window_config() {
  ModelConfig c;
  c.T = 196;
  c.K = 0;
  c.L = 12;
  c.D = 512;
  c.fusion_layers = {};
  return c;
}

FeatureWindowSet synthetic_windows(const ModelConfig& c) {
  MotionSpec spec;
  spec.duration_s = static_cast<double>(earliest_full_window(c.T, c.K) + 2) / spec.fps;
  MotionClip clip = synth_motion(spec, 7);
  auto stream = derive_sparse_stream(clip, default_skeleton());
  auto features = featurize_stream(stream);
  return build_window_set(features, earliest_full_window(c.T, c.K), c.T, c.K);
}

void bench_forward(benchmark::State& state, const ModelConfig& config) {
  ModelParams<float> params = init_params<float>(config, 7);
  FeatureWindowSet windows = synthetic_windows(config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, windows).data());
  }
}

void BM_ForwardDesk(benchmark::State& state) { bench_forward(state, desk_config()); }
void BM_ForwardWindowed(benchmark::State& state) { bench_forward(state, windowed_config()); }
void BM_ForwardWideWindow(benchmark::State& state) { bench_forward(state, wide_window_config()); }

void bench_push_frame(benchmark::State& state, bool fast_path) {
  const ModelConfig config = desk_config();
  MotionSpec spec;
  spec.duration_s = 30.0;
  MotionClip clip = synth_motion(spec, 7);
  auto stream = derive_sparse_stream(clip, default_skeleton());
  StreamingOptions options;
  options.fast_path = fast_path;
  StreamingSession session(init_params<float>(config, 7), default_skeleton(), options);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(session.push_frame(stream[i]));
    i = i + 1;
    if (i == stream.size()) {  // restart without timing the rebuild
      state.PauseTiming();
      session = StreamingSession(init_params<float>(config, 7), default_skeleton(), options);
      i = 0;
      state.ResumeTiming();
    }
  }
}

void BM_PushFrame(benchmark::State& state) { bench_push_frame(state, false); }
void BM_PushFrameFastPath(benchmark::State& state) { bench_push_frame(state, true); }

BENCHMARK(BM_ForwardDesk);
BENCHMARK(BM_ForwardWindowed);
BENCHMARK(BM_ForwardWideWindow);
BENCHMARK(BM_PushFrame);
BENCHMARK(BM_PushFrameFastPath);

}  // namespace
