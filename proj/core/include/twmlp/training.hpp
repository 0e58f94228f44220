#pragma once

// AdamW training loop over windowed samples drawn from motion clips, plus
// the evaluation driver (sliding-window protocols, clip-parallel metric
// aggregation, ablation grid).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twmlp/losses.hpp"
#include "twmlp/metrics.hpp"
#include "twmlp/model.hpp"
#include "twmlp/motion_data.hpp"

namespace twmlp {

/// Step schedule: `initial` before the breakpoint step, `after` from the
/// breakpoint on. No warmup, no decay shape beyond the single drop.
struct LrSchedule {
  double initial = 3e-4;
  double after = 1e-5;
  int breakpoint = 225000;
};

double lr_at(const LrSchedule& schedule, int step);

struct TrainConfig {
  ModelConfig model;
  int steps = 300000;
  int batch = 128;
  LrSchedule lr;
  std::uint64_t seed = 1;
  LossConfig loss;
  int checkpoint_every = 0;   // extra checkpoints every N steps; 0 = final only
  int eval_every = 0;         // evaluate on test clips every N steps; 0 = never
  double clip_norm = 0.0;     // global-norm gradient clipping; 0 = off
  double weight_decay = 0.0;  // decoupled decay; 0 while the explicit L2 term is active
  bool pad_history = false;

  /// Desk-scale run that finishes in minutes: T=16, K=2, L=4, D=64,
  /// 2000 steps, batch 16, lr drop at step 1500.
  static TrainConfig desk_scale();
};

/// ConfigError on non-positive steps/batch or breakpoint > steps; also
/// validates the model config.
void validate_train_config(const TrainConfig& config);

/// Per-tensor first/second moment accumulators (kept in double; parameters
/// stay float).
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static OptimizerState for_params(const ModelParams<float>& params);
};

/// Bias-corrected AdamW update, in place. `grads` aligns with
/// params.tensors. clip_norm > 0 rescales gradients to that global norm
/// first. Non-finite gradients raise TrainingDivergedError carrying the
/// optimizer step.
void adamw_step(ModelParams<float>& params, std::span<const std::span<const float>> grads,
                OptimizerState& state, double lr, double weight_decay, double clip_norm = 0.0);

struct StepLog {
  int step = 0;
  double lr = 0.0;
  double l_theta = 0.0;
  double l_rv = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  double s_theta = 0.0;
  double s_rv = 0.0;
};

std::string format_step_log(const StepLog& log);

struct TrainResult {
  ModelParams<float> params;
  std::vector<StepLog> log;
  std::string checkpoint_path;             // final checkpoint (when out_dir given)
  std::vector<std::string> skipped_clips;  // too short for T*(K+1) frames
};

/// Runs the full loop: deterministic per seed (sampling, init, updates).
/// Writes train_log.txt and checkpoints under out_dir when non-empty.
/// test_clips are only touched when eval_every > 0.
TrainResult train(const TrainConfig& config, const std::vector<MotionClip>& clips,
                  const KinematicTree& tree, const std::string& out_dir = "",
                  const std::vector<MotionClip>& test_clips = {});

enum class Protocol { kOnline, kSequence };

Protocol parse_protocol(const std::string& name);  // "online" | "sequence"
std::string protocol_name(Protocol protocol);

/// Aligned prediction/ground-truth pose sequences for one clip. Online
/// protocol slides the window one frame at a time and keeps the final frame
/// of each prediction; sequence protocol tiles the clip with non-overlapping
/// windows and keeps every frame. Prediction roots are head-anchored to the
/// ground-truth tracker stream.
struct ClipEval {
  PoseSequence pred;
  PoseSequence gt;
};

ClipEval predict_clip(const ModelParams<float>& params, const MotionClip& clip,
                      const KinematicTree& tree, Protocol protocol);

/// Metrics over test clips, merged as count-weighted means in clip order.
/// threads > 1 evaluates clips concurrently (same result as serial).
MetricsReport evaluate(const ModelParams<float>& params, const std::vector<MotionClip>& clips,
                       const KinematicTree& tree, Protocol protocol, int threads = 1);

/// One grid row per entry: checkpoint_path loads a trained model, an empty
/// path evaluates a freshly initialized one (structure/ablation harness).
struct GridEntry {
  ModelConfig config;
  std::string checkpoint_path;
};

std::string ablation_grid(const std::vector<GridEntry>& entries,
                          const std::vector<MotionClip>& clips, const KinematicTree& tree,
                          Protocol protocol, std::uint64_t seed, int threads = 1);

}  // namespace twmlp
