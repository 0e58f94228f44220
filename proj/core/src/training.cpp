#include "twmlp/training.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "twmlp/rng.hpp"

namespace twmlp {

double lr_at(const LrSchedule& schedule, int step) {
  if (step < 0) throw ContractError("lr_at: negative step");
  return step < schedule.breakpoint ? schedule.initial : schedule.after;
}

TrainConfig TrainConfig::desk_scale() {
  TrainConfig c;
  c.model.T = 16;
  c.model.K = 2;
  c.model.L = 4;
  c.model.D = 64;
  c.model.fusion_layers = default_fusion_layers(4);
  c.steps = 2000;
  c.batch = 16;
  c.lr.breakpoint = 1500;
  return c;
}

void validate_train_config(const TrainConfig& config) {
  validate_config(config.model);
  if (config.steps < 1) throw ConfigError("train: steps must be >= 1");
  if (config.batch < 1) throw ConfigError("train: batch must be >= 1");
  if (config.lr.breakpoint > config.steps) {
    throw ConfigError("train: lr breakpoint " + std::to_string(config.lr.breakpoint) +
                      " exceeds steps " + std::to_string(config.steps));
  }
  if (config.checkpoint_every < 0 || config.eval_every < 0) {
    throw ConfigError("train: cadences must be >= 0");
  }
  if (config.clip_norm < 0.0) throw ConfigError("train: clip_norm must be >= 0");
  if (config.weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
}

OptimizerState OptimizerState::for_params(const ModelParams<float>& params) {
  OptimizerState s;
  s.m.reserve(params.tensors.size());
  s.v.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  }
  return s;
}

void adamw_step(ModelParams<float>& params, std::span<const std::span<const float>> grads,
                OptimizerState& state, double lr, double weight_decay, double clip_norm) {
  if (grads.size() != params.tensors.size() || state.m.size() != params.tensors.size()) {
    throw ShapeError("adamw_step: gradient/state count mismatch");
  }
  double sq_norm = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params.tensors[i].size()) {
      throw ShapeError("adamw_step: gradient shape mismatch for " + params.tensors[i].name);
    }
    for (const float g : grads[i]) {
      if (!std::isfinite(g)) {
        throw TrainingDivergedError(
            state.step, "non-finite gradient in tensor '" + params.tensors[i].name + "'");
      }
      sq_norm += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  double scale = 1.0;
  if (clip_norm > 0.0) {
    const double norm = std::sqrt(sq_norm);
    if (norm > clip_norm) scale = clip_norm / norm;
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& data = params.tensors[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t e = 0; e < data.size(); ++e) {
      const double g = static_cast<double>(grads[i][e]) * scale;
      m[e] = state.beta1 * m[e] + (1.0 - state.beta1) * g;
      v[e] = state.beta2 * v[e] + (1.0 - state.beta2) * g * g;
      const double mhat = m[e] / bc1;
      const double vhat = v[e] / bc2;
      double p = static_cast<double>(data[e]);
      p -= lr * (mhat / (std::sqrt(vhat) + state.eps) + weight_decay * p);
      if (!std::isfinite(p)) {
        throw TrainingDivergedError(
            state.step, "non-finite parameter in tensor '" + params.tensors[i].name + "'");
      }
      data[e] = static_cast<float>(p);
    }
  }
}

std::string format_step_log(const StepLog& log) {
  std::ostringstream os;
  os.precision(9);
  os << "step " << log.step << " lr " << log.lr << " l_theta " << log.l_theta << " l_rv "
     << log.l_rv << " l_reg " << log.l_reg << " total " << log.total << " s_theta "
     << log.s_theta << " s_rv " << log.s_rv;
  return os.str();
}

namespace {

struct PreparedClip {
  std::vector<FeatureVector> features;
  std::vector<float> gt_rows;  // frames x 132, row-major
  std::size_t frames = 0;
};

PreparedClip prepare_clip(const MotionClip& clip, const KinematicTree& tree) {
  PreparedClip p;
  p.features = featurize_stream(derive_sparse_stream(clip, tree));
  const PoseSequence poses = clip_to_pose_sequence(clip);
  p.frames = poses.frames.size();
  p.gt_rows.resize(p.frames * kOutputDim);
  for (std::size_t f = 0; f < p.frames; ++f) {
    pose_to_values(poses.frames[f], p.gt_rows.data() + f * kOutputDim);
  }
  return p;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<MotionClip>& clips,
                  const KinematicTree& tree, const std::string& out_dir,
                  const std::vector<MotionClip>& test_clips) {
  validate_train_config(config);
  if (clips.empty()) throw ConfigError("train: no clips");

  const int T = config.model.T;
  const int K = config.model.K;
  const auto warm = earliest_full_window(T, K);

  TrainResult result{init_params<float>(config.model, config.seed), {}, "", {}};
  std::vector<PreparedClip> usable;
  for (const MotionClip& clip : clips) {
    if (static_cast<std::int64_t>(clip.frames.size()) <= warm) {
      result.skipped_clips.push_back(clip.id);
      continue;
    }
    usable.push_back(prepare_clip(clip, tree));
  }
  if (usable.empty()) {
    throw ConfigError("train: every clip is shorter than the " + std::to_string(warm + 1) +
                      " frames needed for T=" + std::to_string(T) + ", K=" + std::to_string(K));
  }

  std::ofstream log_file;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    log_file.open(out_dir + "/train_log.txt");
    if (!log_file) throw FormatError("train: cannot open log file in " + out_dir);
    log_file << "# step lr l_theta l_rv l_reg total s_theta s_rv\n";
    for (const auto& id : result.skipped_clips) {
      log_file << "# skipped clip too short: " << id << '\n';
    }
  }

  OptimizerState state = OptimizerState::for_params(result.params);
  Rng sampler(config.seed + 1);  // init_params consumes the raw seed

  for (int step = 0; step < config.steps; ++step) {
    const double lr = lr_at(config.lr, step);

    Graph<float> g;
    const std::vector<TensorId> leaves = make_param_leaves(g, result.params, true);
    const std::span<const TensorId> leaf_span(leaves);
    TensorId lt_sum{};
    TensorId lrv_sum{};
    for (int b = 0; b < config.batch; ++b) {
      const PreparedClip& pc = usable[sampler.index(usable.size())];
      const auto t = warm + static_cast<std::int64_t>(
                                sampler.index(pc.frames - static_cast<std::size_t>(warm)));
      const FeatureWindowSet windows = build_window_set(
          std::span<const FeatureVector>(pc.features), t, T, K, config.pad_history);
      const TensorId out = forward_from_leaves(g, result.params, leaf_span, windows);
      const std::size_t first_row = static_cast<std::size_t>(t - T + 1) * kOutputDim;
      const TensorId gt = g.constant(
          T, kOutputDim,
          std::span<const float>(pc.gt_rows.data() + first_row,
                                 static_cast<std::size_t>(T) * kOutputDim));
      const TensorId lt = rotation_loss_node(g, out, gt);
      const TensorId lrv = rotation_velocity_loss_node(g, out, gt);
      lt_sum = lt_sum.valid() ? g.add(lt_sum, lt) : lt;
      lrv_sum = lrv_sum.valid() ? g.add(lrv_sum, lrv) : lrv;
    }
    const float inv_batch = 1.0f / static_cast<float>(config.batch);
    const TensorId l_theta = g.scale(lt_sum, inv_batch);
    const TensorId l_rv = g.scale(lrv_sum, inv_batch);
    const TensorId l_reg = l2_regularizer_node(g, result.params, leaf_span);
    const TotalLossNodes total = total_loss_node(
        g, l_theta, l_rv, l_reg, leaves[static_cast<std::size_t>(result.params.s_theta)],
        leaves[static_cast<std::size_t>(result.params.s_rv)], config.loss);

    g.backward(total.total);

    StepLog entry;
    entry.step = step;
    entry.lr = lr;
    entry.l_theta = g.item(l_theta);
    entry.l_rv = g.item(l_rv);
    entry.l_reg = g.item(l_reg);
    entry.total = g.item(total.total);
    entry.s_theta =
        result.params.tensors[static_cast<std::size_t>(result.params.s_theta)].data[0];
    entry.s_rv = result.params.tensors[static_cast<std::size_t>(result.params.s_rv)].data[0];

    std::vector<std::span<const float>> grads;
    grads.reserve(leaves.size());
    for (const TensorId id : leaves) grads.push_back(g.grad(id));
    adamw_step(result.params, std::span<const std::span<const float>>(grads), state, lr,
               config.weight_decay, config.clip_norm);

    result.log.push_back(entry);
    if (log_file) log_file << format_step_log(entry) << '\n';

    if (!out_dir.empty() && config.checkpoint_every > 0 &&
        (step + 1) % config.checkpoint_every == 0) {
      save_checkpoint(result.params,
                      out_dir + "/checkpoint_step" + std::to_string(step + 1) + ".twmlp");
    }
    if (config.eval_every > 0 && !test_clips.empty() && (step + 1) % config.eval_every == 0) {
      const MetricsReport r =
          evaluate(result.params, test_clips, tree, Protocol::kOnline, 1);
      if (log_file) {
        log_file << "# eval step " << (step + 1) << " mpjre " << r.mpjre_deg << " mpjpe "
                 << r.mpjpe_cm << " mpjve " << r.mpjve_cm_s << " jitter " << r.jitter_1e2_m_s3
                 << '\n';
      }
    }
  }

  if (!out_dir.empty()) {
    result.checkpoint_path = out_dir + "/checkpoint_final.twmlp";
    save_checkpoint(result.params, result.checkpoint_path);
  }
  return result;
}

Protocol parse_protocol(const std::string& name) {
  if (name == "online") return Protocol::kOnline;
  if (name == "sequence") return Protocol::kSequence;
  throw ConfigError("unknown protocol '" + name + "' (online|sequence)");
}

std::string protocol_name(Protocol protocol) {
  return protocol == Protocol::kOnline ? "online" : "sequence";
}

ClipEval predict_clip(const ModelParams<float>& params, const MotionClip& clip,
                      const KinematicTree& tree, Protocol protocol) {
  const int T = params.config.T;
  const int K = params.config.K;
  const auto warm = earliest_full_window(T, K);
  const auto frames = static_cast<std::int64_t>(clip.frames.size());
  if (frames <= warm) {
    throw ContractError("predict_clip: clip '" + clip.id + "' has " + std::to_string(frames) +
                        " frames, needs more than " + std::to_string(warm));
  }

  const std::vector<TrackedFrame> stream = derive_sparse_stream(clip, tree);
  const std::vector<FeatureVector> features = featurize_stream(stream);
  const PoseSequence gt_all = clip_to_pose_sequence(clip);

  ClipEval out;
  out.pred.fps = clip.fps;
  out.gt.fps = clip.fps;

  auto emit = [&](std::int64_t frame, const float* row) {
    FullBodyPose pose = pose_from_values(row);
    pose.root = recover_root_translation(
        pose.rotation6, stream[static_cast<std::size_t>(frame)].position[0], tree);
    out.pred.frames.push_back(pose);
    out.gt.frames.push_back(gt_all.frames[static_cast<std::size_t>(frame)]);
  };

  if (protocol == Protocol::kOnline) {
    for (std::int64_t t = warm; t < frames; ++t) {
      const FeatureWindowSet windows =
          build_window_set(std::span<const FeatureVector>(features), t, T, K);
      const std::vector<float> y = forward(params, windows);
      emit(t, y.data() + static_cast<std::size_t>(T - 1) * kOutputDim);
    }
  } else {
    for (std::int64_t t = warm; t < frames; t += T) {
      const FeatureWindowSet windows =
          build_window_set(std::span<const FeatureVector>(features), t, T, K);
      const std::vector<float> y = forward(params, windows);
      for (int r = 0; r < T; ++r) {
        emit(t - T + 1 + r, y.data() + static_cast<std::size_t>(r) * kOutputDim);
      }
    }
  }
  return out;
}

namespace {

MetricsReport merge_reports(const std::vector<MetricsReport>& reports) {
  MetricsReport merged;
  double w_pos = 0.0, w_vel = 0.0, w_jit = 0.0;
  for (const MetricsReport& r : reports) {
    const auto frames = static_cast<double>(r.frames);
    merged.frames += r.frames;
    merged.mpjre_deg += r.mpjre_deg * frames;
    merged.mpjpe_cm += r.mpjpe_cm * frames;
    merged.root_pe_cm += r.root_pe_cm * frames;
    merged.hand_pe_cm += r.hand_pe_cm * frames;
    merged.upper_pe_cm += r.upper_pe_cm * frames;
    merged.lower_pe_cm += r.lower_pe_cm * frames;
    merged.mpjve_cm_s += r.mpjve_cm_s * (frames - 1.0);
    merged.jitter_1e2_m_s3 += r.jitter_1e2_m_s3 * (frames - 3.0);
    w_pos += frames;
    w_vel += frames - 1.0;
    w_jit += frames - 3.0;
  }
  merged.mpjre_deg /= w_pos;
  merged.mpjpe_cm /= w_pos;
  merged.root_pe_cm /= w_pos;
  merged.hand_pe_cm /= w_pos;
  merged.upper_pe_cm /= w_pos;
  merged.lower_pe_cm /= w_pos;
  merged.mpjve_cm_s /= w_vel;
  merged.jitter_1e2_m_s3 /= w_jit;
  merged.fps = reports.front().fps;
  return merged;
}

}  // namespace

MetricsReport evaluate(const ModelParams<float>& params, const std::vector<MotionClip>& clips,
                       const KinematicTree& tree, Protocol protocol, int threads) {
  if (clips.empty()) throw ContractError("evaluate: no clips");
  std::vector<MetricsReport> reports(clips.size());

  auto eval_one = [&](std::size_t i) {
    const ClipEval ce = predict_clip(params, clips[i], tree, protocol);
    reports[i] = compute_metrics(ce.pred, ce.gt, tree, clips[i].fps);
  };

  const int workers = std::min<int>(std::max(threads, 1), static_cast<int>(clips.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < clips.size(); ++i) eval_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < clips.size(); i = next.fetch_add(1)) {
          eval_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return merge_reports(reports);
}

std::string ablation_grid(const std::vector<GridEntry>& entries,
                          const std::vector<MotionClip>& clips, const KinematicTree& tree,
                          Protocol protocol, std::uint64_t seed, int threads) {
  if (entries.empty()) throw ContractError("ablation_grid: no configs");
  std::ostringstream os;
  os << "T K mpjre_deg mpjpe_cm mpjve_cm_s jitter_1e2_m_s3 root_pe_cm hand_pe_cm upper_pe_cm "
        "lower_pe_cm\n";
  os.precision(4);
  os << std::fixed;
  for (const GridEntry& e : entries) {
    const ModelParams<float> params = e.checkpoint_path.empty()
                                          ? init_params<float>(e.config, seed)
                                          : load_checkpoint(e.checkpoint_path);
    const MetricsReport r = evaluate(params, clips, tree, protocol, threads);
    os << params.config.T << ' ' << params.config.K << ' ' << r.mpjre_deg << ' ' << r.mpjpe_cm
       << ' ' << r.mpjve_cm_s << ' ' << r.jitter_1e2_m_s3 << ' ' << r.root_pe_cm << ' '
       << r.hand_pe_cm << ' ' << r.upper_pe_cm << ' ' << r.lower_pe_cm << '\n';
  }
  return os.str();
}

}  // namespace twmlp
