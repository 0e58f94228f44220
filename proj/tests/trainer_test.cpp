// Learning-rate schedule, AdamW update math, the training loop's
// determinism and artifacts, and the evaluation protocols. Optimizer
// updates are checked against a hand-computed double-precision reference.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "twmlp/errors.hpp"
#include "twmlp/kinematics.hpp"
#include "twmlp/model.hpp"
#include "twmlp/motion_data.hpp"
#include "twmlp/training.hpp"

using namespace twmlp;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_model() {
  ModelConfig c;
  c.T = 4;
  c.K = 1;
  c.L = 1;
  c.D = 8;
  c.fusion_layers = {1};
  return c;
}

TrainConfig tiny_train(int steps = 3) {
  TrainConfig c;
  c.model = tiny_model();
  c.steps = steps;
  c.batch = 2;
  c.lr.breakpoint = steps;  // stay on the initial rate
  return c;
}

std::vector<MotionClip> walk_clips() {
  return {synth_motion({MotionKind::kWalk, 1.2, 30}, 2),
          synth_motion({MotionKind::kRun, 1.0, 30}, 3)};
}

bool params_equal(const ModelParams<float>& a, const ModelParams<float>& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    if (a.tensors[i].data != b.tensors[i].data) return false;
  }
  return true;
}

// Grad spans aligned with params.tensors, every element set to `value`.
struct GradStore {
  std::vector<std::vector<float>> store;
  std::vector<std::span<const float>> spans;

  GradStore(const ModelParams<float>& params, float value) {
    for (const auto& t : params.tensors) store.emplace_back(t.size(), value);
    for (const auto& v : store) spans.emplace_back(v);
  }
  std::span<const std::span<const float>> view() const { return spans; }
};

}  // namespace

TEST_CASE("learning rate steps from initial to after at the breakpoint") {
  const LrSchedule s{3e-4, 1e-5, 100};
  CHECK(lr_at(s, 0) == 3e-4);
  CHECK(lr_at(s, 99) == 3e-4);
  CHECK(lr_at(s, 100) == 1e-5);
  CHECK(lr_at(s, 100000) == 1e-5);
  CHECK_THROWS_AS(lr_at(s, -1), ContractError);
}

TEST_CASE("desk-scale preset matches its documented shape") {
  const TrainConfig c = TrainConfig::desk_scale();
  CHECK(c.model.T == 16);
  CHECK(c.model.K == 2);
  CHECK(c.model.L == 4);
  CHECK(c.model.D == 64);
  CHECK(c.model.fusion_layers == std::vector<int>{1, 3});
  CHECK(c.steps == 2000);
  CHECK(c.batch == 16);
  CHECK(c.lr.breakpoint == 1500);
  validate_train_config(c);
}

TEST_CASE("train config validation rejects broken settings") {
  TrainConfig c = tiny_train();
  validate_train_config(c);

  TrainConfig bad = c;
  bad.steps = 0;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.batch = 0;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.lr.breakpoint = bad.steps + 1;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.checkpoint_every = -1;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.clip_norm = -0.5;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.weight_decay = -0.5;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
  bad = c;
  bad.model.T = 1;
  CHECK_THROWS_AS(validate_train_config(bad), ConfigError);
}

TEST_CASE("first AdamW step matches the closed form") {
  ModelParams<float> params = make_params<float>(tiny_model());
  const float p0 = 0.5f;
  for (auto& t : params.tensors) std::fill(t.data.begin(), t.data.end(), p0);

  const float g = 0.2f;
  GradStore grads(params, g);
  OptimizerState state = OptimizerState::for_params(params);
  const double lr = 0.1;
  adamw_step(params, grads.view(), state, lr, 0.0);
  CHECK(state.step == 1);

  // Bias correction makes mhat = g and vhat = g*g exactly on step one.
  const double expected = p0 - lr * (g / (std::sqrt(double(g) * g) + state.eps));
  for (const auto& t : params.tensors) {
    for (const float p : t.data) CHECK(p == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("second AdamW step applies the running moments with bias correction") {
  ModelParams<float> params = make_params<float>(tiny_model());
  for (auto& t : params.tensors) std::fill(t.data.begin(), t.data.end(), 1.0f);

  OptimizerState state = OptimizerState::for_params(params);
  const double lr = 0.05;
  const float g1 = 0.4f, g2 = -0.1f;
  GradStore grads1(params, g1);
  adamw_step(params, grads1.view(), state, lr, 0.0);
  const double p1 = params.tensors[0].data[0];
  GradStore grads2(params, g2);
  adamw_step(params, grads2.view(), state, lr, 0.0);

  const double b1 = state.beta1, b2 = state.beta2;
  const double m = b1 * ((1 - b1) * g1) + (1 - b1) * g2;
  const double v = b2 * ((1 - b2) * double(g1) * g1) + (1 - b2) * double(g2) * g2;
  const double mhat = m / (1 - b1 * b1);
  const double vhat = v / (1 - b2 * b2);
  const double expected = p1 - lr * (mhat / (std::sqrt(vhat) + state.eps));
  CHECK(params.tensors[0].data[0] == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("weight decay is decoupled from the moment estimates") {
  ModelParams<float> params = make_params<float>(tiny_model());
  const float p0 = 2.0f;
  for (auto& t : params.tensors) std::fill(t.data.begin(), t.data.end(), p0);

  // Zero gradients: the only movement is the decay term p * (1 - lr*wd).
  GradStore grads(params, 0.0f);
  OptimizerState state = OptimizerState::for_params(params);
  adamw_step(params, grads.view(), state, 0.1, 0.01);
  for (const auto& t : params.tensors) {
    for (const float p : t.data)
      CHECK(p == doctest::Approx(p0 * (1.0 - 0.1 * 0.01)).epsilon(1e-6));
  }
}

TEST_CASE("gradient clipping equals pre-scaling the gradients") {
  const ModelConfig mc = tiny_model();
  ModelParams<float> a = init_params<float>(mc, 5);
  ModelParams<float> b = init_params<float>(mc, 5);
  REQUIRE(params_equal(a, b));

  const float g = 0.3f;
  double sq = 0.0;
  for (const auto& t : a.tensors) sq += double(g) * g * t.size();
  const double norm = std::sqrt(sq);

  // Run A clips to half the actual norm; run B feeds halved gradients raw.
  GradStore full(a, g);
  OptimizerState sa = OptimizerState::for_params(a);
  adamw_step(a, full.view(), sa, 0.01, 0.0, norm / 2.0);

  GradStore halved(b, g / 2.0f);
  OptimizerState sb = OptimizerState::for_params(b);
  adamw_step(b, halved.view(), sb, 0.01, 0.0);

  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    for (std::size_t e = 0; e < a.tensors[i].data.size(); ++e) {
      CHECK(a.tensors[i].data[e] ==
            doctest::Approx(b.tensors[i].data[e]).epsilon(1e-9));
    }
  }

  // A norm above the threshold leaves gradients untouched.
  ModelParams<float> c = init_params<float>(mc, 5);
  ModelParams<float> d = init_params<float>(mc, 5);
  GradStore gc(c, g), gd(d, g);
  OptimizerState sc = OptimizerState::for_params(c);
  OptimizerState sd = OptimizerState::for_params(d);
  adamw_step(c, gc.view(), sc, 0.01, 0.0, norm * 10.0);
  adamw_step(d, gd.view(), sd, 0.01, 0.0);
  CHECK(params_equal(c, d));
}

TEST_CASE("non-finite gradients abort with the diverging step attached") {
  ModelParams<float> params = init_params<float>(tiny_model(), 1);
  GradStore grads(params, 0.1f);
  grads.store[2][0] = std::nanf("");
  grads.spans.clear();
  for (const auto& v : grads.store) grads.spans.emplace_back(v);

  OptimizerState state = OptimizerState::for_params(params);
  state.step = 41;
  try {
    adamw_step(params, grads.view(), state, 0.01, 0.0);
    FAIL("expected TrainingDivergedError");
  } catch (const TrainingDivergedError& e) {
    CHECK(std::string(e.what()).find("step 41") != std::string::npos);
  }
}

TEST_CASE("optimizer rejects misaligned gradients") {
  ModelParams<float> params = init_params<float>(tiny_model(), 1);
  OptimizerState state = OptimizerState::for_params(params);

  GradStore grads(params, 0.1f);
  grads.spans.pop_back();
  CHECK_THROWS_AS(adamw_step(params, grads.view(), state, 0.01, 0.0), ShapeError);

  GradStore bad(params, 0.1f);
  bad.store[0].pop_back();
  bad.spans.clear();
  for (const auto& v : bad.store) bad.spans.emplace_back(v);
  CHECK_THROWS_AS(adamw_step(params, bad.view(), state, 0.01, 0.0), ShapeError);
}

TEST_CASE("step log lines carry every tracked quantity") {
  StepLog log;
  log.step = 12;
  log.lr = 0.25;
  log.l_theta = 1.5;
  log.l_rv = 0.5;
  log.l_reg = 0.125;
  log.total = 2.125;
  log.s_theta = -0.5;
  log.s_rv = 1.0;
  CHECK(format_step_log(log) ==
        "step 12 lr 0.25 l_theta 1.5 l_rv 0.5 l_reg 0.125 total 2.125 s_theta -0.5 s_rv 1");
}

TEST_CASE("training is bit-deterministic in the seed") {
  const std::vector<MotionClip> clips = walk_clips();
  const KinematicTree tree = default_skeleton();

  TrainConfig c = tiny_train(3);
  const TrainResult a = train(c, clips, tree);
  const TrainResult b = train(c, clips, tree);
  CHECK(params_equal(a.params, b.params));
  REQUIRE(a.log.size() == 3);
  REQUIRE(b.log.size() == 3);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].total == b.log[i].total);
    CHECK(a.log[i].lr == lr_at(c.lr, static_cast<int>(i)));
  }

  TrainConfig other = c;
  other.seed = 99;
  const TrainResult d = train(other, clips, tree);
  CHECK_FALSE(params_equal(a.params, d.params));
}

TEST_CASE("training skips clips shorter than one full window set") {
  const KinematicTree tree = default_skeleton();
  TrainConfig c = tiny_train(2);  // T=4, K=1: needs more than 7 frames

  std::vector<MotionClip> clips = walk_clips();
  MotionClip stub = synth_motion({MotionKind::kIdle, 0.2, 30}, 4);  // 6 frames
  REQUIRE(static_cast<std::int64_t>(stub.frames.size()) <=
          earliest_full_window(c.model.T, c.model.K));
  clips.push_back(stub);

  const TrainResult r = train(c, clips, tree);
  REQUIRE(r.skipped_clips.size() == 1);
  CHECK(r.skipped_clips[0] == stub.id);

  CHECK_THROWS_AS(train(c, {stub}, tree), ConfigError);
  CHECK_THROWS_AS(train(c, {}, tree), ConfigError);
}

TEST_CASE("training writes its log and checkpoints under the output dir") {
  const fs::path dir = fs::temp_directory_path() / "twmlp_trainer_artifacts";
  fs::remove_all(dir);

  TrainConfig c = tiny_train(4);
  c.checkpoint_every = 2;
  c.eval_every = 2;
  const std::vector<MotionClip> clips = walk_clips();
  const KinematicTree tree = default_skeleton();
  const TrainResult r = train(c, clips, tree, dir.string(), {clips[1]});

  CHECK(r.checkpoint_path == (dir / "checkpoint_final.twmlp").string());
  const ModelParams<float> reloaded = load_checkpoint(r.checkpoint_path);
  CHECK(params_equal(reloaded, r.params));
  CHECK(fs::exists(dir / "checkpoint_step2.twmlp"));
  CHECK(fs::exists(dir / "checkpoint_step4.twmlp"));

  std::ifstream log(dir / "train_log.txt");
  REQUIRE(log.good());
  std::string text((std::istreambuf_iterator<char>(log)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("step 0 lr") != std::string::npos);
  CHECK(text.find("step 3 lr") != std::string::npos);
  CHECK(text.find("# eval step 2 ") != std::string::npos);
  CHECK(text.find("# eval step 4 ") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("protocol names round trip") {
  CHECK(parse_protocol("online") == Protocol::kOnline);
  CHECK(parse_protocol("sequence") == Protocol::kSequence);
  CHECK(protocol_name(Protocol::kOnline) == "online");
  CHECK(protocol_name(Protocol::kSequence) == "sequence");
  CHECK_THROWS_AS(parse_protocol("offline"), ConfigError);
}

TEST_CASE("online protocol emits one aligned frame per slide") {
  const KinematicTree tree = default_skeleton();
  const MotionClip clip = synth_motion({MotionKind::kWalk, 34.0 / 30.0, 30}, 6);
  REQUIRE(clip.frames.size() == 34);

  const ModelConfig mc = tiny_model();  // T=4, K=1: warm frame index 7
  const ModelParams<float> params = init_params<float>(mc, 1);
  const ClipEval ce = predict_clip(params, clip, tree, Protocol::kOnline);
  const auto warm = earliest_full_window(mc.T, mc.K);
  CHECK(ce.pred.frames.size() == clip.frames.size() - static_cast<std::size_t>(warm));
  CHECK(ce.gt.frames.size() == ce.pred.frames.size());

  // Ground truth rows are the clip's own poses starting at the warm frame.
  const PoseSequence gt_all = clip_to_pose_sequence(clip);
  for (std::size_t i = 0; i < ce.gt.frames.size(); ++i) {
    const auto src = static_cast<std::size_t>(warm) + i;
    for (int c = 0; c < 3; ++c) CHECK(ce.gt.frames[i].root[c] == gt_all.frames[src].root[c]);
    CHECK(ce.gt.frames[i].rotation6[5] == gt_all.frames[src].rotation6[5]);
  }
}

TEST_CASE("sequence protocol tiles the clip with full windows only") {
  const KinematicTree tree = default_skeleton();
  const MotionClip clip = synth_motion({MotionKind::kWalk, 34.0 / 30.0, 30}, 6);
  const ModelConfig mc = tiny_model();
  const ModelParams<float> params = init_params<float>(mc, 1);

  // Tiles start at the warm frame 7 and step by T=4: 7,11,...,31 = 7 tiles.
  const ClipEval ce = predict_clip(params, clip, tree, Protocol::kSequence);
  CHECK(ce.pred.frames.size() == 28);
  CHECK(ce.gt.frames.size() == 28);

  const PoseSequence gt_all = clip_to_pose_sequence(clip);
  for (std::size_t i = 0; i < ce.gt.frames.size(); ++i) {
    const std::size_t src = 4 + i;  // first tile covers frames 4..7
    CHECK(ce.gt.frames[i].root[2] == gt_all.frames[src].root[2]);
  }
}

TEST_CASE("prediction requires at least one full window set") {
  const KinematicTree tree = default_skeleton();
  const MotionClip clip = synth_motion({MotionKind::kIdle, 0.2, 30}, 1);  // 6 frames
  const ModelParams<float> params = init_params<float>(tiny_model(), 1);
  CHECK_THROWS_AS(predict_clip(params, clip, tree, Protocol::kOnline), ContractError);
}

TEST_CASE("evaluation is identical across worker counts") {
  const KinematicTree tree = default_skeleton();
  std::vector<MotionClip> clips = {synth_motion({MotionKind::kWalk, 0.8, 30}, 1),
                                   synth_motion({MotionKind::kRun, 0.6, 30}, 2),
                                   synth_motion({MotionKind::kJump, 1.0, 30}, 3)};
  const ModelParams<float> params = init_params<float>(tiny_model(), 7);

  const MetricsReport serial = evaluate(params, clips, tree, Protocol::kOnline, 1);
  const MetricsReport parallel = evaluate(params, clips, tree, Protocol::kOnline, 4);
  CHECK(serial.mpjre_deg == parallel.mpjre_deg);
  CHECK(serial.mpjpe_cm == parallel.mpjpe_cm);
  CHECK(serial.mpjve_cm_s == parallel.mpjve_cm_s);
  CHECK(serial.jitter_1e2_m_s3 == parallel.jitter_1e2_m_s3);
  CHECK(serial.hand_pe_cm == parallel.hand_pe_cm);
  CHECK(serial.frames == parallel.frames);
  CHECK_THROWS_AS(evaluate(params, {}, tree, Protocol::kOnline), ContractError);
}

TEST_CASE("multi-clip reports are count-weighted means of per-clip reports") {
  const KinematicTree tree = default_skeleton();
  std::vector<MotionClip> clips = {synth_motion({MotionKind::kWalk, 0.8, 30}, 1),
                                   synth_motion({MotionKind::kRun, 1.4, 30}, 2)};
  const ModelParams<float> params = init_params<float>(tiny_model(), 7);

  const MetricsReport merged = evaluate(params, clips, tree, Protocol::kOnline);
  const MetricsReport a = evaluate(params, {clips[0]}, tree, Protocol::kOnline);
  const MetricsReport b = evaluate(params, {clips[1]}, tree, Protocol::kOnline);

  const double fa = a.frames, fb = b.frames;
  CHECK(merged.frames == a.frames + b.frames);
  CHECK(merged.mpjpe_cm ==
        doctest::Approx((a.mpjpe_cm * fa + b.mpjpe_cm * fb) / (fa + fb)).epsilon(1e-12));
  CHECK(merged.mpjre_deg ==
        doctest::Approx((a.mpjre_deg * fa + b.mpjre_deg * fb) / (fa + fb)).epsilon(1e-12));
  CHECK(merged.mpjve_cm_s ==
        doctest::Approx((a.mpjve_cm_s * (fa - 1) + b.mpjve_cm_s * (fb - 1)) / (fa + fb - 2))
            .epsilon(1e-12));
  CHECK(merged.jitter_1e2_m_s3 ==
        doctest::Approx((a.jitter_1e2_m_s3 * (fa - 3) + b.jitter_1e2_m_s3 * (fb - 3)) /
                        (fa + fb - 6))
            .epsilon(1e-12));
}

TEST_CASE("ablation grids print one row per entry and respect checkpoints") {
  const fs::path dir = fs::temp_directory_path() / "twmlp_trainer_grid";
  fs::remove_all(dir);
  const KinematicTree tree = default_skeleton();
  const std::vector<MotionClip> clips = walk_clips();

  TrainConfig c = tiny_train(2);
  const TrainResult r = train(c, clips, tree, dir.string());

  ModelConfig wider = tiny_model();
  wider.T = 6;
  std::vector<GridEntry> entries = {{tiny_model(), r.checkpoint_path}, {wider, ""}};
  const std::string grid = ablation_grid(entries, clips, tree, Protocol::kOnline, 7);

  std::istringstream is(grid);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line.find("T K mpjre_deg mpjpe_cm") == 0);
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("4 1 ", 0) == 0);
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("6 1 ", 0) == 0);
  CHECK_FALSE(std::getline(is, line));

  // Rerunning with the same seed reproduces the grid verbatim.
  CHECK(ablation_grid(entries, clips, tree, Protocol::kOnline, 7) == grid);
  CHECK_THROWS_AS(ablation_grid({}, clips, tree, Protocol::kOnline, 7), ContractError);
  fs::remove_all(dir);
}
