#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "twmlp/errors.hpp"
#include "twmlp/kinematics.hpp"
#include "twmlp/losses.hpp"
#include "twmlp/metrics.hpp"
#include "twmlp/motion_data.hpp"
#include "twmlp/streaming.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace twmlp::cli {
namespace {

std::string temporal_map_name(TemporalMap map) {
  switch (map) {
    case TemporalMap::kFull: return "full";
    case TemporalMap::kBanded: return "banded";
    case TemporalMap::kCausal: return "causal";
  }
  throw ContractError("temporal_map_name: unknown value");
}

TemporalMap parse_temporal_map(const std::string& name) {
  if (name == "full") return TemporalMap::kFull;
  if (name == "banded") return TemporalMap::kBanded;
  if (name == "causal") return TemporalMap::kCausal;
  throw ConfigError("temporal_map must be full, banded, or causal, got '" + name + "'");
}

std::string fusion_mode_name(FusionMode mode) {
  return mode == FusionMode::kToken ? "token" : "feature";
}

FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "token") return FusionMode::kToken;
  if (name == "feature") return FusionMode::kFeature;
  throw ConfigError("fusion_mode must be token or feature, got '" + name + "'");
}

WeightMode parse_weight_mode(const std::string& name) {
  if (name == "uncertainty") return WeightMode::kUncertainty;
  if (name == "fixed") return WeightMode::kFixed;
  throw ConfigError("loss must be uncertainty or fixed, got '" + name + "'");
}

std::vector<int> parse_int_csv(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(what + ": expected comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

void require_known_keys(const json& j, const std::string& scope,
                        std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("config: unknown key '" + scope + key + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& scope, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: bad value for '" + scope + key + "': " + e.what());
  }
}

template <typename T>
void take(const json& j, const std::string& scope, const char* key, T& into) {
  if (j.contains(key)) into = get_as<T>(j, scope, key);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path);
}

// ---- flag sets: each optional is set only when the flag appeared --------

struct ModelFlags {
  std::optional<int> T, K, L, D, band_width;
  std::optional<std::string> fusion_layers, temporal_map, fusion_mode;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--T", f.T, "current-window length in frames");
  app->add_option("--K", f.K, "number of past windows");
  app->add_option("--L", f.L, "residual block count");
  app->add_option("--D", f.D, "hidden width");
  app->add_option("--fusion-layers", f.fusion_layers,
                  "blocks that fuse past-window tokens, e.g. 1,3,5");
  app->add_option("--temporal-map", f.temporal_map, "full|banded|causal");
  app->add_option("--band-width", f.band_width, "half-width for the banded temporal map");
  app->add_option("--fusion-mode", f.fusion_mode, "token|feature");
}

void apply_model_flags(const ModelFlags& f, ModelConfig& m) {
  if (f.L) {
    m.L = *f.L;
    m.fusion_layers = default_fusion_layers(m.L);  // re-derived unless given explicitly
  }
  if (f.fusion_layers) m.fusion_layers = parse_int_csv(*f.fusion_layers, "--fusion-layers");
  if (f.T) m.T = *f.T;
  if (f.K) m.K = *f.K;
  if (f.D) m.D = *f.D;
  if (f.temporal_map) m.temporal_map = parse_temporal_map(*f.temporal_map);
  if (f.band_width) m.band_width = *f.band_width;
  if (f.fusion_mode) m.fusion_mode = parse_fusion_mode(*f.fusion_mode);
}

struct TrainFlags {
  std::optional<int> steps, batch, lr_breakpoint, checkpoint_every, eval_every;
  std::optional<double> lr_initial, lr_after, lambda_theta, lambda_rv, reg_coeff, clip_norm,
      weight_decay;
  std::optional<std::string> loss;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--steps", f.steps, "optimizer steps");
  app->add_option("--batch", f.batch, "windows per step");
  app->add_option("--lr", f.lr_initial, "learning rate before the drop");
  app->add_option("--lr-after", f.lr_after, "learning rate after the drop");
  app->add_option("--lr-breakpoint", f.lr_breakpoint, "step of the lr drop (0 = 3/4 of steps)");
  app->add_option("--loss", f.loss, "uncertainty|fixed");
  app->add_option("--lambda-theta", f.lambda_theta, "rotation-loss weight in fixed mode");
  app->add_option("--lambda-rv", f.lambda_rv, "velocity-loss weight in fixed mode");
  app->add_option("--reg-coeff", f.reg_coeff, "L2 weight-matrix penalty coefficient");
  app->add_option("--checkpoint-every", f.checkpoint_every, "extra checkpoints every N steps");
  app->add_option("--eval-every", f.eval_every, "test-set evaluation every N steps");
  app->add_option("--clip-norm", f.clip_norm, "global gradient-norm clip (0 = off)");
  app->add_option("--weight-decay", f.weight_decay, "decoupled AdamW decay");
}

void apply_train_flags(const TrainFlags& f, RunConfig& rc) {
  if (f.steps) rc.steps = *f.steps;
  if (f.batch) rc.batch = *f.batch;
  if (f.lr_initial) rc.lr_initial = *f.lr_initial;
  if (f.lr_after) rc.lr_after = *f.lr_after;
  if (f.lr_breakpoint) rc.lr_breakpoint = *f.lr_breakpoint;
  if (f.loss) rc.loss = *f.loss;
  if (f.lambda_theta) rc.lambda_theta = *f.lambda_theta;
  if (f.lambda_rv) rc.lambda_rv = *f.lambda_rv;
  if (f.reg_coeff) rc.reg_coeff = *f.reg_coeff;
  if (f.checkpoint_every) rc.checkpoint_every = *f.checkpoint_every;
  if (f.eval_every) rc.eval_every = *f.eval_every;
  if (f.clip_norm) rc.clip_norm = *f.clip_norm;
  if (f.weight_decay) rc.weight_decay = *f.weight_decay;
}

struct CommonFlags {
  std::optional<std::string> config, out, protocol;
  std::optional<std::uint64_t> seed;
  std::optional<int> fps;
  std::optional<double> ratio;
};

void add_common_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file (flags override it)")
      ->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "output directory");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--fps", f.fps, "frame rate");
  app->add_option("--ratio", f.ratio, "train fraction of the dataset split");
  app->add_option("--protocol", f.protocol, "online|sequence");
}

RunConfig merge(const CommonFlags& cf, const ModelFlags& mf, const TrainFlags& tf) {
  RunConfig rc;
  if (cf.config) rc = load_run_config(*cf.config);
  apply_model_flags(mf, rc.model);
  apply_train_flags(tf, rc);
  if (cf.out) rc.out = *cf.out;
  if (cf.seed) rc.seed = *cf.seed;
  if (cf.fps) rc.fps = *cf.fps;
  if (cf.ratio) rc.ratio = *cf.ratio;
  if (cf.protocol) rc.protocol = *cf.protocol;
  return rc;
}

// ---- data loading --------------------------------------------------------

struct LoadedData {
  std::vector<MotionClip> train;
  std::vector<MotionClip> test;
  int fps = 60;
};

LoadedData load_data(const std::string& manifest_path) {
  DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  auto load_all = [&](const std::vector<std::string>& paths) {
    std::vector<MotionClip> clips;
    clips.reserve(paths.size());
    for (const auto& p : paths) {
      fs::path full = fs::path(p).is_absolute() ? fs::path(p) : base / p;
      clips.push_back(load_clip(full.string()));
    }
    return clips;
  };
  return {load_all(manifest.train_paths()), load_all(manifest.test_paths()), manifest.fps};
}

KinematicTree load_tree(const std::string& skeleton_path) {
  return skeleton_path.empty() ? default_skeleton() : load_skeleton(skeleton_path);
}

// ---- subcommands ---------------------------------------------------------

void run_synth(const RunConfig& rc, const std::string& kind, int clips, double duration) {
  if (clips < 2) throw ConfigError("synth: needs at least 2 clips for a train/test split");
  std::vector<MotionKind> kinds;
  if (kind == "mixed") {
    kinds = {MotionKind::kWalk, MotionKind::kRun, MotionKind::kJump, MotionKind::kIdle};
  } else {
    kinds = {parse_motion_kind(kind)};
  }
  fs::create_directories(fs::path(rc.out) / "clips");
  std::vector<std::string> rel_paths;
  for (int i = 0; i < clips; ++i) {
    MotionSpec spec;
    spec.kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
    spec.duration_s = duration;
    spec.fps = rc.fps;
    MotionClip clip = synth_motion(spec, rc.seed + static_cast<std::uint64_t>(i));
    char num[8];
    std::snprintf(num, sizeof(num), "%03d", i);
    std::string name = motion_kind_name(spec.kind) + "_" + num + ".motn";
    save_clip(clip, (fs::path(rc.out) / "clips" / name).string());
    rel_paths.push_back("clips/" + name);
  }
  DatasetManifest manifest = split_dataset(rel_paths, rc.ratio, rc.seed);
  manifest.fps = rc.fps;
  save_manifest(manifest, (fs::path(rc.out) / "manifest.txt").string());
  save_skeleton(default_skeleton(), (fs::path(rc.out) / "skeleton.txt").string());
  write_effective_config(rc, rc.out);
  std::cout << "wrote " << clips << " clips (" << manifest.train_paths().size() << " train, "
            << manifest.test_paths().size() << " test) under " << rc.out << "\n";
}

void run_train(const RunConfig& rc, const std::string& data, const std::string& skeleton) {
  TrainConfig tc = to_train_config(rc);
  validate_train_config(tc);
  LoadedData d = load_data(data);
  KinematicTree tree = load_tree(skeleton);
  fs::create_directories(rc.out);
  write_effective_config(rc, rc.out);
  TrainResult result = train(tc, d.train, tree, rc.out, d.test);
  for (const auto& id : result.skipped_clips) {
    std::cerr << "warning: clip shorter than " << earliest_full_window(tc.model.T, tc.model.K) + 1
              << " frames, skipped: " << id << "\n";
  }
  if (!result.log.empty()) std::cout << format_step_log(result.log.back()) << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
}

void run_eval(const RunConfig& rc, const std::string& checkpoint, const std::string& data,
              const std::string& skeleton, const std::string& grid_T, const std::string& grid_K) {
  LoadedData d = load_data(data);
  if (d.test.empty()) throw ConfigError("eval: manifest has no test clips");
  KinematicTree tree = load_tree(skeleton);
  Protocol protocol = parse_protocol(rc.protocol);
  const int threads = thread_cap_from_env();
  fs::create_directories(rc.out);
  write_effective_config(rc, rc.out);
  if (!grid_T.empty() || !grid_K.empty()) {
    std::vector<int> ts = grid_T.empty() ? std::vector<int>{rc.model.T}
                                         : parse_int_csv(grid_T, "--grid-T");
    std::vector<int> ks = grid_K.empty() ? std::vector<int>{rc.model.K}
                                         : parse_int_csv(grid_K, "--grid-K");
    std::vector<GridEntry> entries;
    for (int t : ts) {
      for (int k : ks) {
        ModelConfig m = rc.model;
        m.T = t;
        m.K = k;
        entries.push_back({m, checkpoint});
      }
    }
    std::string table = ablation_grid(entries, d.test, tree, protocol, rc.seed, threads);
    std::cout << table;
    write_text_file((fs::path(rc.out) / "grid.txt").string(), table);
  } else {
    if (checkpoint.empty()) {
      throw ConfigError("eval: --checkpoint is required unless --grid-T/--grid-K are given");
    }
    ModelParams<float> params = load_checkpoint(checkpoint);
    MetricsReport report = evaluate(params, d.test, tree, protocol, threads);
    std::string text = format_metrics_text(report);
    std::cout << text;
    write_text_file((fs::path(rc.out) / "metrics.txt").string(), text);
    write_text_file((fs::path(rc.out) / "metrics.json").string(), format_metrics_json(report));
  }
}

void run_flops(const RunConfig& rc) {
  validate_config(rc.model);
  CostReport report = count_cost(rc.model);
  std::string text = format_cost_report(report);
  std::cout << text;
  fs::create_directories(rc.out);
  write_text_file((fs::path(rc.out) / "cost.txt").string(), text);
  write_effective_config(rc, rc.out);
}

void run_bench(const RunConfig& rc, double duration, bool fast_path) {
  LatencyReport report = bench_latency(rc.model, duration, rc.fps, rc.seed, fast_path);
  std::string text = format_latency_report(report);
  std::cout << text;
  fs::create_directories(rc.out);
  write_text_file((fs::path(rc.out) / "latency.txt").string(), text);
  write_effective_config(rc, rc.out);
}

void run_stream(const std::string& checkpoint, const std::string& skeleton, bool fast_path,
                bool pad_history) {
  ModelParams<float> params = load_checkpoint(checkpoint);
  KinematicTree tree = load_tree(skeleton);
  StreamingOptions options;
  options.fast_path = fast_path;
  options.pad_history = pad_history;
  StreamingSession session(std::move(params), std::move(tree), options);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty() || line[0] == '#') continue;
    TrackedFrame frame = parse_tracked_frame_csv(line);
    if (auto pose = session.push_frame(frame)) {
      std::cout << format_pose_csv(frame.t, *pose) << "\n";
    }
  }
}

}  // namespace

TrainConfig to_train_config(const RunConfig& rc) {
  TrainConfig tc;
  tc.model = rc.model;
  tc.steps = rc.steps;
  tc.batch = rc.batch;
  tc.lr.initial = rc.lr_initial;
  tc.lr.after = rc.lr_after;
  tc.lr.breakpoint = rc.lr_breakpoint > 0 ? rc.lr_breakpoint : rc.steps * 3 / 4;
  tc.seed = rc.seed;
  tc.loss.mode = parse_weight_mode(rc.loss);
  tc.loss.lambda_theta = rc.lambda_theta;
  tc.loss.lambda_rv = rc.lambda_rv;
  tc.loss.reg_coeff = rc.reg_coeff;
  tc.checkpoint_every = rc.checkpoint_every;
  tc.eval_every = rc.eval_every;
  tc.clip_norm = rc.clip_norm;
  tc.weight_decay = rc.weight_decay;
  return tc;
}

std::string run_config_to_json(const RunConfig& rc) {
  ordered_json j;
  j["model"] = {{"T", rc.model.T},
                {"K", rc.model.K},
                {"L", rc.model.L},
                {"D", rc.model.D},
                {"fusion_layers", rc.model.fusion_layers},
                {"temporal_map", temporal_map_name(rc.model.temporal_map)},
                {"band_width", rc.model.band_width},
                {"fusion_mode", fusion_mode_name(rc.model.fusion_mode)}};
  j["train"] = {{"steps", rc.steps},
                {"batch", rc.batch},
                {"lr_initial", rc.lr_initial},
                {"lr_after", rc.lr_after},
                {"lr_breakpoint", rc.lr_breakpoint},
                {"seed", rc.seed},
                {"loss", rc.loss},
                {"lambda_theta", rc.lambda_theta},
                {"lambda_rv", rc.lambda_rv},
                {"reg_coeff", rc.reg_coeff},
                {"checkpoint_every", rc.checkpoint_every},
                {"eval_every", rc.eval_every},
                {"clip_norm", rc.clip_norm},
                {"weight_decay", rc.weight_decay}};
  j["data"] = {{"fps", rc.fps}, {"ratio", rc.ratio}};
  j["protocol"] = rc.protocol;
  j["out"] = rc.out;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  require_known_keys(j, "", {"model", "train", "data", "protocol", "out"});

  RunConfig rc;
  if (j.contains("model")) {
    const json& m = j.at("model");
    require_known_keys(m, "model.",
                       {"T", "K", "L", "D", "fusion_layers", "temporal_map", "band_width",
                        "fusion_mode"});
    if (m.contains("L")) {
      rc.model.L = get_as<int>(m, "model.", "L");
      rc.model.fusion_layers = default_fusion_layers(rc.model.L);
    }
    if (m.contains("fusion_layers")) {
      rc.model.fusion_layers = get_as<std::vector<int>>(m, "model.", "fusion_layers");
    }
    take(m, "model.", "T", rc.model.T);
    take(m, "model.", "K", rc.model.K);
    take(m, "model.", "D", rc.model.D);
    take(m, "model.", "band_width", rc.model.band_width);
    if (m.contains("temporal_map")) {
      rc.model.temporal_map = parse_temporal_map(get_as<std::string>(m, "model.", "temporal_map"));
    }
    if (m.contains("fusion_mode")) {
      rc.model.fusion_mode = parse_fusion_mode(get_as<std::string>(m, "model.", "fusion_mode"));
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    require_known_keys(t, "train.",
                       {"steps", "batch", "lr_initial", "lr_after", "lr_breakpoint", "seed",
                        "loss", "lambda_theta", "lambda_rv", "reg_coeff", "checkpoint_every",
                        "eval_every", "clip_norm", "weight_decay"});
    take(t, "train.", "steps", rc.steps);
    take(t, "train.", "batch", rc.batch);
    take(t, "train.", "lr_initial", rc.lr_initial);
    take(t, "train.", "lr_after", rc.lr_after);
    take(t, "train.", "lr_breakpoint", rc.lr_breakpoint);
    take(t, "train.", "seed", rc.seed);
    take(t, "train.", "loss", rc.loss);
    take(t, "train.", "lambda_theta", rc.lambda_theta);
    take(t, "train.", "lambda_rv", rc.lambda_rv);
    take(t, "train.", "reg_coeff", rc.reg_coeff);
    take(t, "train.", "checkpoint_every", rc.checkpoint_every);
    take(t, "train.", "eval_every", rc.eval_every);
    take(t, "train.", "clip_norm", rc.clip_norm);
    take(t, "train.", "weight_decay", rc.weight_decay);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    require_known_keys(d, "data.", {"fps", "ratio"});
    take(d, "data.", "fps", rc.fps);
    take(d, "data.", "ratio", rc.ratio);
  }
  take(j, "", "protocol", rc.protocol);
  take(j, "", "out", rc.out);
  parse_weight_mode(rc.loss);  // fail fast on a bad loss name
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

void write_effective_config(const RunConfig& rc, const std::string& dir) {
  fs::create_directories(dir);
  write_text_file((fs::path(dir) / "effective_config.json").string(), run_config_to_json(rc));
}

int thread_cap_from_env() {
  if (const char* env = std::getenv("TWMLP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("TWMLP_THREADS must be a positive integer");
    }
    return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Sparse-tracker full-body motion engine"};
  app.name("twmlp");
  app.require_subcommand(1);

  CommonFlags common;
  ModelFlags model_flags;
  TrainFlags train_flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic motion dataset");
  add_common_flags(synth, common);
  std::string kind = "mixed";
  int n_clips = 8;
  double duration = 10.0;
  synth->add_option("--kind", kind, "walk|run|jump|idle|mixed");
  synth->add_option("--clips", n_clips, "number of clips");
  synth->add_option("--duration", duration, "seconds per clip");
  synth->callback([&] { run_synth(merge(common, model_flags, train_flags), kind, n_clips,
                                  duration); });

  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset manifest");
  add_common_flags(train_cmd, common);
  add_model_flags(train_cmd, model_flags);
  add_train_flags(train_cmd, train_flags);
  std::string data_path;
  std::string skeleton_path;
  train_cmd->add_option("--data", data_path, "dataset manifest")->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--skeleton", skeleton_path, "skeleton file (default: built-in)");
  train_cmd->callback([&] { run_train(merge(common, model_flags, train_flags), data_path,
                                      skeleton_path); });

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common_flags(eval_cmd, common);
  add_model_flags(eval_cmd, model_flags);
  std::string checkpoint_path;
  std::string grid_T, grid_K;
  eval_cmd->add_option("--data", data_path, "dataset manifest")->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint");
  eval_cmd->add_option("--skeleton", skeleton_path, "skeleton file (default: built-in)");
  eval_cmd->add_option("--grid-T", grid_T, "window lengths for an ablation grid, e.g. 16,32");
  eval_cmd->add_option("--grid-K", grid_K, "past-window counts for an ablation grid");
  eval_cmd->callback([&] {
    run_eval(merge(common, model_flags, train_flags), checkpoint_path, data_path, skeleton_path,
             grid_T, grid_K);
  });

  auto* flops = app.add_subcommand("flops", "analytic per-layer cost and parameter counts");
  add_common_flags(flops, common);
  add_model_flags(flops, model_flags);
  flops->callback([&] { run_flops(merge(common, model_flags, train_flags)); });

  auto* bench = app.add_subcommand("bench", "streaming latency benchmark");
  add_common_flags(bench, common);
  add_model_flags(bench, model_flags);
  double bench_duration = 5.0;
  bool fast_path = false;
  bench->add_option("--duration", bench_duration, "seconds of synthetic input");
  bench->add_flag("--fast-path", fast_path, "use cached window-block activations");
  bench->callback([&] {
    run_bench(merge(common, model_flags, train_flags), bench_duration, fast_path);
  });

  auto* stream = app.add_subcommand("stream", "stdin tracker CSV to stdout pose CSV");
  bool pad_history = false;
  stream->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required()
      ->check(CLI::ExistingFile);
  stream->add_option("--skeleton", skeleton_path, "skeleton file (default: built-in)");
  stream->add_flag("--fast-path", fast_path, "use cached window-block activations");
  stream->add_flag("--pad", pad_history, "emit before warm-up by left-padding history");
  stream->callback([&] { run_stream(checkpoint_path, skeleton_path, fast_path, pad_history); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace twmlp::cli
