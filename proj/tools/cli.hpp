#pragma once

// Command-line front end: one executable exposing synth, train, eval,
// flops, bench, and stream. Settings merge in fixed order: built-in
// defaults, then --config JSON, then explicit flags. The effective merged
// config is written next to every output directory.

#include <cstdint>
#include <string>
#include <vector>

#include "twmlp/model.hpp"
#include "twmlp/training.hpp"

namespace twmlp::cli {

struct RunConfig {
  ModelConfig model;
  int steps = 2000;  // desk-scale defaults; full-scale training uses steps=300000, batch=128
  int batch = 16;
  double lr_initial = 3e-4;
  double lr_after = 1e-5;
  int lr_breakpoint = 0;  // 0 = automatic: 3/4 of steps (300K steps -> 225K)
  std::uint64_t seed = 1;
  std::string loss = "uncertainty";  // uncertainty | fixed
  double lambda_theta = 1.0;
  double lambda_rv = 1.0;
  double reg_coeff = 0.0001;
  int checkpoint_every = 0;
  int eval_every = 0;
  double clip_norm = 0.0;
  double weight_decay = 0.0;
  int fps = 60;
  double ratio = 0.9;
  std::string protocol = "online";  // online | sequence
  std::string out = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

TrainConfig to_train_config(const RunConfig& rc);

std::string run_config_to_json(const RunConfig& rc);

/// Partial configs are allowed (missing keys keep defaults); unknown keys
/// anywhere raise ConfigError. Setting model.L without fusion_layers
/// re-derives the default odd-layer set.
RunConfig run_config_from_json(const std::string& text);

RunConfig load_run_config(const std::string& path);
void write_effective_config(const RunConfig& rc, const std::string& dir);

/// Worker-thread cap: TWMLP_THREADS when set (minimum 1), otherwise the
/// hardware concurrency.
int thread_cap_from_env();

/// Runs one subcommand. Returns 0 on success, 1 on usage errors, 2 on
/// runtime errors.
int dispatch(const std::vector<std::string>& args);

}  // namespace twmlp::cli
