#pragma once

// Temporally windowed MLP: an input projection, L pre-norm residual MLP
// blocks with a learned time-mixing map, K window blocks summarizing past
// windows into latent tokens, token fusion at designated layers, and an
// output projection to 132 pose values per frame.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "twmlp/errors.hpp"
#include "twmlp/features.hpp"
#include "twmlp/kinematics.hpp"
#include "twmlp/rng.hpp"
#include "twmlp/tensor.hpp"

namespace twmlp {

enum class TemporalMap { kFull, kBanded, kCausal };
enum class FusionMode { kToken, kFeature };

/// Fusion layer set defaults to the odd block indices {1, 3, ...} <= L.
std::vector<int> default_fusion_layers(int L);

struct ModelConfig {
  int T = 41;
  int K = 2;
  int L = 10;
  int D = 512;
  int d_in = kFeatureDim;    // 54
  int d_out = kOutputDim;    // 132
  std::vector<int> fusion_layers = default_fusion_layers(10);
  TemporalMap temporal_map = TemporalMap::kFull;
  int band_width = 0;  // used when temporal_map == kBanded
  FusionMode fusion_mode = FusionMode::kToken;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws ConfigError if any invariant fails (T >= 2, K >= 0, L >= 1,
/// D >= 2, fusion_layers within 1..L, band width valid).
void validate_config(const ModelConfig& config);

template <typename S>
struct ParamTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<S> data;

  std::size_t size() const { return data.size(); }
};

/// All trainable tensors in a fixed declaration order (the checkpoint and
/// optimizer-state order): W_p; per block ln1 gain/bias, time-mix, ln2
/// gain/bias, FC weight/bias; per window block projection weight/bias and
/// LN gain/bias; one fusion map per fusion layer (ascending); W_f; the two
/// uncertainty log-variances. K = 0 allocates no window or fusion tensors.
template <typename S>
struct ModelParams {
  struct BlockIndex {
    int ln1_gain, ln1_bias, time_mix, ln2_gain, ln2_bias, fc_weight, fc_bias;
  };
  struct WindowIndex {
    int proj_weight, proj_bias, ln_gain, ln_bias;
  };

  ModelConfig config;
  std::vector<ParamTensor<S>> tensors;

  int input_proj = -1;                 // W_p: D x 54
  std::vector<BlockIndex> blocks;      // L entries
  std::vector<WindowIndex> windows;    // K entries
  std::vector<int> fusion_maps;        // aligned with config.fusion_layers
  int output_proj = -1;                // W_f: 132 x D
  int s_theta = -1;                    // 1 x 1 log-variances
  int s_rv = -1;

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

/// Allocates every tensor with the right shape, zero-filled.
template <typename S>
ModelParams<S> make_params(const ModelConfig& config) {
  validate_config(config);
  ModelParams<S> p;
  p.config = config;
  auto add = [&p](std::string name, int rows, int cols) {
    ParamTensor<S> t;
    t.name = std::move(name);
    t.rows = rows;
    t.cols = cols;
    t.data.assign(static_cast<std::size_t>(rows) * cols, S(0));
    p.tensors.push_back(std::move(t));
    return static_cast<int>(p.tensors.size()) - 1;
  };

  p.input_proj = add("input_proj.weight", config.D, config.d_in);
  for (int l = 1; l <= config.L; ++l) {
    const std::string b = "block" + std::to_string(l) + ".";
    typename ModelParams<S>::BlockIndex bi;
    bi.ln1_gain = add(b + "ln1.gain", 1, config.D);
    bi.ln1_bias = add(b + "ln1.bias", 1, config.D);
    bi.time_mix = add(b + "time_mix.weight", config.T, config.T);
    bi.ln2_gain = add(b + "ln2.gain", 1, config.D);
    bi.ln2_bias = add(b + "ln2.bias", 1, config.D);
    bi.fc_weight = add(b + "fc.weight", config.D, config.D);
    bi.fc_bias = add(b + "fc.bias", 1, config.D);
    p.blocks.push_back(bi);
  }
  for (int k = 1; k <= config.K; ++k) {
    const std::string w = "window" + std::to_string(k) + ".";
    typename ModelParams<S>::WindowIndex wi;
    wi.proj_weight = add(w + "proj.weight", config.D, config.d_in);
    wi.proj_bias = add(w + "proj.bias", 1, config.D);
    wi.ln_gain = add(w + "ln.gain", 1, config.D);
    wi.ln_bias = add(w + "ln.bias", 1, config.D);
    p.windows.push_back(wi);
  }
  if (config.K > 0) {
    for (int l : config.fusion_layers) {
      if (config.fusion_mode == FusionMode::kToken) {
        p.fusion_maps.push_back(
            add("fusion" + std::to_string(l) + ".weight", config.T, config.T + config.K));
      } else {
        p.fusion_maps.push_back(add("fusion" + std::to_string(l) + ".weight", config.D,
                                    (config.K + 1) * config.D));
      }
    }
  }
  p.output_proj = add("output_proj.weight", config.d_out, config.D);
  p.s_theta = add("s_theta", 1, 1);
  p.s_rv = add("s_rv", 1, 1);
  return p;
}

/// Deterministic init: weight matrices uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
/// with fan_in = column count, LN gains 1, all biases 0, s terms 0.
template <typename S>
ModelParams<S> init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<S> p = make_params<S>(config);
  Rng rng(seed);
  for (auto& t : p.tensors) {
    const bool is_gain = t.name.ends_with(".gain");
    const bool is_bias = t.name.ends_with(".bias") || t.name == "s_theta" || t.name == "s_rv";
    if (is_gain) {
      std::fill(t.data.begin(), t.data.end(), S(1));
    } else if (is_bias) {
      std::fill(t.data.begin(), t.data.end(), S(0));
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
      for (auto& v : t.data) v = static_cast<S>(rng.uniform(-bound, bound));
    }
  }
  return p;
}

/// Handles into a graph after building the forward pass: one leaf per
/// parameter tensor (same order as ModelParams::tensors) and the T x 132
/// output.
struct ForwardHandles {
  std::vector<TensorId> param_leaves;
  TensorId output;
};

namespace detail {

/// Banded/causal maps multiply the time-mix weight by a constant 0/1 mask.
template <typename S>
TensorId masked_time_weight(Graph<S>& g, TensorId w, const ModelConfig& config) {
  if (config.temporal_map == TemporalMap::kFull) return w;
  std::vector<S> mask(static_cast<std::size_t>(config.T) * config.T, S(0));
  for (int i = 0; i < config.T; ++i) {
    for (int j = 0; j < config.T; ++j) {
      const bool keep = config.temporal_map == TemporalMap::kBanded
                            ? std::abs(i - j) <= config.band_width
                            : j <= i;  // causal: row i mixes frames <= i
      if (keep) mask[static_cast<std::size_t>(i) * config.T + j] = S(1);
    }
  }
  return g.mul(w, g.constant(config.T, config.T, mask));
}

template <typename S>
std::vector<S> cast_row_major(const std::vector<double>& src) {
  std::vector<S> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<S>(src[i]);
  return out;
}

}  // namespace detail

/// One graph leaf per parameter tensor, in declaration order.
template <typename S>
std::vector<TensorId> make_param_leaves(Graph<S>& g, const ModelParams<S>& params,
                                        bool trainable) {
  std::vector<TensorId> leaves;
  leaves.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    leaves.push_back(g.leaf(t.rows, t.cols, t.data, trainable));
  }
  return leaves;
}

/// Window block k (0-based) applied to a T x 54 window node: per-frame
/// linear, layer_norm, silu, mean-pool to a 1 x D token.
template <typename S>
TensorId window_token_node(Graph<S>& g, const ModelParams<S>& params,
                           std::span<const TensorId> leaves, int k, TensorId window) {
  const auto& wi = params.windows[static_cast<std::size_t>(k)];
  TensorId z = g.linear(window, leaves[wi.proj_weight], leaves[wi.proj_bias]);
  z = g.layer_norm(z, leaves[wi.ln_gain], leaves[wi.ln_bias]);
  z = g.silu(z);
  return g.mean_rows(z);
}

/// Trunk of the network: input projection of the current window node, L
/// blocks with token fusion at the configured layers, output projection.
/// `tokens` holds one 1 x D node per past window (empty when K = 0).
template <typename S>
TensorId forward_core(Graph<S>& g, const ModelParams<S>& params,
                      std::span<const TensorId> leaves, TensorId current,
                      std::span<const TensorId> tokens) {
  const ModelConfig& c = params.config;
  if (static_cast<int>(tokens.size()) != c.K) {
    throw ShapeError("forward: expected " + std::to_string(c.K) + " window tokens, got " +
                     std::to_string(tokens.size()));
  }
  TensorId H = g.linear(current, leaves[params.input_proj]);
  for (int l = 1; l <= c.L; ++l) {
    const auto& bi = params.blocks[static_cast<std::size_t>(l - 1)];
    TensorId n1 = g.layer_norm(H, leaves[bi.ln1_gain], leaves[bi.ln1_bias]);
    TensorId mixed = g.time_mix(n1, detail::masked_time_weight(g, leaves[bi.time_mix], c));
    TensorId h1 = g.add(H, mixed);
    TensorId n2 = g.layer_norm(h1, leaves[bi.ln2_gain], leaves[bi.ln2_bias]);
    TensorId fc = g.silu(g.linear(n2, leaves[bi.fc_weight], leaves[bi.fc_bias]));
    H = g.add(h1, fc);

    if (c.K > 0) {
      const auto it = std::find(c.fusion_layers.begin(), c.fusion_layers.end(), l);
      if (it != c.fusion_layers.end()) {
        const auto fi = static_cast<std::size_t>(it - c.fusion_layers.begin());
        TensorId wl = leaves[params.fusion_maps[fi]];
        if (c.fusion_mode == FusionMode::kToken) {
          std::vector<TensorId> parts;
          parts.push_back(H);
          for (TensorId z : tokens) parts.push_back(z);
          H = g.matmul(wl, g.concat_rows(parts));
        } else {
          TensorId wide = H;
          for (TensorId z : tokens) wide = g.concat_cols(wide, g.broadcast_rows(z, c.T));
          H = g.linear(wide, wl);
        }
      }
    }
  }
  return g.linear(H, leaves[params.output_proj]);
}

/// Forward over a window set with existing parameter leaves (used to share
/// one leaf set across a whole training batch).
template <typename S>
TensorId forward_from_leaves(Graph<S>& g, const ModelParams<S>& params,
                             std::span<const TensorId> leaves, const FeatureWindowSet& windows) {
  const ModelConfig& c = params.config;
  if (windows.T != c.T || windows.K != c.K) {
    throw ShapeError("forward: window set (T=" + std::to_string(windows.T) +
                     ", K=" + std::to_string(windows.K) + ") does not match config (T=" +
                     std::to_string(c.T) + ", K=" + std::to_string(c.K) + ")");
  }
  TensorId current = g.constant(c.T, c.d_in, detail::cast_row_major<S>(windows.current));
  std::vector<TensorId> tokens;
  for (int k = 0; k < c.K; ++k) {
    TensorId xw = g.constant(c.T, c.d_in,
                             detail::cast_row_major<S>(windows.past[static_cast<std::size_t>(k)]));
    tokens.push_back(window_token_node(g, params, leaves, k, xw));
  }
  return forward_core(g, params, leaves, current, std::span<const TensorId>(tokens));
}

/// Builds the full forward pass into `g`: parameter leaves in declaration
/// order (requires_grad = trainable) plus the T x d_out output node.
template <typename S>
ForwardHandles build_forward(Graph<S>& g, const ModelParams<S>& params,
                             const FeatureWindowSet& windows, bool trainable) {
  ForwardHandles h;
  h.param_leaves = make_param_leaves(g, params, trainable);
  h.output = forward_from_leaves(g, params, std::span<const TensorId>(h.param_leaves), windows);
  return h;
}

/// Inference-only forward; returns the T x d_out output row-major.
template <typename S>
std::vector<S> forward(const ModelParams<S>& params, const FeatureWindowSet& windows) {
  Graph<S> g;
  const ForwardHandles h = build_forward(g, params, windows, /*trainable=*/false);
  const auto v = g.value(h.output);
  return std::vector<S>(v.begin(), v.end());
}

// ---- analytic cost ---------------------------------------------------------

struct LayerCost {
  std::string name;
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  std::uint64_t activation_bytes = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t total_flops = 0;
  std::uint64_t total_params = 0;
  std::uint64_t total_activation_bytes = 0;
};

/// Analytic per-layer counts with one multiply-accumulate = 1 FLOP;
/// layer_norm is costed at 5 and silu at 4 ops per element, elementwise
/// add at 1. Activation bytes assume 32-bit storage of each layer output.
CostReport count_cost(const ModelConfig& config);

std::string format_cost_report(const CostReport& report);

// ---- checkpoints ------------------------------------------------------------

/// Binary container: magic "TWMLP\0", u32 format version, the ModelConfig,
/// u32 tensor count, then each tensor as u32 rank/rows/cols plus f32
/// little-endian data, in declaration order.
void save_checkpoint(const ModelParams<float>& params, const std::string& path);
ModelParams<float> load_checkpoint(const std::string& path);

}  // namespace twmlp
