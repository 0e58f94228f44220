#pragma once

// Training objective: L1 rotation loss averaged over the window, L1
// rotation-velocity loss over frame differences, an L2 penalty on weight
// matrices, and either learned uncertainty weighting (exp(-s)*L + s per
// term) or fixed lambdas.

#include <span>
#include <vector>

#include "twmlp/kinematics.hpp"
#include "twmlp/model.hpp"
#include "twmlp/tensor.hpp"

namespace twmlp {

enum class WeightMode { kUncertainty, kFixed };

struct LossConfig {
  WeightMode mode = WeightMode::kUncertainty;
  double lambda_theta = 1.0;  // used when mode == kFixed
  double lambda_rv = 1.0;
  double reg_coeff = 0.0001;
};

struct LossBreakdown {
  double l_theta = 0.0;
  double l_rv = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  double weight_theta = 1.0;  // effective multiplier applied to l_theta
  double weight_rv = 1.0;
};

// ---- graph builders (differentiable) ----------------------------------------

/// (1/T) * sum_t sum_j |pred - gt| over all 6D components. pred and gt are
/// T x 132.
template <typename S>
TensorId rotation_loss_node(Graph<S>& g, TensorId pred, TensorId gt) {
  const int t = g.rows(pred);
  return g.scale(g.sum(g.abs(g.sub(pred, gt))), S(1) / S(t));
}

/// (1/(T-1)) * sum over frame-difference mismatches. Requires T >= 2.
template <typename S>
TensorId rotation_velocity_loss_node(Graph<S>& g, TensorId pred, TensorId gt) {
  const int t = g.rows(pred);
  if (t < 2) throw ContractError("rotation_velocity_loss: needs at least 2 frames");
  TensorId dp = g.sub(g.slice_rows(pred, 1, t), g.slice_rows(pred, 0, t - 1));
  TensorId dg = g.sub(g.slice_rows(gt, 1, t), g.slice_rows(gt, 0, t - 1));
  return g.scale(g.sum(g.abs(g.sub(dp, dg))), S(1) / S(t - 1));
}

/// Sum of squared entries over weight matrices only; LN gains/biases, all
/// biases, and the uncertainty terms carry no penalty. `leaves` aligns with
/// params.tensors.
template <typename S>
TensorId l2_regularizer_node(Graph<S>& g, const ModelParams<S>& params,
                             std::span<const TensorId> leaves) {
  TensorId acc{};
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (!params.tensors[i].name.ends_with(".weight")) continue;
    TensorId sq = g.sum(g.mul(leaves[i], leaves[i]));
    acc = acc.valid() ? g.add(acc, sq) : sq;
  }
  if (!acc.valid()) {
    std::vector<S> zero{S(0)};
    acc = g.constant(1, 1, zero);
  }
  return acc;
}

struct TotalLossNodes {
  TensorId total;
  TensorId l_theta;
  TensorId l_rv;
  TensorId l_reg;
};

/// Uncertainty mode: exp(-s_theta)*l_theta + s_theta + exp(-s_rv)*l_rv +
/// s_rv + reg_coeff*l_reg, with gradients flowing into both s terms.
/// Fixed mode: lambda_theta*l_theta + lambda_rv*l_rv + reg_coeff*l_reg.
template <typename S>
TotalLossNodes total_loss_node(Graph<S>& g, TensorId l_theta, TensorId l_rv, TensorId l_reg,
                               TensorId s_theta, TensorId s_rv, const LossConfig& config) {
  TotalLossNodes out{TensorId{}, l_theta, l_rv, l_reg};
  TensorId reg = g.scale(l_reg, static_cast<S>(config.reg_coeff));
  if (config.mode == WeightMode::kUncertainty) {
    TensorId wt = g.exp(g.scale(s_theta, S(-1)));
    TensorId wr = g.exp(g.scale(s_rv, S(-1)));
    TensorId term_t = g.add(g.mul(wt, l_theta), s_theta);
    TensorId term_r = g.add(g.mul(wr, l_rv), s_rv);
    out.total = g.add(g.add(term_t, term_r), reg);
  } else {
    out.total = g.add(g.add(g.scale(l_theta, static_cast<S>(config.lambda_theta)),
                            g.scale(l_rv, static_cast<S>(config.lambda_rv))),
                      reg);
  }
  return out;
}

// ---- plain evaluators --------------------------------------------------------

/// Same quantities over pose sequences, computed without a graph. Frames
/// must match in count; root translation is ignored (rotation-space loss).
double rotation_loss(const PoseSequence& pred, const PoseSequence& gt);
double rotation_velocity_loss(const PoseSequence& pred, const PoseSequence& gt);

template <typename S>
double l2_regularizer(const ModelParams<S>& params) {
  double acc = 0.0;
  for (const auto& t : params.tensors) {
    if (!t.name.ends_with(".weight")) continue;
    for (const S v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
  }
  return acc;
}

LossBreakdown total_loss(double l_theta, double l_rv, double l_reg, double s_theta, double s_rv,
                         const LossConfig& config);

}  // namespace twmlp
