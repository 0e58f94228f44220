#include "twmlp/losses.hpp"

#include <cmath>
#include <string>

namespace twmlp {

namespace {

void check_same_length(const PoseSequence& pred, const PoseSequence& gt, const char* where) {
  if (pred.frames.size() != gt.frames.size()) {
    throw ShapeError(std::string(where) + ": frame counts differ (" +
                     std::to_string(pred.frames.size()) + " vs " +
                     std::to_string(gt.frames.size()) + ")");
  }
}

}  // namespace

double rotation_loss(const PoseSequence& pred, const PoseSequence& gt) {
  check_same_length(pred, gt, "rotation_loss");
  const std::size_t T = pred.frames.size();
  if (T == 0) throw ShapeError("rotation_loss: empty sequence");
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Rot6& a = pred.frames[t].rotation6[j];
      const Rot6& b = gt.frames[t].rotation6[j];
      for (int c = 0; c < 6; ++c) acc += std::abs(a[c] - b[c]);
    }
  }
  return acc / static_cast<double>(T);
}

double rotation_velocity_loss(const PoseSequence& pred, const PoseSequence& gt) {
  check_same_length(pred, gt, "rotation_velocity_loss");
  const std::size_t T = pred.frames.size();
  if (T < 2) throw ContractError("rotation_velocity_loss: needs at least 2 frames");
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Rot6& a0 = pred.frames[t].rotation6[j];
      const Rot6& a1 = pred.frames[t + 1].rotation6[j];
      const Rot6& b0 = gt.frames[t].rotation6[j];
      const Rot6& b1 = gt.frames[t + 1].rotation6[j];
      for (int c = 0; c < 6; ++c) acc += std::abs((a1[c] - a0[c]) - (b1[c] - b0[c]));
    }
  }
  return acc / static_cast<double>(T - 1);
}

LossBreakdown total_loss(double l_theta, double l_rv, double l_reg, double s_theta, double s_rv,
                         const LossConfig& config) {
  LossBreakdown b;
  b.l_theta = l_theta;
  b.l_rv = l_rv;
  b.l_reg = l_reg;
  if (config.mode == WeightMode::kUncertainty) {
    b.weight_theta = std::exp(-s_theta);
    b.weight_rv = std::exp(-s_rv);
    b.total = b.weight_theta * l_theta + s_theta + b.weight_rv * l_rv + s_rv +
              config.reg_coeff * l_reg;
  } else {
    b.weight_theta = config.lambda_theta;
    b.weight_rv = config.lambda_rv;
    b.total = config.lambda_theta * l_theta + config.lambda_rv * l_rv + config.reg_coeff * l_reg;
  }
  if (!std::isfinite(b.total)) throw NumericError("total_loss: non-finite total");
  return b;
}

}  // namespace twmlp
