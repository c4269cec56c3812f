#pragma once

#include <span>
#include <vector>

#include "center3d/depth_codec.hpp"
#include "center3d/grid.hpp"

namespace center3d {

/// Probabilities are clamped into [eps, 1 - eps] before any logarithm.
inline constexpr double kProbabilityEpsilon = 1e-7;

struct LossResult {
  double value = 0.0;
  std::vector<double> gradient;
};

struct LossWeights {
  double lambda_dep = 1.0;
  double lambda_off = 1.0;
};

/// Ordinal classification loss over N "beyond bin n" probabilities for a
/// ground-truth bin count `gt_bin` in [0, N]. Gradient is w.r.t. each prob.
LossResult ordinal_loss(std::span<const double> probs, int gt_bin);

/// Smooth L1 with knee at 1. Gradient is {d/dx, d/dy}.
LossResult smooth_l1(double x, double y);

/// Ordinal loss plus smooth L1 on the residual. Gradient holds the N prob
/// partials followed by the residual partial.
LossResult ordinal_depth_loss(const OrdinalPrediction& pred, const DepthEncoding& target);

/// Binary cross-entropy per bin plus L1 regression on the active bins.
/// Gradient order: {p1, p2, raw1, raw2}. The L1 subgradient at zero is 0.
LossResult depjoint_loss(const DepJointPrediction& pred, double depth, const DepJointConfig& cfg);

/// lambda_dep times the sum of per-instance values; 0 for no instances.
double total_depth_loss(std::span<const LossResult> instances, const LossWeights& weights);

/// Penalty-reduced pixel-wise focal loss (exponents 2 and 4) normalized by the
/// number of ground-truth peaks (cells equal to 1). Gradient per cell, row
/// major. Throws InputError on shape mismatch.
LossResult focal_loss(const Grid<double>& pred, const Grid<double>& gt);

}  // namespace center3d
