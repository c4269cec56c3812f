#include "center3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "center3d/error.hpp"

namespace center3d {
namespace {

double clamp_prob(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LossResult ordinal_loss(std::span<const double> probs, int gt_bin) {
  const int n_bins = static_cast<int>(probs.size());
  if (gt_bin < 0 || gt_bin > n_bins) {
    throw RangeError("ordinal target " + std::to_string(gt_bin) + " outside [0, " + std::to_string(n_bins) + "]");
  }
  LossResult r;
  r.gradient.resize(probs.size());
  for (int n = 0; n < n_bins; ++n) {
    const double p = clamp_prob(probs[n]);
    if (n < gt_bin) {
      r.value -= std::log(p);
      r.gradient[n] = -1.0 / p;
    } else {
      r.value -= std::log1p(-p);
      r.gradient[n] = 1.0 / (1.0 - p);
    }
  }
  return r;
}

LossResult smooth_l1(double x, double y) {
  const double diff = x - y;
  const double a = std::abs(diff);
  if (a < 1.0) return {0.5 * diff * diff, {diff, -diff}};
  return {a - 0.5, {sign(diff), -sign(diff)}};
}

LossResult ordinal_depth_loss(const OrdinalPrediction& pred, const DepthEncoding& target) {
  LossResult r = ordinal_loss(pred.probs, target.l_int);
  const LossResult res = smooth_l1(pred.residual, target.l_res);
  r.value += res.value;
  r.gradient.push_back(res.gradient[0]);
  return r;
}

LossResult depjoint_loss(const DepJointPrediction& pred, double depth, const DepJointConfig& cfg) {
  if (!(depth >= cfg.d_min && depth <= cfg.d_max)) {
    throw RangeError("depth " + std::to_string(depth) + " outside the DepJoint range");
  }
  const auto [in1, in2] = depjoint_membership(depth, cfg);
  LossResult r;
  r.gradient.assign(4, 0.0);

  const double ps[2] = {clamp_prob(pred.p1), clamp_prob(pred.p2)};
  const int targets[2] = {in1, in2};
  for (int b = 0; b < 2; ++b) {
    const double p = ps[b];
    if (targets[b] == 1) {
      r.value -= std::log(p);
      r.gradient[b] = -1.0 / p;
    } else {
      r.value -= std::log1p(-p);
      r.gradient[b] = 1.0 / (1.0 - p);
    }
  }
  // d/draw |t - exp(-raw)| = sign(t - exp(-raw)) * exp(-raw)
  if (in1) {
    const double phi = std::exp(-pred.raw1);
    r.value += std::abs(depth - phi);
    r.gradient[2] = sign(depth - phi) * phi;
  }
  if (in2) {
    const double phi = std::exp(-pred.raw2);
    const double t = cfg.d_max - depth;
    r.value += std::abs(t - phi);
    r.gradient[3] = sign(t - phi) * phi;
  }
  return r;
}

double total_depth_loss(std::span<const LossResult> instances, const LossWeights& weights) {
  double sum = 0.0;
  for (const auto& r : instances) sum += r.value;
  return weights.lambda_dep * sum;
}

LossResult focal_loss(const Grid<double>& pred, const Grid<double>& gt) {
  if (!pred.same_shape(gt)) {
    throw InputError("focal loss shape mismatch: " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + " vs " + std::to_string(gt.width()) + "x" +
                     std::to_string(gt.height()));
  }
  const auto& p_all = pred.values();
  const auto& g_all = gt.values();
  const auto num_pos = std::count(g_all.begin(), g_all.end(), 1.0);
  const double norm = num_pos > 0 ? 1.0 / static_cast<double>(num_pos) : 1.0;

  LossResult r;
  r.gradient.resize(p_all.size());
  for (size_t i = 0; i < p_all.size(); ++i) {
    const double p = clamp_prob(p_all[i]);
    if (g_all[i] == 1.0) {
      const double q = 1.0 - p;
      r.value -= q * q * std::log(p);
      r.gradient[i] = norm * (2.0 * q * std::log(p) - q * q / p);
    } else {
      const double w = std::pow(1.0 - g_all[i], 4);
      const double log_q = std::log1p(-p);
      r.value -= w * p * p * log_q;
      r.gradient[i] = norm * w * (-2.0 * p * log_q + p * p / (1.0 - p));
    }
  }
  r.value *= norm;
  return r;
}

}  // namespace center3d
