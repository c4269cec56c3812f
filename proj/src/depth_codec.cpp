#include "center3d/depth_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "center3d/error.hpp"

namespace center3d {

DiscretizationConfig DiscretizationConfig::normalized(double d_min_star, double d_max_star, int bins,
                                                      Discretization strategy) {
  return {d_min_star, d_max_star, 1.0 - d_min_star, bins, strategy};
}

void validate(const DiscretizationConfig& cfg) {
  if (cfg.bins < 1) throw RangeError("discretization needs at least one bin");
  if (!(cfg.d_min() < cfg.d_max()) || !std::isfinite(cfg.d_max()))
    throw RangeError("discretization needs d_min < d_max");
  if (cfg.strategy == Discretization::SID && !(cfg.d_min() > 0.0))
    throw RangeError("SID needs a positive shifted d_min");
}

double lid_bin_width(const DiscretizationConfig& cfg) {
  const double n = cfg.bins;
  return 2.0 * (cfg.d_max() - cfg.d_min()) / (n * (1.0 + n));
}

double depth_to_bin_coordinate(double depth, const DiscretizationConfig& cfg) {
  validate(cfg);
  if (!(depth >= cfg.d_min_star && depth <= cfg.d_max_star)) {
    throw RangeError("depth " + std::to_string(depth) + " outside [" + std::to_string(cfg.d_min_star) +
                     ", " + std::to_string(cfg.d_max_star) + "]");
  }
  const double d = depth + cfg.shift;
  double l = 0.0;
  if (cfg.strategy == Discretization::LID) {
    l = -0.5 + 0.5 * std::sqrt(1.0 + 8.0 * (d - cfg.d_min()) / lid_bin_width(cfg));
  } else {
    l = cfg.bins * (std::log(d) - std::log(cfg.d_min())) / (std::log(cfg.d_max()) - std::log(cfg.d_min()));
  }
  return std::clamp(l, 0.0, static_cast<double>(cfg.bins));
}

DepthEncoding encode_depth(double depth, const DiscretizationConfig& cfg) {
  const double l = depth_to_bin_coordinate(depth, cfg);
  const double l_int = std::floor(l);
  return {static_cast<int>(l_int), l - l_int};
}

double decode_depth(double l, const DiscretizationConfig& cfg) {
  validate(cfg);
  if (!(l >= 0.0 && l <= cfg.bins)) {
    throw RangeError("bin coordinate " + std::to_string(l) + " outside [0, " + std::to_string(cfg.bins) + "]");
  }
  double d = 0.0;
  if (cfg.strategy == Discretization::LID) {
    d = cfg.d_min() + lid_bin_width(cfg) * l * (l + 1.0) / 2.0;
  } else {
    d = cfg.d_min() * std::exp(l / cfg.bins * std::log(cfg.d_max() / cfg.d_min()));
  }
  return d - cfg.shift;
}

int bin_index(double depth, const DiscretizationConfig& cfg) {
  const double l = depth_to_bin_coordinate(depth, cfg);
  return std::min(static_cast<int>(std::floor(l)), cfg.bins - 1);
}

std::vector<DepthBin> bin_table(const DiscretizationConfig& cfg) {
  validate(cfg);
  std::vector<DepthBin> table;
  table.reserve(cfg.bins);
  for (int n = 0; n < cfg.bins; ++n) {
    table.push_back({n, decode_depth(n, cfg), decode_depth(n + 1, cfg)});
  }
  return table;
}

double ordinal_decode(const OrdinalPrediction& pred, const DiscretizationConfig& cfg) {
  const auto activated = std::count_if(pred.probs.begin(), pred.probs.end(), [](double p) { return p > 0.5; });
  const double l = std::clamp(static_cast<double>(activated) + pred.residual, 0.0, static_cast<double>(cfg.bins));
  return decode_depth(l, cfg);
}

double eigen_transform(double feature) { return std::exp(-feature); }

double eigen_inverse(double depth) {
  if (!(depth > 0.0)) throw RangeError("eigen_inverse needs a positive depth");
  return -std::log(depth);
}

void validate(const DepJointConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0) || !(cfg.beta > 0.0 && cfg.beta <= 1.0))
    throw RangeError("DepJoint scales alpha and beta must lie in (0, 1]");
  if (!(cfg.d_min < cfg.d_max)) throw RangeError("DepJoint needs d_min < d_max");
  const auto [bin1, bin2] = depjoint_bins(cfg);
  if (!(bin1.hi > bin1.lo) || !(bin2.hi > bin2.lo)) throw RangeError("DepJoint bin is empty");
  if (bin1.hi < bin2.lo) throw RangeError("DepJoint bins leave a gap");
}

std::pair<DepthInterval, DepthInterval> depjoint_bins(const DepJointConfig& cfg) {
  return {{cfg.d_min, (1.0 - cfg.alpha) * cfg.d_min + cfg.alpha * cfg.d_max},
          {(1.0 - cfg.beta) * cfg.d_min + cfg.beta * cfg.d_max, cfg.d_max}};
}

std::pair<int, int> depjoint_membership(double depth, const DepJointConfig& cfg) {
  const auto [bin1, bin2] = depjoint_bins(cfg);
  return {bin1.contains(depth) ? 1 : 0, bin2.contains(depth) ? 1 : 0};
}

double depjoint_decode(const DepJointPrediction& pred, const DepJointConfig& cfg) {
  const double total = pred.p1 + pred.p2;
  if (!(total > 0.0)) throw RangeError("DepJoint decode needs p1 + p2 > 0");
  const double w1 = pred.p1 / total;
  const double w2 = pred.p2 / total;
  // Skip zero-weight terms so an unused regressor output cannot inject NaN.
  double d = 0.0;
  if (w1 > 0.0) d += w1 * eigen_transform(pred.raw1);
  if (w2 > 0.0) d += w2 * (cfg.d_max - eigen_transform(pred.raw2));
  return std::clamp(d, cfg.d_min, cfg.d_max);
}

}  // namespace center3d
