#pragma once

#include <span>
#include <utility>
#include <vector>

namespace center3d {

enum class Discretization { SID, LID };

/// Parameters of the ordinal depth discretization.
///
/// The raw extrema `d_min_star`/`d_max_star` are shifted by `shift` before
/// binning; all public functions take and return raw (unshifted) depths.
struct DiscretizationConfig {
  double d_min_star = 1.0;
  double d_max_star = 91.0;
  double shift = 0.0;
  int bins = 80;
  Discretization strategy = Discretization::LID;

  double d_min() const { return d_min_star + shift; }
  double d_max() const { return d_max_star + shift; }

  /// Chooses the shift so that the shifted minimum equals 1.0.
  static DiscretizationConfig normalized(double d_min_star, double d_max_star, int bins,
                                         Discretization strategy);
};

/// Throws RangeError unless d_min < d_max, N >= 1 and (for SID) d_min > 0.
void validate(const DiscretizationConfig& cfg);

/// Integer bin count plus the fractional part kept for regression.
struct DepthEncoding {
  int l_int = 0;
  double l_res = 0.0;

  double continuous() const { return l_int + l_res; }
};

struct DepthBin {
  int index = 0;
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double median() const { return 0.5 * (lo + hi); }
};

/// Per-bin probabilities P(depth beyond bin n) plus the regressed residual.
struct OrdinalPrediction {
  std::vector<double> probs;
  double residual = 0.0;
};

/// Width of the first LID bin; later bins grow by this amount each step.
double lid_bin_width(const DiscretizationConfig& cfg);

/// Continuous bin coordinate l in [0, N]. Throws RangeError outside
/// [d_min_star, d_max_star].
double depth_to_bin_coordinate(double depth, const DiscretizationConfig& cfg);
DepthEncoding encode_depth(double depth, const DiscretizationConfig& cfg);

/// Inverse of depth_to_bin_coordinate. Throws RangeError for l outside [0, N].
double decode_depth(double l, const DiscretizationConfig& cfg);

/// Index of the bin that contains `depth` (0-based; d_max maps to N-1).
int bin_index(double depth, const DiscretizationConfig& cfg);
std::vector<DepthBin> bin_table(const DiscretizationConfig& cfg);

/// Counts activated bins (prob > 0.5), adds the residual, clamps to [0, N]
/// and decodes. Non-monotone inputs are counted as-is.
double ordinal_decode(const OrdinalPrediction& pred, const DiscretizationConfig& cfg);

/// Exponential output mapping: depth = exp(-feature).
double eigen_transform(double feature);
/// feature = -ln(depth). Throws RangeError for depth <= 0.
double eigen_inverse(double depth);

/// Two-bin joint classification/regression over [d_min, d_max].
struct DepJointConfig {
  double alpha = 0.7;
  double beta = 0.3;
  double d_min = 0.0;
  double d_max = 60.0;
};

struct DepthInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double d) const { return lo <= d && d <= hi; }
  friend bool operator==(const DepthInterval&, const DepthInterval&) = default;
};

struct DepJointPrediction {
  double p1 = 0.0;
  double p2 = 0.0;
  double raw1 = 0.0;
  double raw2 = 0.0;
};

/// Throws RangeError on invalid scales, an empty (zero-width) bin, or a gap
/// between the bins.
void validate(const DepJointConfig& cfg);
std::pair<DepthInterval, DepthInterval> depjoint_bins(const DepJointConfig& cfg);
std::pair<int, int> depjoint_membership(double depth, const DepJointConfig& cfg);

/// Confidence-weighted average of the near-bin depth and the far-bin
/// complement, clamped to [d_min, d_max]. Throws RangeError when p1 + p2 == 0.
double depjoint_decode(const DepJointPrediction& pred, const DepJointConfig& cfg);

}  // namespace center3d
