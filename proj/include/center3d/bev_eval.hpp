#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "center3d/camera_geometry.hpp"
#include "center3d/kitti_io.hpp"

namespace center3d {

enum class Difficulty { Easy = 0, Moderate = 1, Hard = 2, Ignored = 3 };
enum class Metric { Box2D, BEV, Box3D };

inline constexpr std::array<Difficulty, 3> kDifficulties = {Difficulty::Easy, Difficulty::Moderate,
                                                            Difficulty::Hard};
inline constexpr std::array<Metric, 3> kMetrics = {Metric::Box2D, Metric::BEV, Metric::Box3D};

const char* to_string(Difficulty d);
const char* to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Visibility limits per difficulty (easy, moderate, hard).
struct DifficultyThresholds {
  std::array<double, 3> min_height = {40.0, 25.0, 25.0};
  std::array<int, 3> max_occlusion = {0, 1, 2};
  std::array<double, 3> max_truncation = {0.15, 0.30, 0.50};
};

struct EvalConfig {
  double iou_threshold = 0.7;
  Metric metric = Metric::BEV;
  std::string class_name = "Car";
  /// Detections matched to a neighboring class (Van for Car, Person_sitting
  /// for Pedestrian) count as neither TP nor FP.
  bool ignore_neighbor_classes = true;
  DifficultyThresholds thresholds;
};

void validate(const EvalConfig& cfg);

/// Easiest difficulty whose limits the object meets, or Ignored. Difficulty
/// sets are cumulative: an Easy object also counts for Moderate and Hard.
Difficulty assign_difficulty(const ObjectLabel& label, double bbox_height_px,
                             const DifficultyThresholds& thresholds = {});

/// True if the object belongs to the evaluation set of `level`.
bool counts_for(Difficulty assigned, Difficulty level);

double iou_2d(const BBox2D& a, const BBox2D& b);

/// Area of the intersection of two yawed x-z footprints.
double bev_intersection_area(const Cuboid3D& a, const Cuboid3D& b);
double iou_bev(const Cuboid3D& a, const Cuboid3D& b);
double iou_3d(const Cuboid3D& a, const Cuboid3D& b);

/// IoU of two labels under the given metric.
double label_iou(const ObjectLabel& a, const ObjectLabel& b, Metric metric);

/// One scored detection after matching; `tp` false means FP.
struct ScoredMatch {
  double score = 0.0;
  bool tp = false;
};

struct FrameMatches {
  std::vector<ScoredMatch> matches;  // in descending score order
  int num_gt = 0;                    // eligible ground truths
  int fn = 0;
};

/// Greedy matching for one frame and difficulty level.
FrameMatches match_detections(std::span<const ObjectLabel> gts, std::span<const ObjectLabel> dets,
                              Difficulty level, const EvalConfig& cfg);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Precision/recall after each detection of a score-sorted stream.
std::vector<PrPoint> pr_curve(std::span<const ScoredMatch> stream, int num_gt);

/// Mean over recall levels 0.0, 0.1, ..., 1.0 of the best precision at any
/// recall at or above the level. Zero when num_gt == 0.
double average_precision_11pt(std::span<const ScoredMatch> stream, int num_gt);

struct DifficultyResult {
  double ap = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int num_gt = 0;
  std::vector<PrPoint> pr_curve;
};

struct EvalReport {
  Metric metric = Metric::BEV;
  double iou_threshold = 0.7;
  std::string class_name = "Car";
  std::array<DifficultyResult, 3> results;

  const DifficultyResult& at(Difficulty d) const { return results.at(static_cast<size_t>(d)); }
};

/// Evaluates aligned frame lists (gt_frames[i] pairs with det_frames[i]).
/// Throws InputError when the frame counts differ.
EvalReport evaluate(std::span<const std::vector<ObjectLabel>> gt_frames,
                    std::span<const std::vector<ObjectLabel>> det_frames, const EvalConfig& cfg);

}  // namespace center3d
