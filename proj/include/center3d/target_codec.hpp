#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "center3d/camera_geometry.hpp"
#include "center3d/depth_codec.hpp"
#include "center3d/grid.hpp"
#include "center3d/kitti_io.hpp"

namespace center3d {

struct FeatureGridMeta {
  int input_width = kDefaultImageWidth;
  int input_height = kDefaultImageHeight;
  int stride = 4;

  int grid_width() const { return (input_width + stride - 1) / stride; }
  int grid_height() const { return (input_height + stride - 1) / stride; }
};

void validate(const FeatureGridMeta& meta);

struct ReferenceAreaConfig {
  double gamma = 0.4;
};

struct GridCell {
  int x = 0;
  int y = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Grid cell holding a center plus the sub-cell remainder lost by striding.
struct CenterCell {
  GridCell cell;
  Vec2 offset;

  /// Input-image position, (cell + offset) * stride.
  Vec2 position(int stride) const {
    return {(cell.x + offset.x) * stride, (cell.y + offset.y) * stride};
  }
};

enum class DepthCodec { Eigen, SID, LID, DepJoint };

/// Selects and parameterizes the depth head used by encode/decode.
struct CodecConfig {
  DepthCodec codec = DepthCodec::Eigen;
  DiscretizationConfig discretization;
  DepJointConfig depjoint;
  std::optional<ReferenceAreaConfig> reference_area;
  /// Heatmap channel order; labels of other classes are not encoded.
  std::vector<std::string> classes = {"Car", "Pedestrian", "Cyclist"};
};

void validate(const CodecConfig& cfg);
int class_index(const CodecConfig& cfg, std::string_view class_name);

struct EigenHead {
  double feature = 0.0;
};

using DepthHead = std::variant<EigenHead, OrdinalPrediction, DepJointPrediction>;

/// Two overlapping orientation bins, four scalars each:
/// {bin logit off, bin logit on, sin(residual), cos(residual)}.
/// Bin 1 is centred on -pi/2 and covers alpha < pi/6 or alpha > 5pi/6;
/// bin 2 is centred on +pi/2 and covers alpha > -pi/6 or alpha < -5pi/6.
using OrientationHead = std::array<double, 8>;

OrientationHead encode_orientation(double alpha);
double decode_orientation(const OrientationHead& head);

/// Per-instance outputs of every regression head, sampled at the center cell.
/// When reference areas are used, `ra_depth` and `ra_offset3d` hold the
/// predictions of every cell of the instance's area (center cell included).
struct RawInstanceHeads {
  std::string class_name = "Car";
  GridCell cell;
  Vec2 center_offset;
  Vec2 size;
  Vec2 offset3d;
  DepthHead depth = EigenHead{};
  Dimensions dims;
  OrientationHead orientation{};
  double score = 1.0;
  std::vector<DepthHead> ra_depth;
  std::vector<Vec2> ra_offset3d;
};

struct HeatmapInstance {
  int class_id = 0;
  Vec2 center;
  double width = 0.0;
  double height = 0.0;
};

/// Radius at which a shifted box keeps `min_overlap` IoU with the original,
/// for a box of the given size in grid units.
double gaussian_radius(double height, double width, double min_overlap = 0.7);

/// Standard deviation of the splat drawn for a box of the given size in
/// input pixels: integer radius r = floor(gaussian_radius), sigma = (2r+1)/6.
double gaussian_sigma(double width, double height, int stride);

/// One grid per class. Each instance splats exp(-r^2 / (2 sigma^2)) around
/// its center cell (square window of the integer radius); overlapping splats
/// are merged with elementwise max.
std::vector<Grid<double>> gaussian_heatmap(std::span<const HeatmapInstance> instances,
                                           const FeatureGridMeta& meta, int num_classes);

/// Center cell and remainder center/R - floor(center/R). A center on the
/// right or bottom image edge is assigned to the last cell.
CenterCell quantization_offset(const Vec2& center, const FeatureGridMeta& meta);

/// The box scaled by gamma about its own center.
BBox2D reference_area(const BBox2D& bbox, const ReferenceAreaConfig& cfg);

struct RaInstance {
  BBox2D bbox;
  double depth = 0.0;
};

/// Grid of owning instance index, -1 where no area covers the cell. A cell
/// belongs to every area whose stride-scaled extent spans it; overlaps go to
/// the smallest depth, then to the lower instance index.
Grid<int> rasterize_reference_areas(std::span<const RaInstance> instances, const FeatureGridMeta& meta,
                                    const ReferenceAreaConfig& cfg);

/// Cells owned by `instance`, in row-major order.
std::vector<GridCell> owned_cells(const Grid<int>& owner, int instance);

/// Equal-weight mean. Throws InputError for an empty area.
double ra_aggregate(std::span<const double> values);

struct InstanceTarget {
  int label_index = 0;
  int class_id = 0;
  CenterCell center;
  Vec2 size;
  Vec2 offset3d;
  double depth = 0.0;
  double eigen_feature = 0.0;
  DepthEncoding ordinal;
  std::pair<int, int> depjoint_membership{0, 0};
  Dimensions dims;
  double alpha = 0.0;
  OrientationHead orientation{};
};

struct FrameTargets {
  std::vector<Grid<double>> heatmaps;
  std::vector<InstanceTarget> instances;
  /// Reference-area ownership over `instances`; empty unless areas are enabled.
  Grid<int> ra_owner;
  int dropped_outside_grid = 0;
  int dropped_depth_range = 0;
};

/// Builds training targets for every label of a configured class. Instances
/// whose 2D center falls outside the image, or whose depth lies outside the
/// active codec's range, are dropped and counted.
FrameTargets encode_targets(std::span<const ObjectLabel> labels, const CameraCalibration& calib,
                            const FeatureGridMeta& meta, const CodecConfig& cfg);

/// The head outputs a perfect network would emit for these targets.
std::vector<RawInstanceHeads> ideal_heads(const FrameTargets& targets, const CodecConfig& cfg);

struct DecodeOptions {
  /// When false the projected 3D center is taken to be the 2D center.
  bool use_offset3d = true;
};

struct DecodedObject {
  ObjectLabel label;
  Cuboid3D cuboid;
};

/// Decodes a depth head of the active codec to meters.
double decode_depth_head(const DepthHead& head, const CodecConfig& cfg);

/// Channel-wise mean of several depth heads of the same kind.
DepthHead average_depth_heads(std::span<const DepthHead> heads);

DecodedObject decode_instance(const RawInstanceHeads& raw, const CameraCalibration& calib,
                              const FeatureGridMeta& meta, const CodecConfig& cfg,
                              const DecodeOptions& options = {});

std::vector<DecodedObject> decode_objects(std::span<const RawInstanceHeads> raw, const CameraCalibration& calib,
                                          const FeatureGridMeta& meta, const CodecConfig& cfg,
                                          const DecodeOptions& options = {});

}  // namespace center3d
