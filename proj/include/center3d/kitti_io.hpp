#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "center3d/types.hpp"

namespace center3d {

inline constexpr int kDefaultImageWidth = 1242;
inline constexpr int kDefaultImageHeight = 375;

/// One line of a KITTI object label or prediction file.
///
/// `location` is the bottom-face center of the cuboid in the rectified camera
/// frame. DontCare rows carry -1 sentinels in `dims` and are kept so the
/// evaluator can apply its ignore regions.
struct ObjectLabel {
  std::string class_name;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  BBox2D bbox;
  Dimensions dims;
  Vec3 location;
  double rotation_y = 0.0;
  std::optional<double> score;

  bool is_dont_care() const { return class_name == "DontCare"; }
  friend bool operator==(const ObjectLabel&, const ObjectLabel&) = default;
};

using ProjectionMatrix = std::array<std::array<double, 4>, 3>;

struct CameraCalibration {
  ProjectionMatrix P{};
  int image_width = kDefaultImageWidth;
  int image_height = kDefaultImageHeight;

  friend bool operator==(const CameraCalibration&, const CameraCalibration&) = default;
};

/// Sorted, duplicate-free list of frame ids.
struct SplitList {
  std::vector<int> frame_ids;
};

struct Frame {
  int id = 0;
  std::vector<ObjectLabel> labels;
  CameraCalibration calib;
};

/// Parses 15 (ground truth) or 16 (prediction) whitespace-separated fields.
/// Throws ParseError carrying the 1-based index of the offending field.
ObjectLabel parse_label_line(std::string_view line);

/// Parses every non-blank line of a label file.
std::vector<ObjectLabel> parse_label_file(std::string_view text);

/// Formats a label as a KITTI line. Reals get at least two decimals and as
/// many more as needed to reparse to the identical double. The score field is
/// appended when present.
std::string serialize_label(const ObjectLabel& label);

/// Same as serialize_label but requires a score (16 fields).
std::string serialize_prediction(const ObjectLabel& label);

/// Reads the "P2:" entry of a KITTI calibration file.
CameraCalibration parse_calibration(std::string_view text,
                                    int image_width = kDefaultImageWidth,
                                    int image_height = kDefaultImageHeight);

/// Writes P0..P3 (all equal to the stored P2) plus an identity R0_rect.
std::string serialize_calibration(const CameraCalibration& calib);

SplitList parse_split(std::string_view text);
std::string serialize_split(const SplitList& split);

/// Zero-padded six digit KITTI frame name, e.g. 7 -> "000007".
std::string frame_name(int id);

/// Frame ids of every "<digits>.txt" file in `dir`, sorted ascending.
std::vector<int> list_frame_ids(const std::filesystem::path& dir);

/// Loads labels and calibration for each split id, in split order. Missing
/// files raise InputError naming the frame id.
std::vector<Frame> load_dataset(const std::filesystem::path& label_dir,
                                const std::filesystem::path& calib_dir,
                                const SplitList& split);

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename, so readers never observe a
/// partially written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace center3d
