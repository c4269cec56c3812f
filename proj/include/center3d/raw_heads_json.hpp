#pragma once

#include <string_view>
#include <vector>

#include "center3d/target_codec.hpp"
#include "json.hpp"

namespace center3d {

inline constexpr int kSchemaVersion = 1;

/// One frame of raw head outputs, the interchange unit consumed by
/// `center3d decode`.
///
/// Document layout (all pixel values are input-image pixels unless noted):
///
///   {
///     "schema_version": 1,
///     "frame_id": 7,
///     "input_width": 1242, "input_height": 375, "stride": 4,
///     "depth_codec": "eigen" | "sid" | "lid" | "depjoint",
///     "instances": [{
///       "class": "Car",
///       "cell": [x, y],                 grid cell of the heatmap peak
///       "center_offset": [dx, dy],      sub-cell remainder, grid units
///       "size": [w, h],                 2D box size
///       "offset3d": [dx, dy],           projected 3D center minus 2D center
///       "depth": <depth head>,
///       "dimensions": [h, w, l],        meters
///       "orientation": [8 numbers],     two bins of {off, on, sin, cos}
///       "score": 0.9,
///       "ra_depth": [<depth head>...],  optional, one per reference-area cell
///       "ra_offset3d": [[dx, dy]...]    optional, one per reference-area cell
///     }]
///   }
///
/// <depth head> is {"feature": f} for eigen, {"probs": [N], "residual": r}
/// for sid/lid, and {"p1", "p2", "raw1", "raw2"} for depjoint.
struct RawHeadsFrame {
  int frame_id = 0;
  FeatureGridMeta meta;
  DepthCodec codec = DepthCodec::Eigen;
  std::vector<RawInstanceHeads> instances;
};

const char* depth_codec_name(DepthCodec codec);
/// Throws InputError for unknown names.
DepthCodec parse_depth_codec(std::string_view name);

nlohmann::json to_json(const RawHeadsFrame& frame);

/// Validates and converts a document. Violations raise InputError whose
/// message starts with the JSON pointer of the offending value.
RawHeadsFrame raw_heads_from_json(const nlohmann::json& doc);

}  // namespace center3d
