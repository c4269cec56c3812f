#include "center3d/target_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "center3d/error.hpp"

namespace center3d {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBin1Center = -0.5 * kPi;
constexpr double kBin2Center = 0.5 * kPi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const char* codec_name(DepthCodec codec) {
  switch (codec) {
    case DepthCodec::Eigen: return "eigen";
    case DepthCodec::SID: return "sid";
    case DepthCodec::LID: return "lid";
    case DepthCodec::DepJoint: return "depjoint";
  }
  return "?";
}

bool depth_in_codec_range(double depth, const CodecConfig& cfg) {
  switch (cfg.codec) {
    case DepthCodec::Eigen: return depth > 0.0;
    case DepthCodec::SID:
    case DepthCodec::LID:
      return depth >= cfg.discretization.d_min_star && depth <= cfg.discretization.d_max_star;
    case DepthCodec::DepJoint: return depth > cfg.depjoint.d_min && depth < cfg.depjoint.d_max;
  }
  return false;
}

DiscretizationConfig discretization_for(const CodecConfig& cfg) {
  DiscretizationConfig d = cfg.discretization;
  d.strategy = cfg.codec == DepthCodec::SID ? Discretization::SID : Discretization::LID;
  return d;
}

}  // namespace

void validate(const FeatureGridMeta& meta) {
  if (meta.stride < 1) throw RangeError("output stride must be >= 1");
  if (meta.input_width < 1 || meta.input_height < 1) throw RangeError("input size must be positive");
}

void validate(const CodecConfig& cfg) {
  switch (cfg.codec) {
    case DepthCodec::Eigen: break;
    case DepthCodec::SID:
    case DepthCodec::LID: validate(discretization_for(cfg)); break;
    case DepthCodec::DepJoint: validate(cfg.depjoint); break;
  }
  if (cfg.reference_area && !(cfg.reference_area->gamma > 0.0 && cfg.reference_area->gamma <= 1.0))
    throw RangeError("reference area gamma must lie in (0, 1]");
}

int class_index(const CodecConfig& cfg, std::string_view class_name) {
  const auto it = std::find(cfg.classes.begin(), cfg.classes.end(), class_name);
  return it == cfg.classes.end() ? -1 : static_cast<int>(it - cfg.classes.begin());
}

OrientationHead encode_orientation(double alpha) {
  alpha = wrap_angle(alpha);
  OrientationHead head{};
  const bool in1 = alpha < kPi / 6.0 || alpha > 5.0 * kPi / 6.0;
  const bool in2 = alpha > -kPi / 6.0 || alpha < -5.0 * kPi / 6.0;
  const double r1 = alpha - kBin1Center;
  const double r2 = alpha - kBin2Center;
  head = {in1 ? 0.0 : 1.0, in1 ? 1.0 : 0.0, std::sin(r1), std::cos(r1),
          in2 ? 0.0 : 1.0, in2 ? 1.0 : 0.0, std::sin(r2), std::cos(r2)};
  return head;
}

double decode_orientation(const OrientationHead& h) {
  if (h[1] > h[5]) return wrap_angle(std::atan2(h[2], h[3]) + kBin1Center);
  return wrap_angle(std::atan2(h[6], h[7]) + kBin2Center);
}

double gaussian_radius(double height, double width, double min_overlap) {
  const double m = min_overlap;
  const double b1 = height + width;
  const double c1 = width * height * (1.0 - m) / (1.0 + m);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  const double b2 = 2.0 * (height + width);
  const double c2 = (1.0 - m) * width * height;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 16.0 * c2)) / 2.0;

  const double a3 = 4.0 * m;
  const double b3 = -2.0 * m * (height + width);
  const double c3 = (m - 1.0) * width * height;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0;
  return std::min({r1, r2, r3});
}

namespace {

int integer_radius(double width, double height, int stride) {
  const double r = gaussian_radius(height / stride, width / stride);
  return std::max(0, static_cast<int>(std::floor(r)));
}

}  // namespace

double gaussian_sigma(double width, double height, int stride) {
  return (2.0 * integer_radius(width, height, stride) + 1.0) / 6.0;
}

std::vector<Grid<double>> gaussian_heatmap(std::span<const HeatmapInstance> instances, const FeatureGridMeta& meta,
                                           int num_classes) {
  validate(meta);
  std::vector<Grid<double>> maps(num_classes, Grid<double>(meta.grid_width(), meta.grid_height(), 0.0));
  for (const auto& inst : instances) {
    if (inst.class_id < 0 || inst.class_id >= num_classes) continue;
    const GridCell c = quantization_offset(inst.center, meta).cell;
    const int radius = integer_radius(inst.width, inst.height, meta.stride);
    const double sigma = (2.0 * radius + 1.0) / 6.0;
    auto& grid = maps[inst.class_id];
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if (!grid.contains(c.x + dx, c.y + dy)) continue;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        double& cell = grid.at(c.x + dx, c.y + dy);
        cell = std::max(cell, v);
      }
    }
  }
  return maps;
}

CenterCell quantization_offset(const Vec2& center, const FeatureGridMeta& meta) {
  const double sx = center.x / meta.stride;
  const double sy = center.y / meta.stride;
  GridCell cell{static_cast<int>(std::floor(sx)), static_cast<int>(std::floor(sy))};
  if (center.x == meta.input_width) cell.x = std::min(cell.x, meta.grid_width() - 1);
  if (center.y == meta.input_height) cell.y = std::min(cell.y, meta.grid_height() - 1);
  return {cell, {sx - cell.x, sy - cell.y}};
}

BBox2D reference_area(const BBox2D& bbox, const ReferenceAreaConfig& cfg) {
  const Vec2 c = bbox.center();
  const double hw = 0.5 * cfg.gamma * bbox.width();
  const double hh = 0.5 * cfg.gamma * bbox.height();
  return {c.x - hw, c.y - hh, c.x + hw, c.y + hh};
}

Grid<int> rasterize_reference_areas(std::span<const RaInstance> instances, const FeatureGridMeta& meta,
                                    const ReferenceAreaConfig& cfg) {
  validate(meta);
  Grid<int> owner(meta.grid_width(), meta.grid_height(), -1);
  const int gw = meta.grid_width();
  const int gh = meta.grid_height();
  for (int i = 0; i < static_cast<int>(instances.size()); ++i) {
    const BBox2D ra = reference_area(instances[i].bbox, cfg);
    const int x0 = std::clamp(static_cast<int>(std::floor(ra.x1 / meta.stride)), 0, gw - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor(ra.x2 / meta.stride)), 0, gw - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(ra.y1 / meta.stride)), 0, gh - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor(ra.y2 / meta.stride)), 0, gh - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int& cell = owner.at(x, y);
        // Instances are visited in index order, so strict < keeps the lower
        // index on equal depth.
        if (cell < 0 || instances[i].depth < instances[cell].depth) cell = i;
      }
    }
  }
  return owner;
}

std::vector<GridCell> owned_cells(const Grid<int>& owner, int instance) {
  std::vector<GridCell> cells;
  for (int y = 0; y < owner.height(); ++y)
    for (int x = 0; x < owner.width(); ++x)
      if (owner.at(x, y) == instance) cells.push_back({x, y});
  return cells;
}

double ra_aggregate(std::span<const double> values) {
  if (values.empty()) throw InputError("reference area has no cells");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

FrameTargets encode_targets(std::span<const ObjectLabel> labels, const CameraCalibration& calib,
                            const FeatureGridMeta& meta, const CodecConfig& cfg) {
  validate(meta);
  validate(cfg);
  FrameTargets out;
  std::vector<HeatmapInstance> splats;
  std::vector<RaInstance> areas;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    const ObjectLabel& label = labels[i];
    const int class_id = class_index(cfg, label.class_name);
    if (class_id < 0) continue;

    const Vec2 c2d = label.bbox.center();
    if (c2d.x < 0 || c2d.y < 0 || c2d.x > meta.input_width || c2d.y > meta.input_height) {
      ++out.dropped_outside_grid;
      continue;
    }
    const Cuboid3D cuboid = cuboid_from_label(label);
    const double depth = cuboid.location.z;
    if (!depth_in_codec_range(depth, cfg)) {
      ++out.dropped_depth_range;
      continue;
    }

    InstanceTarget t;
    t.label_index = i;
    t.class_id = class_id;
    t.center = quantization_offset(c2d, meta);
    t.size = {label.bbox.width(), label.bbox.height()};
    t.offset3d = project(calib, cuboid_center(cuboid)) - c2d;
    t.depth = depth;
    t.eigen_feature = eigen_inverse(depth);
    if (cfg.codec == DepthCodec::SID || cfg.codec == DepthCodec::LID)
      t.ordinal = encode_depth(depth, discretization_for(cfg));
    if (cfg.codec == DepthCodec::DepJoint) t.depjoint_membership = depjoint_membership(depth, cfg.depjoint);
    t.dims = label.dims;
    t.alpha = ry_to_alpha(label.rotation_y, label.location.x, label.location.z);
    t.orientation = encode_orientation(t.alpha);
    out.instances.push_back(t);

    splats.push_back({class_id, c2d, t.size.x, t.size.y});
    areas.push_back({label.bbox, depth});
  }
  out.heatmaps = gaussian_heatmap(splats, meta, static_cast<int>(cfg.classes.size()));
  if (cfg.reference_area) out.ra_owner = rasterize_reference_areas(areas, meta, *cfg.reference_area);
  return out;
}

namespace {

DepthHead ideal_depth_head(const InstanceTarget& t, const CodecConfig& cfg) {
  switch (cfg.codec) {
    case DepthCodec::Eigen: return EigenHead{t.eigen_feature};
    case DepthCodec::SID:
    case DepthCodec::LID: {
      OrdinalPrediction pred;
      pred.probs.assign(cfg.discretization.bins, 0.0);
      std::fill_n(pred.probs.begin(), std::min(t.ordinal.l_int, cfg.discretization.bins), 1.0);
      pred.residual = t.ordinal.l_res;
      return pred;
    }
    case DepthCodec::DepJoint: {
      DepJointPrediction pred;
      pred.p1 = t.depjoint_membership.first;
      pred.p2 = t.depjoint_membership.second;
      pred.raw1 = eigen_inverse(t.depth);
      pred.raw2 = eigen_inverse(cfg.depjoint.d_max - t.depth);
      return pred;
    }
  }
  return EigenHead{};
}

}  // namespace

std::vector<RawInstanceHeads> ideal_heads(const FrameTargets& targets, const CodecConfig& cfg) {
  std::vector<RawInstanceHeads> heads;
  heads.reserve(targets.instances.size());
  for (int i = 0; i < static_cast<int>(targets.instances.size()); ++i) {
    const InstanceTarget& t = targets.instances[i];
    RawInstanceHeads h;
    h.class_name = cfg.classes.at(t.class_id);
    h.cell = t.center.cell;
    h.center_offset = t.center.offset;
    h.size = t.size;
    h.offset3d = t.offset3d;
    h.depth = ideal_depth_head(t, cfg);
    h.dims = t.dims;
    h.orientation = t.orientation;
    h.score = 1.0;
    if (cfg.reference_area && targets.ra_owner.size() > 0) {
      for (size_t k = 0, n = owned_cells(targets.ra_owner, i).size(); k < n; ++k) {
        h.ra_depth.push_back(h.depth);
        h.ra_offset3d.push_back(h.offset3d);
      }
    }
    heads.push_back(std::move(h));
  }
  return heads;
}

double decode_depth_head(const DepthHead& head, const CodecConfig& cfg) {
  return std::visit(
      Overloaded{
          [&](const EigenHead& h) -> double {
            if (cfg.codec != DepthCodec::Eigen)
              throw InputError(std::string("eigen depth head given to codec ") + codec_name(cfg.codec));
            return eigen_transform(h.feature);
          },
          [&](const OrdinalPrediction& h) -> double {
            if (cfg.codec != DepthCodec::SID && cfg.codec != DepthCodec::LID)
              throw InputError(std::string("ordinal depth head given to codec ") + codec_name(cfg.codec));
            if (static_cast<int>(h.probs.size()) != cfg.discretization.bins)
              throw InputError("ordinal depth head has " + std::to_string(h.probs.size()) + " probabilities, expected " +
                               std::to_string(cfg.discretization.bins));
            return ordinal_decode(h, discretization_for(cfg));
          },
          [&](const DepJointPrediction& h) -> double {
            if (cfg.codec != DepthCodec::DepJoint)
              throw InputError(std::string("depjoint depth head given to codec ") + codec_name(cfg.codec));
            return depjoint_decode(h, cfg.depjoint);
          },
      },
      head);
}

DepthHead average_depth_heads(std::span<const DepthHead> heads) {
  if (heads.empty()) throw InputError("reference area has no cells");
  const size_t kind = heads.front().index();
  for (const auto& h : heads)
    if (h.index() != kind) throw InputError("reference area mixes depth head kinds");
  auto mean = [&](auto&& get) {
    std::vector<double> v;
    v.reserve(heads.size());
    for (const auto& h : heads) v.push_back(get(h));
    return ra_aggregate(v);
  };
  if (kind == 0) return EigenHead{mean([](const DepthHead& h) { return std::get<EigenHead>(h).feature; })};
  if (kind == 2) {
    DepJointPrediction p;
    p.p1 = mean([](const DepthHead& h) { return std::get<DepJointPrediction>(h).p1; });
    p.p2 = mean([](const DepthHead& h) { return std::get<DepJointPrediction>(h).p2; });
    p.raw1 = mean([](const DepthHead& h) { return std::get<DepJointPrediction>(h).raw1; });
    p.raw2 = mean([](const DepthHead& h) { return std::get<DepJointPrediction>(h).raw2; });
    return p;
  }
  const size_t n = std::get<OrdinalPrediction>(heads.front()).probs.size();
  OrdinalPrediction p;
  p.probs.resize(n);
  for (size_t k = 0; k < n; ++k) {
    p.probs[k] = mean([&](const DepthHead& h) {
      const auto& probs = std::get<OrdinalPrediction>(h).probs;
      if (probs.size() != n) throw InputError("reference area mixes ordinal head sizes");
      return probs[k];
    });
  }
  p.residual = mean([](const DepthHead& h) { return std::get<OrdinalPrediction>(h).residual; });
  return p;
}

DecodedObject decode_instance(const RawInstanceHeads& raw, const CameraCalibration& calib,
                              const FeatureGridMeta& meta, const CodecConfig& cfg, const DecodeOptions& options) {
  const CenterCell center{raw.cell, raw.center_offset};
  const Vec2 c2d = center.position(meta.stride);

  Vec2 offset = raw.offset3d;
  double depth = 0.0;
  if (!raw.ra_depth.empty()) {
    depth = decode_depth_head(average_depth_heads(raw.ra_depth), cfg);
  } else {
    depth = decode_depth_head(raw.depth, cfg);
  }
  if (!raw.ra_offset3d.empty()) {
    std::vector<double> xs, ys;
    for (const auto& o : raw.ra_offset3d) {
      xs.push_back(o.x);
      ys.push_back(o.y);
    }
    offset = {ra_aggregate(xs), ra_aggregate(ys)};
  }
  const Vec2 c3d = options.use_offset3d ? offset3d_apply(c2d, offset) : c2d;

  const Vec3 center3d = backproject(calib, c3d, depth);
  DecodedObject obj;
  obj.cuboid.dims = raw.dims;
  obj.cuboid.location = center3d + Vec3{0.0, 0.5 * raw.dims.h, 0.0};
  const double alpha = decode_orientation(raw.orientation);
  obj.cuboid.yaw = alpha_to_ry(alpha, obj.cuboid.location.x, obj.cuboid.location.z);

  ObjectLabel& l = obj.label;
  l.class_name = raw.class_name;
  l.alpha = alpha;
  l.bbox = {c2d.x - 0.5 * raw.size.x, c2d.y - 0.5 * raw.size.y, c2d.x + 0.5 * raw.size.x,
            c2d.y + 0.5 * raw.size.y};
  l.dims = raw.dims;
  l.location = obj.cuboid.location;
  l.rotation_y = obj.cuboid.yaw;
  l.score = raw.score;
  return obj;
}

std::vector<DecodedObject> decode_objects(std::span<const RawInstanceHeads> raw, const CameraCalibration& calib,
                                          const FeatureGridMeta& meta, const CodecConfig& cfg,
                                          const DecodeOptions& options) {
  validate(meta);
  validate(cfg);
  std::vector<DecodedObject> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(decode_instance(r, calib, meta, cfg, options));
  return out;
}

}  // namespace center3d
