#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "center3d/error.hpp"
#include "center3d/synth.hpp"
#include "center3d/target_codec.hpp"
#include "doctest.h"

using namespace center3d;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

CodecConfig codec(DepthCodec kind, bool ra = false) {
  CodecConfig cfg;
  cfg.codec = kind;
  cfg.discretization = {1.0, 91.0, 0.0, 80, Discretization::LID};
  cfg.depjoint = {0.7, 0.3, 0.0, 90.0};
  if (ra) cfg.reference_area = ReferenceAreaConfig{0.4};
  return cfg;
}

ObjectLabel label_for(const CameraCalibration& calib, const Cuboid3D& c) {
  ObjectLabel l;
  l.class_name = "Car";
  l.bbox = amodal_bbox(calib, c, true);
  l.dims = c.dims;
  l.location = c.location;
  l.rotation_y = c.yaw;
  l.alpha = ry_to_alpha(c.yaw, c.location.x, c.location.z);
  return l;
}

void check_roundtrip(const std::vector<ObjectLabel>& labels, const CameraCalibration& calib, const CodecConfig& cfg) {
  const FeatureGridMeta meta{calib.image_width, calib.image_height, 4};
  const FrameTargets targets = encode_targets(labels, calib, meta, cfg);
  const auto heads = ideal_heads(targets, cfg);
  const auto decoded = decode_objects(heads, calib, meta, cfg);
  REQUIRE(decoded.size() == targets.instances.size());
  for (size_t i = 0; i < decoded.size(); ++i) {
    const ObjectLabel& gt = labels[targets.instances[i].label_index];
    const Cuboid3D& c = decoded[i].cuboid;
    CHECK((c.location - gt.location).x == Approx(0).epsilon(1e-6));
    CHECK(std::abs(c.location.x - gt.location.x) < 1e-6);
    CHECK(std::abs(c.location.y - gt.location.y) < 1e-6);
    CHECK(std::abs(c.location.z - gt.location.z) < 1e-6);
    CHECK(std::abs(wrap_angle(c.yaw - gt.rotation_y)) < 1e-9);
    CHECK(c.dims == gt.dims);
    CHECK(std::abs(decoded[i].label.bbox.x1 - gt.bbox.x1) < 1e-9);
    CHECK(std::abs(decoded[i].label.bbox.y2 - gt.bbox.y2) < 1e-9);
    CHECK(decoded[i].label.score == 1.0);
  }
}

}  // namespace

TEST_CASE("orientation encoding") {
  for (double a = -kPi + 1e-3; a <= kPi; a += 0.01) {
    CHECK(std::abs(wrap_angle(decode_orientation(encode_orientation(a)) - a)) < 1e-12);
  }
  CHECK(decode_orientation(encode_orientation(kPi)) == Approx(kPi));
  const auto h = encode_orientation(0.0);
  CHECK(h[1] == 1.0);
  CHECK(h[5] == 1.0);
  const auto far = encode_orientation(-kPi / 2);
  CHECK(far[1] == 1.0);
  CHECK(far[5] == 0.0);
}

TEST_CASE("quantization_offset") {
  const FeatureGridMeta meta{1242, 375, 4};
  const CenterCell c = quantization_offset({100, 50}, meta);
  CHECK(c.cell == GridCell{25, 12});
  CHECK(c.offset == Vec2{0, 0.5});
  CHECK(c.position(4) == Vec2{100, 50});
  const FeatureGridMeta unit{1242, 375, 1};
  CHECK(quantization_offset({100, 50}, unit).offset == Vec2{0, 0});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x(0, 1242), y(0, 375);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{x(rng), y(rng)};
    const CenterCell q = quantization_offset(p, meta);
    CHECK(q.offset.x >= 0);
    CHECK(q.offset.x < 1);
    CHECK(std::abs(q.position(4).x - p.x) < 1e-12);
    CHECK(std::abs(q.position(4).y - p.y) < 1e-12);
  }
  // edge centers stay on the grid
  CHECK(meta.grid_width() == 311);
  CHECK(meta.grid_height() == 94);
  const CenterCell edge = quantization_offset({1242, 375}, meta);
  CHECK(edge.cell == GridCell{310, 93});
}

TEST_CASE("gaussian heatmap") {
  const FeatureGridMeta meta{200, 120, 4};
  const HeatmapInstance inst{0, {100, 50}, 60, 40};
  const auto one = gaussian_heatmap(std::vector{inst}, meta, 3);
  REQUIRE(one.size() == 3);
  const auto& g = one[0];
  CHECK(g.at(25, 12) == 1.0);
  CHECK(std::count(g.values().begin(), g.values().end(), 1.0) == 1);
  CHECK(*std::max_element(g.values().begin(), g.values().end()) == 1.0);
  CHECK(*std::min_element(g.values().begin(), g.values().end()) >= 0.0);
  CHECK(one[1] == Grid<double>(50, 30, 0.0));

  const double sigma = gaussian_sigma(60, 40, 4);
  const int r = static_cast<int>(std::floor(gaussian_radius(10, 15)));
  CHECK(r >= 1);
  CHECK(sigma == Approx((2.0 * r + 1.0) / 6.0));
  for (int dx = -r; dx <= r; ++dx)
    for (int dy = -r; dy <= r; ++dy)
      CHECK(g.at(25 + dx, 12 + dy) == Approx(std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma))).epsilon(1e-14));
  CHECK(g.at(25 + r + 1, 12) == 0.0);

  const auto two = gaussian_heatmap(std::vector{inst, inst}, meta, 3);
  CHECK(two == one);

  // overlapping splats merge by max
  const HeatmapInstance other{0, {112, 50}, 60, 40};
  const auto merged = gaussian_heatmap(std::vector{inst, other}, meta, 3);
  const auto alone = gaussian_heatmap(std::vector{other}, meta, 3);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 50; ++x) CHECK(merged[0].at(x, y) == std::max(one[0].at(x, y), alone[0].at(x, y)));
}

TEST_CASE("reference areas") {
  const ReferenceAreaConfig full{1.0};
  const BBox2D box{45, 40, 55, 60};
  CHECK(reference_area(box, full) == box);
  const BBox2D ra = reference_area(box, {0.4});
  CHECK(ra.width() == Approx(4));
  CHECK(ra.height() == Approx(8));
  CHECK(ra.center() == Vec2{50, 50});
  const BBox2D point = reference_area(box, {1e-9});
  const FeatureGridMeta meta{200, 120, 4};
  const auto single = rasterize_reference_areas(std::vector<RaInstance>{{box, 10}}, meta, {1e-9});
  CHECK(owned_cells(single, 0).size() == 1);
  CHECK(point.width() < 1e-6);

  // disjoint
  const std::vector<RaInstance> disjoint{{{0, 0, 40, 40}, 20}, {{100, 0, 140, 40}, 10}};
  const auto grid = rasterize_reference_areas(disjoint, meta, full);
  CHECK(grid.at(2, 2) == 0);
  CHECK(grid.at(27, 2) == 1);
  CHECK(grid.at(20, 2) == -1);
  CHECK(owned_cells(grid, 0).size() == 121);

  // nested: nearer wins regardless of order
  const std::vector<RaInstance> nested{{{0, 0, 80, 80}, 40}, {{20, 20, 40, 40}, 10}};
  const auto ng = rasterize_reference_areas(nested, meta, full);
  CHECK(ng.at(7, 7) == 1);
  CHECK(ng.at(1, 1) == 0);
  const std::vector<RaInstance> nested_rev{{{20, 20, 40, 40}, 40}, {{0, 0, 80, 80}, 10}};
  CHECK(rasterize_reference_areas(nested_rev, meta, full).at(7, 7) == 1);

  // ties go to the lower index
  const std::vector<RaInstance> tie{{{0, 0, 40, 40}, 10}, {{20, 20, 60, 60}, 10}};
  const auto tg = rasterize_reference_areas(tie, meta, full);
  CHECK(tg.at(7, 7) == 0);
  CHECK(tg.at(12, 12) == 1);
}

TEST_CASE("ra_aggregate") {
  CHECK(ra_aggregate(std::vector{3.5}) == 3.5);
  CHECK(ra_aggregate(std::vector{1.0, 2.0, 3.0}) == 2.0);
  CHECK(ra_aggregate(std::vector{3.0, 1.0, 2.0}) == 2.0);
  CHECK_THROWS_AS(ra_aggregate(std::vector<double>{}), InputError);
}

TEST_CASE("encode and decode roundtrip on synthetic scenes") {
  for (auto kind : {DepthCodec::Eigen, DepthCodec::SID, DepthCodec::LID, DepthCodec::DepJoint}) {
    for (bool ra : {false, true}) {
      for (int seed = 0; seed < 20; ++seed) {
        SceneSpec spec;
        spec.seed = seed;
        spec.frame_id = seed;
        const Scene scene = generate_scene(spec);
        check_roundtrip(scene.labels, scene.calib, codec(kind, ra));
      }
    }
  }
}

TEST_CASE("empty labels") {
  const FeatureGridMeta meta;
  const FrameTargets t = encode_targets({}, kitti_calibration(), meta, codec(DepthCodec::LID, true));
  CHECK(t.instances.empty());
  CHECK(t.dropped_outside_grid == 0);
  CHECK(t.dropped_depth_range == 0);
  REQUIRE(t.heatmaps.size() == 3);
  CHECK(t.heatmaps[0].width() == 311);
}

TEST_CASE("3D center outside the image is still encoded") {
  const CameraCalibration calib = kitti_calibration();
  const Cuboid3D c{{-3.6, 1.6, 4.0}, {1.5, 1.6, 4.0}, 0.0};
  CHECK(project(calib, cuboid_center(c)).x < 0);
  const ObjectLabel label = label_for(calib, c);
  CHECK(label.bbox.center().x > 0);
  const std::vector<ObjectLabel> labels{label};
  const FrameTargets t = encode_targets(labels, calib, FeatureGridMeta{}, codec(DepthCodec::LID));
  CHECK(t.instances.size() == 1);
  CHECK(t.dropped_outside_grid == 0);
  CHECK(t.instances[0].offset3d.x < -label.bbox.center().x);
  check_roundtrip(labels, calib, codec(DepthCodec::LID));
}

TEST_CASE("drops") {
  const CameraCalibration calib = kitti_calibration();
  ObjectLabel outside = label_for(calib, {{0, 1.6, 20}, {1.5, 1.6, 4}, 0});
  outside.bbox = {1300, 10, 1400, 50};
  ObjectLabel far = label_for(calib, {{0, 1.6, 95}, {1.5, 1.6, 4}, 0});
  ObjectLabel pedestrian = label_for(calib, {{2, 1.6, 20}, {1.7, 0.6, 0.8}, 0});
  pedestrian.class_name = "Pedestrian";
  ObjectLabel tram = pedestrian;
  tram.class_name = "Tram";
  const std::vector<ObjectLabel> labels{outside, far, pedestrian, tram};
  const FrameTargets t = encode_targets(labels, calib, FeatureGridMeta{}, codec(DepthCodec::LID));
  CHECK(t.dropped_outside_grid == 1);
  CHECK(t.dropped_depth_range == 1);
  REQUIRE(t.instances.size() == 1);
  CHECK(t.instances[0].class_id == 1);
  CHECK(t.instances[0].label_index == 2);
  CHECK(encode_targets(labels, calib, FeatureGridMeta{}, codec(DepthCodec::Eigen)).dropped_depth_range == 0);
}

TEST_CASE("hand-built instance decode") {
  CameraCalibration calib;
  calib.P = {{{700, 0, 600, 0}, {0, 700, 180, 0}, {0, 0, 1, 0}}};
  RawInstanceHeads raw;
  raw.cell = {10, 10};
  raw.center_offset = {0.5, 0.5};
  raw.offset3d = {8, -4};
  raw.size = {20, 10};
  raw.depth = EigenHead{-std::log(20.0)};
  raw.dims = {1.5, 1.6, 4.0};
  raw.orientation = encode_orientation(0.3);
  const FeatureGridMeta meta;
  const CodecConfig cfg = codec(DepthCodec::Eigen);
  const DecodedObject obj = decode_instance(raw, calib, meta, cfg);
  const Vec2 c3d = project(calib, cuboid_center(obj.cuboid));
  CHECK(c3d.x == Approx(50).epsilon(1e-12));
  CHECK(c3d.y == Approx(38).epsilon(1e-12));
  CHECK(obj.cuboid.location.z == Approx(20));
  CHECK(obj.label.bbox == BBox2D{32, 37, 52, 47});
  CHECK(obj.label.alpha == Approx(0.3));

  const DecodedObject base = decode_instance(raw, calib, meta, cfg, {.use_offset3d = false});
  const Vec2 c2d = project(calib, cuboid_center(base.cuboid));
  CHECK(c2d.x == Approx(42).epsilon(1e-12));
  CHECK(c2d.y == Approx(42).epsilon(1e-12));

  // codec mismatch
  CHECK_THROWS_AS(decode_instance(raw, calib, meta, codec(DepthCodec::LID)), InputError);
  raw.depth = OrdinalPrediction{std::vector<double>(10, 0.0), 0.0};
  CHECK_THROWS_AS(decode_instance(raw, calib, meta, codec(DepthCodec::LID)), InputError);
}

TEST_CASE("reference-area depth averaging") {
  CameraCalibration calib = kitti_calibration();
  RawInstanceHeads raw;
  raw.cell = {150, 45};
  raw.depth = EigenHead{-std::log(99.0)};
  raw.ra_depth = {EigenHead{-1.0}, EigenHead{-3.0}};
  raw.dims = {1.5, 1.6, 4.0};
  const DecodedObject obj = decode_instance(raw, calib, FeatureGridMeta{}, codec(DepthCodec::Eigen, true));
  CHECK(obj.cuboid.location.z == Approx(std::exp(2.0)));

  const std::vector<DepthHead> ordinal{OrdinalPrediction{{1.0, 0.0}, 0.2}, OrdinalPrediction{{0.0, 0.0}, 0.4}};
  const auto avg = std::get<OrdinalPrediction>(average_depth_heads(ordinal));
  CHECK(avg.probs == std::vector<double>{0.5, 0.0});
  CHECK(avg.residual == Approx(0.3));
  const std::vector<DepthHead> mixed{EigenHead{}, DepJointPrediction{}};
  CHECK_THROWS_AS(average_depth_heads(mixed), InputError);
}
