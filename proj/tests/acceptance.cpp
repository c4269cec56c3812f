// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "center3d/bev_eval.hpp"
#include "center3d/camera_geometry.hpp"
#include "center3d/depth_codec.hpp"
#include "center3d/losses.hpp"
#include "center3d/synth.hpp"
#include "center3d/target_codec.hpp"

using namespace center3d;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

DiscretizationConfig kitti_cfg(Discretization s) { return {1.0, 91.0, 0.0, 80, s}; }

Outcome sid_bin_count() {
  const int bin = bin_index(5.0, kitti_cfg(Discretization::SID)) + 1;
  return {bin == 29, "5 m in SID bin " + std::to_string(bin) + " (1-based)"};
}

Outcome lid_evenness() {
  const double l = depth_to_bin_coordinate(5.0, kitti_cfg(Discretization::LID));
  const int lid_bin = bin_index(5.0, kitti_cfg(Discretization::LID)) + 1;
  const int sid_bin = bin_index(5.0, kitti_cfg(Discretization::SID)) + 1;
  return {lid_bin == 17 && lid_bin < sid_bin && std::abs(l - 16.478) < 1e-3,
          "5 m in LID bin " + std::to_string(lid_bin) + ", l = " + num(l, 8) + ", SID bin " + std::to_string(sid_bin)};
}

Outcome eigen_endpoints() {
  const double a = eigen_transform(-4.0), b = eigen_transform(-5.0);
  return {std::abs(a - 54.60) < 0.01 && std::abs(b - 148.41) < 0.01, "exp(4) = " + num(a, 8) + ", exp(5) = " + num(b, 9)};
}

Outcome codec_roundtrips() {
  double worst_sid = 0, worst_lid = 0, worst_dj = 0;
  const DepJointConfig dj{0.7, 0.3, 0.0, 60.0};
  for (int i = 0; i < 10000; ++i) {
    const double d = 1.0 + 90.0 * i / 9999.0;
    for (auto s : {Discretization::SID, Discretization::LID}) {
      const auto cfg = kitti_cfg(s);
      const double err = std::abs(decode_depth(encode_depth(d, cfg).continuous(), cfg) - d);
      (s == Discretization::SID ? worst_sid : worst_lid) = std::max(s == Discretization::SID ? worst_sid : worst_lid, err);
    }
    const double t = 60.0 * (i + 0.5) / 10000.0;
    worst_dj = std::max(worst_dj, std::abs(depjoint_decode({1, 0, eigen_inverse(t), 0}, dj) - t));
    worst_dj = std::max(worst_dj, std::abs(depjoint_decode({0, 1, 0, eigen_inverse(60.0 - t)}, dj) - t));
  }
  const bool ok = worst_sid < 1e-9 && worst_lid < 1e-9 && worst_dj < 1e-9;
  return {ok, "max error SID " + num(worst_sid, 3) + ", LID " + num(worst_lid, 3) + ", DepJoint " + num(worst_dj, 3)};
}

double max_rel_gradient_error(std::vector<double> x, const std::function<LossResult(const std::vector<double>&)>& f) {
  const double h = 1e-6;
  const auto g = f(x).gradient;
  double worst = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    auto hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    const double numeric = (f(hi).value - f(lo).value) / (2 * h);
    worst = std::max(worst, std::abs(g[i] - numeric) / std::max({1.0, std::abs(g[i]), std::abs(numeric)}));
  }
  return worst;
}

Outcome gradient_suite() {
  Rng rng(2024, RngStream::Test);
  double ord = 0, dj = 0, focal = 0;
  const DepJointConfig cfg{0.7, 0.3, 0.0, 60.0};
  for (int t = 0; t < 100; ++t) {
    const int n = rng.uniform_int(1, 80);
    const int l = rng.uniform_int(0, n);
    std::vector<double> p(n);
    for (auto& v : p) v = rng.uniform(0.02, 0.98);
    ord = std::max(ord, max_rel_gradient_error(p, [&](const std::vector<double>& x) { return ordinal_loss(x, l); }));

    const double d = rng.uniform(0.5, 59.5);
    std::vector<double> q{rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98), rng.uniform(-4.0, 0.0), rng.uniform(-4.0, 0.0)};
    // stay clear of the L1 kinks
    if (std::abs(std::exp(-q[2]) - d) < 1e-2) q[2] += 0.05;
    if (std::abs(std::exp(-q[3]) - (60.0 - d)) < 1e-2) q[3] += 0.05;
    dj = std::max(dj, max_rel_gradient_error(q, [&](const std::vector<double>& x) {
                    return depjoint_loss({x[0], x[1], x[2], x[3]}, d, cfg);
                  }));

    Grid<double> gt(4, 4, 0.0);
    for (auto& v : gt.values()) v = rng.uniform(0.0, 0.95);
    gt.values()[rng.uniform_int(0, 15)] = 1.0;
    std::vector<double> pred(16);
    for (auto& v : pred) v = rng.uniform(0.02, 0.98);
    focal = std::max(focal, max_rel_gradient_error(pred, [&](const std::vector<double>& x) {
                       Grid<double> g(4, 4);
                       g.values() = x;
                       return focal_loss(g, gt);
                     }));
  }
  return {ord < 1e-4 && dj < 1e-4 && focal < 1e-4,
          "max relative error ordinal " + num(ord, 3) + ", depjoint " + num(dj, 3) + ", focal " + num(focal, 3)};
}

Outcome geometry_roundtrip() {
  Rng rng(6, RngStream::Test);
  double worst = 0;
  for (int c = 0; c < 10; ++c) {
    CameraCalibration calib;
    const double f = rng.uniform(400, 1200);
    calib.P = {{{f, rng.uniform(-1, 1), rng.uniform(300, 900), rng.uniform(-60, 60)},
                {0, f * rng.uniform(0.95, 1.05), rng.uniform(100, 300), rng.uniform(-1, 1)},
                {rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), 1, rng.uniform(-0.01, 0.01)}}};
    for (int i = 0; i < 1000; ++i) {
      const Vec2 px{rng.uniform(0, 1242), rng.uniform(0, 375)};
      const Vec3 p = backproject(calib, px, rng.uniform(1, 100));
      worst = std::max(worst, (project(calib, p) - px).norm());
    }
  }
  return {worst < 1e-6, "max reprojection error " + num(worst, 3) + " px over 10^4 points, 10 calibrations"};
}

Outcome rotated_iou_oracle() {
  Rng rng(7, RngStream::Test);
  double worst = 0, worst_iou = 0;
  for (int i = 0; i < 200; ++i) {
    const Cuboid3D a{{rng.uniform(-10, 10), 1.6, rng.uniform(5, 60)},
                     {rng.uniform(1.2, 2.0), rng.uniform(1.4, 2.0), rng.uniform(3.0, 5.0)},
                     rng.uniform(-kPi, kPi)};
    const Cuboid3D b{{a.location.x + rng.uniform(-2, 2), 1.6, a.location.z + rng.uniform(-2, 2)},
                     {rng.uniform(1.2, 2.0), rng.uniform(1.4, 2.0), rng.uniform(3.0, 5.0)},
                     rng.uniform(-kPi, kPi)};
    const double exact = iou_bev(a, b);
    const double err = std::abs(exact - mc_iou(a, b, 1000000, 1000 + i));
    if (err > worst) {
      worst = err;
      worst_iou = exact;
    }
  }
  return {worst < 2e-3, "max |iou_bev - MC| = " + num(worst, 3) + " (at IoU " + num(worst_iou, 3) + "), 200 pairs"};
}

Outcome evaluator_oracle() {
  std::vector<std::vector<ObjectLabel>> gts, dets;
  for (int f = 0; f < 200; ++f) {
    SceneSpec spec;
    spec.seed = 8;
    spec.frame_id = f;
    const Scene s = generate_scene(spec);
    std::vector<ObjectLabel> labels = s.labels;
    // sprinkle neighbor classes and ignore regions
    if (f % 7 == 0 && !labels.empty()) labels[0].class_name = "Van";
    if (f % 11 == 0) {
      ObjectLabel dc;
      dc.class_name = "DontCare";
      dc.occlusion = -1;
      dc.truncation = -1;
      dc.alpha = -10;
      dc.bbox = {600, 150, 700, 200};
      dc.dims = {-1, -1, -1};
      dc.location = {-1000, -1000, -1000};
      dc.rotation_y = -10;
      labels.push_back(dc);
    }
    gts.push_back(labels);
    const NoiseModel noise{3.0, 0.04, 0.1, 0.05, 0.3, 0.15};
    dets.push_back(perturb(s.labels, s.calib, noise, 8, f));
  }
  double worst = 0;
  int runs = 0;
  for (auto metric : kMetrics) {
    for (double thr : {0.5, 0.7}) {
      EvalConfig cfg;
      cfg.metric = metric;
      cfg.iou_threshold = thr;
      const EvalReport r = evaluate(gts, dets, cfg);
      const auto ref = reference_ap(gts, dets, cfg);
      for (int d = 0; d < 3; ++d) worst = std::max(worst, std::abs(r.results[d].ap - ref[d]));
      ++runs;
    }
  }
  return {worst <= 1e-9, "max |AP - reference AP| = " + num(worst, 3) + " over " + std::to_string(runs) +
                             " metric/threshold runs x 3 difficulties, 200 frames"};
}

std::vector<std::vector<ObjectLabel>> decode_frames(const std::vector<Scene>& scenes, const CodecConfig& codec,
                                                    const DecodeOptions& options) {
  std::vector<std::vector<ObjectLabel>> out;
  for (const auto& s : scenes) {
    const FeatureGridMeta meta{s.calib.image_width, s.calib.image_height, 4};
    const auto targets = encode_targets(s.labels, s.calib, meta, codec);
    std::vector<ObjectLabel> frame;
    for (const auto& o : decode_objects(ideal_heads(targets, codec), s.calib, meta, codec, options))
      frame.push_back(o.label);
    out.push_back(frame);
  }
  return out;
}

std::vector<std::vector<ObjectLabel>> labels_of(const std::vector<Scene>& scenes) {
  std::vector<std::vector<ObjectLabel>> out;
  for (const auto& s : scenes) out.push_back(s.labels);
  return out;
}

Outcome zero_noise_pipeline() {
  std::vector<Scene> scenes;
  for (int f = 0; f < 50; ++f) {
    SceneSpec spec;
    spec.seed = 9;
    spec.frame_id = f;
    scenes.push_back(generate_scene(spec));
  }
  CodecConfig codec;
  codec.codec = DepthCodec::LID;
  const auto gts = labels_of(scenes);
  const auto dets = decode_frames(scenes, codec, {});
  double lowest = 1.0;
  for (auto metric : kMetrics) {
    EvalConfig cfg;
    cfg.metric = metric;
    cfg.iou_threshold = 0.7;
    const EvalReport r = evaluate(gts, dets, cfg);
    for (const auto& res : r.results) lowest = std::min(lowest, res.ap);
  }
  return {lowest == 1.0, "lowest AP over 2D/BEV/3D x 3 difficulties = " + num(lowest, 10) + " (50 scenes, IoU 0.7)"};
}

Outcome offset3d_ablation() {
  int bev_lower = 0, box3d_lower = 0, box2d_same = 0;
  double mean_bev_drop = 0, mean_3d_drop = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<Scene> scenes;
    for (int f = 0; f < 5; ++f) {
      SceneSpec spec;
      spec.seed = 1000 + seed;
      spec.frame_id = f;
      spec.depth = {4.0, 15.0};
      spec.lateral = {-10.0, 10.0};
      spec.min_objects = 2;
      spec.max_objects = 5;
      scenes.push_back(generate_scene(spec));
    }
    CodecConfig codec;
    codec.codec = DepthCodec::LID;
    const auto gts = labels_of(scenes);
    const auto with = decode_frames(scenes, codec, {.use_offset3d = true});
    const auto without = decode_frames(scenes, codec, {.use_offset3d = false});
    double ap[3][2];
    for (auto metric : kMetrics) {
      EvalConfig cfg;
      cfg.metric = metric;
      cfg.iou_threshold = 0.7;
      ap[static_cast<int>(metric)][0] = evaluate(gts, with, cfg).at(Difficulty::Moderate).ap;
      ap[static_cast<int>(metric)][1] = evaluate(gts, without, cfg).at(Difficulty::Moderate).ap;
    }
    box2d_same += ap[0][0] == ap[0][1];
    bev_lower += ap[1][1] < ap[1][0];
    box3d_lower += ap[2][1] < ap[2][0];
    mean_bev_drop += (ap[1][0] - ap[1][1]) / seeds;
    mean_3d_drop += (ap[2][0] - ap[2][1]) / seeds;
  }
  const bool ok = bev_lower == seeds && box3d_lower == seeds && box2d_same == seeds;
  return {ok, "seeds with lower AP without offset: BEV " + std::to_string(bev_lower) + "/20, 3D " +
                  std::to_string(box3d_lower) + "/20; 2D unchanged " + std::to_string(box2d_same) +
                  "/20; mean moderate AP drop BEV " + num(mean_bev_drop, 3) + ", 3D " + num(mean_3d_drop, 3)};
}

Outcome ap_hand_cases() {
  const std::vector<ScoredMatch> one{{0.9, true}, {0.8, false}};
  const std::vector<ScoredMatch> two{{0.9, true}};
  const double a = average_precision_11pt(one, 1);
  const double b = average_precision_11pt(two, 2);
  return {a == 1.0 && b == 6.0 / 11.0, "AP = " + num(a, 17) + " and " + num(b, 17) + " (expected 1 and 6/11)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"SID places 5 m in bin 29", sid_bin_count},
      {"LID places 5 m in bin 17", lid_evenness},
      {"Eigen transform endpoints", eigen_endpoints},
      {"Codec roundtrips below 1e-9", codec_roundtrips},
      {"Loss gradients match finite differences", gradient_suite},
      {"Projection/back-projection roundtrip", geometry_roundtrip},
      {"Rotated BEV IoU vs Monte Carlo", rotated_iou_oracle},
      {"Evaluator vs reference AP", evaluator_oracle},
      {"Zero-noise pipeline AP = 1", zero_noise_pipeline},
      {"Offset3D ablation lowers BEV/3D AP only", offset3d_ablation},
      {"11-point AP hand cases", ap_hand_cases},
  };
  int failures = 0;
  int index = 1;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
