#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "center3d/bev_eval.hpp"
#include "center3d/camera_geometry.hpp"
#include "center3d/kitti_io.hpp"

namespace center3d {

/// Independent random streams. Each purpose draws from its own engine so
/// changing one consumer never shifts another's sequence.
enum class RngStream : std::uint64_t { Scene = 1, Noise = 2, MonteCarlo = 3, Test = 4 };

/// SplitMix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for (base seed, stream, frame id).
std::uint64_t derive_seed(std::uint64_t seed, RngStream stream, std::uint64_t frame_id = 0);

/// Portable random source: std::mt19937_64 (fully specified by the standard)
/// with hand-written transforms, since the standard distributions are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, RngStream stream, std::uint64_t frame_id = 0)
      : engine_(derive_seed(seed, stream, frame_id)) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  /// Standard normal via Box-Muller (one variate per call).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Representative KITTI P2 (focal 721.54 px, principal point 609.56/172.85).
CameraCalibration kitti_calibration();

struct SceneSpec {
  std::uint64_t seed = 0;
  int frame_id = 0;
  int min_objects = 1;
  int max_objects = 8;
  Interval depth{5.0, 80.0};
  Interval lateral{-15.0, 15.0};
  Interval yaw{-std::numbers::pi, std::numbers::pi};
  Interval height{1.4, 1.7};
  Interval width{1.5, 1.9};
  Interval length{3.4, 4.6};
  /// Y of the bottom face (camera height above ground).
  Interval ground{1.5, 1.8};
  std::string class_name = "Car";
  CameraCalibration calib = kitti_calibration();
  int max_retries = 1000;
};

void validate(const SceneSpec& spec);

struct Scene {
  std::vector<ObjectLabel> labels;
  CameraCalibration calib;
};

/// Rejection-samples non-intersecting cuboids that are fully in front of the
/// camera and at least partly visible. bbox2d is the clipped amodal box,
/// truncation the share of the amodal box outside the image, and occlusion
/// 0/1/2 for < 5%, < 50%, >= 50% of the box covered by nearer objects.
/// Objects that cannot be placed within max_retries are skipped.
Scene generate_scene(const SceneSpec& spec);

struct NoiseModel {
  double center_px_sigma = 0.0;
  double depth_rel_sigma = 0.0;
  double yaw_sigma = 0.0;
  double dim_rel_sigma = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
};

void validate(const NoiseModel& noise);

/// Noisy detections. Each non-DontCare label is dropped with probability
/// fn_rate, otherwise jittered and scored exp(-e) where
///   e = |depth error|/(0.05 d) + |pixel shift|/5 + |yaw error|/0.2
///       + mean |relative dim error|/0.1.
/// Each label also spawns a random false positive with probability fp_rate,
/// scored exp(-(1 + 3u)).
std::vector<ObjectLabel> perturb(std::span<const ObjectLabel> labels, const CameraCalibration& calib,
                                 const NoiseModel& noise, std::uint64_t seed, int frame_id = 0);

enum class OverlapKind { BEV, Volume };

/// Monte-Carlo IoU: uniform samples over the bounding box of both shapes.
double mc_iou(const Cuboid3D& a, const Cuboid3D& b, int n_samples, std::uint64_t seed,
              OverlapKind kind = OverlapKind::BEV);

/// Brute-force AP per difficulty (easy, moderate, hard). Shares no code with
/// the evaluator: its own IoUs (vertex-collection polygon intersection),
/// difficulty test, matching and interpolation.
std::array<double, 3> reference_ap(std::span<const std::vector<ObjectLabel>> gt_frames,
                                   std::span<const std::vector<ObjectLabel>> det_frames, const EvalConfig& cfg);

}  // namespace center3d
