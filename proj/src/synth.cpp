#include "center3d/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "center3d/error.hpp"

namespace center3d {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, RngStream stream, std::uint64_t frame_id) {
  return mix_seed(mix_seed(seed ^ (static_cast<std::uint64_t>(stream) << 56)) ^ frame_id);
}

int Rng::uniform_int(int lo, int hi) {
  const double span = static_cast<double>(hi) - lo + 1.0;
  return std::min(hi, lo + static_cast<int>(std::floor(uniform() * span)));
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CameraCalibration kitti_calibration() {
  CameraCalibration c;
  c.P = {{{721.5377, 0.0, 609.5593, 44.85728},
          {0.0, 721.5377, 172.854, 0.2163791},
          {0.0, 0.0, 1.0, 0.002745884}}};
  return c;
}

namespace {

void check_interval(const Interval& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw RangeError(std::string("empty sampling interval: ") + name);
}

double sample(Rng& rng, const Interval& r) { return rng.uniform(r.lo, r.hi); }

struct Placed {
  Cuboid3D cuboid;
  BBox2D amodal;
  BBox2D clipped;
};

bool try_place(Rng& rng, const SceneSpec& spec, Placed& out) {
  Cuboid3D c;
  c.dims = {sample(rng, spec.height), sample(rng, spec.width), sample(rng, spec.length)};
  c.location = {sample(rng, spec.lateral), sample(rng, spec.ground), sample(rng, spec.depth)};
  c.yaw = wrap_angle(sample(rng, spec.yaw));
  for (const auto& corner : cuboid_corners(c)) {
    if (corner.z < 0.5) return false;
  }
  out.cuboid = c;
  out.amodal = amodal_bbox(spec.calib, c, false);
  out.clipped = amodal_bbox(spec.calib, c, true);
  return out.clipped.width() >= 2.0 && out.clipped.height() >= 2.0;
}

double covered_fraction(const BBox2D& box, std::span<const BBox2D> occluders) {
  constexpr int kSteps = 10;
  int covered = 0;
  for (int iy = 0; iy < kSteps; ++iy) {
    for (int ix = 0; ix < kSteps; ++ix) {
      const double x = box.x1 + (ix + 0.5) / kSteps * box.width();
      const double y = box.y1 + (iy + 0.5) / kSteps * box.height();
      for (const auto& o : occluders) {
        if (x >= o.x1 && x <= o.x2 && y >= o.y1 && y <= o.y2) {
          ++covered;
          break;
        }
      }
    }
  }
  return static_cast<double>(covered) / (kSteps * kSteps);
}

}  // namespace

void validate(const SceneSpec& spec) {
  if (spec.min_objects < 0 || spec.max_objects < spec.min_objects) throw RangeError("invalid object count range");
  check_interval(spec.depth, "depth");
  if (!(spec.depth.lo > 0.0)) throw RangeError("depth range must be positive");
  check_interval(spec.lateral, "lateral");
  check_interval(spec.yaw, "yaw");
  check_interval(spec.height, "height");
  check_interval(spec.width, "width");
  check_interval(spec.length, "length");
  check_interval(spec.ground, "ground");
  if (!(spec.height.lo > 0 && spec.width.lo > 0 && spec.length.lo > 0))
    throw RangeError("dimension ranges must be positive");
}

Scene generate_scene(const SceneSpec& spec) {
  validate(spec);
  Rng rng(spec.seed, RngStream::Scene, static_cast<std::uint64_t>(spec.frame_id));
  const int n = rng.uniform_int(spec.min_objects, spec.max_objects);

  std::vector<Placed> placed;
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
      Placed p;
      if (!try_place(rng, spec, p)) continue;
      const bool collides = std::any_of(placed.begin(), placed.end(), [&](const Placed& q) {
        return bev_intersection_area(p.cuboid, q.cuboid) > 0.0;
      });
      if (collides) continue;
      placed.push_back(p);
      break;
    }
  }

  Scene scene;
  scene.calib = spec.calib;
  for (const auto& p : placed) {
    std::vector<BBox2D> nearer;
    for (const auto& q : placed)
      if (q.cuboid.location.z < p.cuboid.location.z) nearer.push_back(q.clipped);
    const double covered = covered_fraction(p.clipped, nearer);

    ObjectLabel l;
    l.class_name = spec.class_name;
    l.truncation = std::clamp(1.0 - p.clipped.area() / p.amodal.area(), 0.0, 1.0);
    l.occlusion = covered < 0.05 ? 0 : (covered < 0.5 ? 1 : 2);
    l.alpha = ry_to_alpha(p.cuboid.yaw, p.cuboid.location.x, p.cuboid.location.z);
    l.bbox = p.clipped;
    l.dims = p.cuboid.dims;
    l.location = p.cuboid.location;
    l.rotation_y = p.cuboid.yaw;
    scene.labels.push_back(l);
  }
  return scene;
}

void validate(const NoiseModel& n) {
  for (double s : {n.center_px_sigma, n.depth_rel_sigma, n.yaw_sigma, n.dim_rel_sigma})
    if (!(s >= 0.0) || !std::isfinite(s)) throw RangeError("noise sigmas must be finite and non-negative");
  for (double r : {n.fp_rate, n.fn_rate})
    if (!(r >= 0.0 && r <= 1.0)) throw RangeError("noise rates must lie in [0, 1]");
}

std::vector<ObjectLabel> perturb(std::span<const ObjectLabel> labels, const CameraCalibration& calib,
                                 const NoiseModel& noise, std::uint64_t seed, int frame_id) {
  validate(noise);
  Rng rng(seed, RngStream::Noise, static_cast<std::uint64_t>(frame_id));
  const double fx = calib.P[0][0];
  const double fy = calib.P[1][1];

  std::vector<ObjectLabel> out;
  for (const auto& gt : labels) {
    if (gt.is_dont_care()) continue;
    // Fixed number of draws per label keeps streams aligned across settings.
    const bool drop = rng.bernoulli(noise.fn_rate);
    const double e_depth = noise.depth_rel_sigma * rng.normal();
    const double e_u = noise.center_px_sigma * rng.normal();
    const double e_v = noise.center_px_sigma * rng.normal();
    const double e_yaw = noise.yaw_sigma * rng.normal();
    const double e_dims[3] = {noise.dim_rel_sigma * rng.normal(), noise.dim_rel_sigma * rng.normal(),
                              noise.dim_rel_sigma * rng.normal()};
    const bool spawn_fp = rng.bernoulli(noise.fp_rate);
    SceneSpec fp_spec;
    fp_spec.calib = calib;
    fp_spec.class_name = gt.class_name;
    Placed fp;
    bool fp_ok = false;
    for (int attempt = 0; attempt < 100 && spawn_fp && !fp_ok; ++attempt) fp_ok = try_place(rng, fp_spec, fp);
    const double fp_u = rng.uniform();

    if (!drop) {
      ObjectLabel det = gt;
      const double z = gt.location.z;
      const double shift_x = e_u * z / fx;
      const double shift_y = e_v * z / fy;
      det.location = (1.0 + e_depth) * gt.location + Vec3{shift_x, shift_y, 0.0};
      det.bbox = {gt.bbox.x1 + e_u, gt.bbox.y1 + e_v, gt.bbox.x2 + e_u, gt.bbox.y2 + e_v};
      det.rotation_y = wrap_angle(gt.rotation_y + e_yaw);
      det.dims = {std::max(0.1, gt.dims.h * (1.0 + e_dims[0])), std::max(0.1, gt.dims.w * (1.0 + e_dims[1])),
                  std::max(0.1, gt.dims.l * (1.0 + e_dims[2]))};
      det.alpha = ry_to_alpha(det.rotation_y, det.location.x, det.location.z);
      const double err = std::abs(e_depth) / 0.05 + std::hypot(e_u, e_v) / 5.0 + std::abs(e_yaw) / 0.2 +
                         (std::abs(e_dims[0]) + std::abs(e_dims[1]) + std::abs(e_dims[2])) / 3.0 / 0.1;
      det.score = std::exp(-err);
      out.push_back(det);
    }
    if (fp_ok) {
      ObjectLabel det;
      det.class_name = gt.class_name;
      det.bbox = fp.clipped;
      det.dims = fp.cuboid.dims;
      det.location = fp.cuboid.location;
      det.rotation_y = fp.cuboid.yaw;
      det.alpha = ry_to_alpha(det.rotation_y, det.location.x, det.location.z);
      det.score = std::exp(-(1.0 + 3.0 * fp_u));
      out.push_back(det);
    }
  }
  return out;
}

namespace {

bool inside_footprint(const Cuboid3D& c, double x, double z) {
  const double dx = x - c.location.x;
  const double dz = z - c.location.z;
  const double cs = std::cos(c.yaw);
  const double sn = std::sin(c.yaw);
  const double lx = cs * dx - sn * dz;
  const double lz = sn * dx + cs * dz;
  return std::abs(lx) <= 0.5 * c.dims.l && std::abs(lz) <= 0.5 * c.dims.w;
}

bool inside_volume(const Cuboid3D& c, double x, double y, double z) {
  return y <= c.location.y && y >= c.location.y - c.dims.h && inside_footprint(c, x, z);
}

}  // namespace

double mc_iou(const Cuboid3D& a, const Cuboid3D& b, int n_samples, std::uint64_t seed, OverlapKind kind) {
  if (n_samples < 1) throw RangeError("mc_iou needs at least one sample");
  double xmin = INFINITY, xmax = -INFINITY, zmin = INFINITY, zmax = -INFINITY;
  for (const Cuboid3D* c : {&a, &b}) {
    const double cs = std::abs(std::cos(c->yaw)), sn = std::abs(std::sin(c->yaw));
    const double rx = 0.5 * (cs * c->dims.l + sn * c->dims.w);
    const double rz = 0.5 * (sn * c->dims.l + cs * c->dims.w);
    xmin = std::min(xmin, c->location.x - rx);
    xmax = std::max(xmax, c->location.x + rx);
    zmin = std::min(zmin, c->location.z - rz);
    zmax = std::max(zmax, c->location.z + rz);
  }
  const double ymin = std::min(a.location.y - a.dims.h, b.location.y - b.dims.h);
  const double ymax = std::max(a.location.y, b.location.y);

  Rng rng(seed, RngStream::MonteCarlo);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double x = rng.uniform(xmin, xmax);
    const double z = rng.uniform(zmin, zmax);
    bool ia = false, ib = false;
    if (kind == OverlapKind::BEV) {
      ia = inside_footprint(a, x, z);
      ib = inside_footprint(b, x, z);
    } else {
      const double y = rng.uniform(ymin, ymax);
      ia = inside_volume(a, x, y, z);
      ib = inside_volume(b, x, y, z);
    }
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const long uni = in_a + in_b - in_both;
  return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

// ---------------------------------------------------------------------------
// Reference evaluator. Deliberately naive; see header.

namespace {

struct P2 {
  double x, z;
};

std::vector<P2> ref_footprint(const ObjectLabel& o) {
  const double c = std::cos(o.rotation_y), s = std::sin(o.rotation_y);
  const double hl = o.dims.l / 2, hw = o.dims.w / 2;
  std::vector<P2> pts;
  const std::pair<double, double> local[4] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  for (auto [a, b] : local) {
    pts.push_back({o.location.x + c * a + s * b, o.location.z - s * a + c * b});
  }
  return pts;
}

double ref_cross(P2 o, P2 a, P2 b) { return (a.x - o.x) * (b.z - o.z) - (a.z - o.z) * (b.x - o.x); }

bool ref_point_in_convex(P2 p, const std::vector<P2>& poly) {
  bool pos = false, neg = false;
  for (size_t i = 0; i < poly.size(); ++i) {
    const double c = ref_cross(poly[i], poly[(i + 1) % poly.size()], p);
    if (c > 1e-12) pos = true;
    if (c < -1e-12) neg = true;
  }
  return !(pos && neg);
}

bool ref_segment_hit(P2 a, P2 b, P2 c, P2 d, P2& hit) {
  const double den = (b.x - a.x) * (d.z - c.z) - (b.z - a.z) * (d.x - c.x);
  if (std::abs(den) < 1e-15) return false;
  const double t = ((c.x - a.x) * (d.z - c.z) - (c.z - a.z) * (d.x - c.x)) / den;
  const double u = ((c.x - a.x) * (b.z - a.z) - (c.z - a.z) * (b.x - a.x)) / den;
  if (t < 0 || t > 1 || u < 0 || u > 1) return false;
  hit = {a.x + t * (b.x - a.x), a.z + t * (b.z - a.z)};
  return true;
}

double ref_intersection_area(const ObjectLabel& A, const ObjectLabel& B) {
  const auto pa = ref_footprint(A);
  const auto pb = ref_footprint(B);
  std::vector<P2> pts;
  for (auto p : pa)
    if (ref_point_in_convex(p, pb)) pts.push_back(p);
  for (auto p : pb)
    if (ref_point_in_convex(p, pa)) pts.push_back(p);
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = 0; j < 4; ++j) {
      P2 h;
      if (ref_segment_hit(pa[i], pa[(i + 1) % 4], pb[j], pb[(j + 1) % 4], h)) pts.push_back(h);
    }
  if (pts.size() < 3) return 0.0;
  double cx = 0, cz = 0;
  for (auto p : pts) cx += p.x, cz += p.z;
  cx /= pts.size();
  cz /= pts.size();
  std::sort(pts.begin(), pts.end(), [&](P2 a, P2 b) {
    return std::atan2(a.z - cz, a.x - cx) < std::atan2(b.z - cz, b.x - cx);
  });
  double area = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const P2 a = pts[i], b = pts[(i + 1) % pts.size()];
    area += a.x * b.z - b.x * a.z;
  }
  area = std::abs(area) / 2;
  return area < 1e-12 ? 0.0 : area;
}

double ref_iou(const ObjectLabel& a, const ObjectLabel& b, Metric metric) {
  if (metric == Metric::Box2D) {
    const double ix = std::max(0.0, std::min(a.bbox.x2, b.bbox.x2) - std::max(a.bbox.x1, b.bbox.x1));
    const double iy = std::max(0.0, std::min(a.bbox.y2, b.bbox.y2) - std::max(a.bbox.y1, b.bbox.y1));
    const double inter = ix * iy;
    const double aa = (a.bbox.x2 - a.bbox.x1) * (a.bbox.y2 - a.bbox.y1);
    const double ab = (b.bbox.x2 - b.bbox.x1) * (b.bbox.y2 - b.bbox.y1);
    return inter > 0 && aa + ab - inter > 0 ? inter / (aa + ab - inter) : 0.0;
  }
  double inter = ref_intersection_area(a, b);
  double ua = a.dims.l * a.dims.w, ub = b.dims.l * b.dims.w;
  if (metric == Metric::Box3D) {
    const double h = std::max(0.0, std::min(a.location.y, b.location.y) -
                                       std::max(a.location.y - a.dims.h, b.location.y - b.dims.h));
    inter *= h;
    ua *= a.dims.h;
    ub *= b.dims.h;
  }
  const double uni = ua + ub - inter;
  return uni > 0 ? std::min(1.0, std::max(0.0, inter / uni)) : 0.0;
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace

std::array<double, 3> reference_ap(std::span<const std::vector<ObjectLabel>> gt_frames,
                                   std::span<const std::vector<ObjectLabel>> det_frames, const EvalConfig& cfg) {
  if (gt_frames.size() != det_frames.size()) throw InputError("frame mismatch");
  const std::string cls = lower(cfg.class_name);
  const std::string neighbor = cls == "car" ? "van" : (cls == "pedestrian" ? "person_sitting" : "");
  std::array<double, 3> result{};

  for (int level = 0; level < 3; ++level) {
    std::vector<std::pair<double, int>> stream;  // (score, 1 = TP / 0 = FP)
    int total_gt = 0;
    for (size_t f = 0; f < gt_frames.size(); ++f) {
      const auto& gts = gt_frames[f];
      const auto& dets = det_frames[f];
      // 0 valid, 1 ignored, 2 dontcare, 3 unrelated
      std::vector<int> kind(gts.size(), 3);
      for (size_t g = 0; g < gts.size(); ++g) {
        const std::string c = lower(gts[g].class_name);
        if (c == cls) {
          const double h = gts[g].bbox.y2 - gts[g].bbox.y1;
          bool ok = false;
          for (int k = 0; k <= level; ++k) {
            ok = ok || (h >= cfg.thresholds.min_height[k] && gts[g].occlusion <= cfg.thresholds.max_occlusion[k] &&
                        gts[g].truncation <= cfg.thresholds.max_truncation[k]);
          }
          kind[g] = ok ? 0 : 1;
          if (ok) ++total_gt;
        } else if (cfg.ignore_neighbor_classes && !neighbor.empty() && c == neighbor) {
          kind[g] = 1;
        } else if (gts[g].class_name == "DontCare") {
          kind[g] = 2;
        }
      }
      std::vector<size_t> idx;
      for (size_t d = 0; d < dets.size(); ++d)
        if (lower(dets[d].class_name) == cls) idx.push_back(d);
      // insertion sort, stable, by descending score
      for (size_t i = 1; i < idx.size(); ++i)
        for (size_t j = i; j > 0 && dets[idx[j]].score.value() > dets[idx[j - 1]].score.value(); --j)
          std::swap(idx[j], idx[j - 1]);

      std::vector<char> used(gts.size(), 0);
      for (size_t d : idx) {
        const auto& det = dets[d];
        bool resolved = false;
        for (int want = 0; want <= 1 && !resolved; ++want) {
          int pick = -1;
          double pick_iou = 0;
          for (size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || kind[g] != want) continue;
            const double v = ref_iou(det, gts[g], cfg.metric);
            if (v >= cfg.iou_threshold && v > pick_iou) pick = static_cast<int>(g), pick_iou = v;
          }
          if (pick >= 0) {
            used[pick] = 1;
            if (want == 0) stream.push_back({*det.score, 1});
            resolved = true;
          }
        }
        if (resolved) continue;
        bool dc = false;
        for (size_t g = 0; g < gts.size(); ++g) {
          if (kind[g] != 2) continue;
          const double ix = std::min(det.bbox.x2, gts[g].bbox.x2) - std::max(det.bbox.x1, gts[g].bbox.x1);
          const double iy = std::min(det.bbox.y2, gts[g].bbox.y2) - std::max(det.bbox.y1, gts[g].bbox.y1);
          const double area = (det.bbox.x2 - det.bbox.x1) * (det.bbox.y2 - det.bbox.y1);
          if (ix > 0 && iy > 0 && area > 0 && ix * iy / area >= cfg.iou_threshold) dc = true;
        }
        if (!dc) stream.push_back({*det.score, 0});
      }
    }
    if (total_gt == 0) continue;
    std::stable_sort(stream.begin(), stream.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    const size_t n = stream.size();
    std::vector<int> tps(n);
    std::vector<double> prec(n);
    int tp = 0;
    for (size_t i = 0; i < n; ++i) {
      tp += stream[i].second;
      tps[i] = tp;
      prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    // right-to-left running max gives the interpolated precision
    for (size_t i = n; i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
    double sum = 0;
    for (int k = 0; k <= 10; ++k) {
      size_t i = 0;
      while (i < n && 10L * tps[i] < static_cast<long>(k) * total_gt) ++i;
      sum += i < n ? prec[i] : 0.0;
    }
    result[level] = sum / 11.0;
  }
  return result;
}

}  // namespace center3d
