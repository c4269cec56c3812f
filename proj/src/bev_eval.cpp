#include "center3d/bev_eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "center3d/error.hpp"

namespace center3d {
namespace {

// Intersections below this area are treated as empty.
constexpr double kMinPolygonArea = 1e-12;

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_neighbor_class(std::string_view eval_class, std::string_view gt_class) {
  return (iequals(eval_class, "Car") && iequals(gt_class, "Van")) ||
         (iequals(eval_class, "Pedestrian") && iequals(gt_class, "Person_sitting"));
}

using Polygon = std::vector<Vec2>;

Polygon footprint(const Cuboid3D& c) {
  const auto corners = cuboid_corners(c);
  Polygon poly;
  for (int k = 0; k < 4; ++k) poly.push_back({corners[k].x, corners[k].z});
  return poly;
}

double signed_area(const Polygon& p) {
  double a = 0.0;
  for (size_t i = 0, n = p.size(); i < n; ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % n];
    a += u.x * v.y - v.x * u.y;
  }
  return 0.5 * a;
}

double cross(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// Sutherland-Hodgman: clip `subject` by every edge of the convex,
// counter-clockwise `clip` polygon.
Polygon clip_convex(Polygon subject, const Polygon& clip) {
  for (size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    Polygon out;
    for (size_t i = 0; i < subject.size(); ++i) {
      const Vec2& p = subject[i];
      const Vec2& q = subject[(i + 1) % subject.size()];
      const double dp = cross(a, b, p);
      const double dq = cross(a, b, q);
      if (dp >= 0) out.push_back(p);
      if ((dp >= 0) != (dq >= 0)) {
        const double t = dp / (dp - dq);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

Polygon ccw(Polygon p) {
  if (signed_area(p) < 0) std::reverse(p.begin(), p.end());
  return p;
}

double vertical_overlap(const Cuboid3D& a, const Cuboid3D& b) {
  const double top = std::max(a.location.y - a.dims.h, b.location.y - b.dims.h);
  const double bottom = std::min(a.location.y, b.location.y);
  return std::max(0.0, bottom - top);
}

}  // namespace

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Moderate: return "moderate";
    case Difficulty::Hard: return "hard";
    case Difficulty::Ignored: return "ignored";
  }
  return "?";
}

const char* to_string(Metric m) {
  switch (m) {
    case Metric::Box2D: return "2d";
    case Metric::BEV: return "bev";
    case Metric::Box3D: return "3d";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  if (iequals(name, "2d")) return Metric::Box2D;
  if (iequals(name, "bev")) return Metric::BEV;
  if (iequals(name, "3d")) return Metric::Box3D;
  throw InputError("unknown metric '" + std::string(name) + "' (expected 2d, bev or 3d)");
}

void validate(const EvalConfig& cfg) {
  if (!(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0))
    throw RangeError("IoU threshold must lie in (0, 1]");
}

Difficulty assign_difficulty(const ObjectLabel& label, double bbox_height_px, const DifficultyThresholds& t) {
  for (size_t k = 0; k < 3; ++k) {
    if (bbox_height_px >= t.min_height[k] && label.occlusion <= t.max_occlusion[k] &&
        label.truncation <= t.max_truncation[k]) {
      return static_cast<Difficulty>(k);
    }
  }
  return Difficulty::Ignored;
}

bool counts_for(Difficulty assigned, Difficulty level) {
  return assigned != Difficulty::Ignored && static_cast<int>(assigned) <= static_cast<int>(level);
}

double iou_2d(const BBox2D& a, const BBox2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double bev_intersection_area(const Cuboid3D& a, const Cuboid3D& b) {
  const Polygon inter = clip_convex(ccw(footprint(a)), ccw(footprint(b)));
  if (inter.size() < 3) return 0.0;
  const double area = std::abs(signed_area(inter));
  return area < kMinPolygonArea ? 0.0 : area;
}

double iou_bev(const Cuboid3D& a, const Cuboid3D& b) {
  const double inter = bev_intersection_area(a, b);
  const double uni = a.dims.l * a.dims.w + b.dims.l * b.dims.w - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double iou_3d(const Cuboid3D& a, const Cuboid3D& b) {
  const double inter = bev_intersection_area(a, b) * vertical_overlap(a, b);
  const double va = a.dims.l * a.dims.w * a.dims.h;
  const double vb = b.dims.l * b.dims.w * b.dims.h;
  const double uni = va + vb - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double label_iou(const ObjectLabel& a, const ObjectLabel& b, Metric metric) {
  switch (metric) {
    case Metric::Box2D: return iou_2d(a.bbox, b.bbox);
    case Metric::BEV: return iou_bev(cuboid_from_label(a), cuboid_from_label(b));
    case Metric::Box3D: return iou_3d(cuboid_from_label(a), cuboid_from_label(b));
  }
  return 0.0;
}

FrameMatches match_detections(std::span<const ObjectLabel> gts, std::span<const ObjectLabel> dets,
                              Difficulty level, const EvalConfig& cfg) {
  enum class Role { Valid, Ignored, DontCare, Other };
  std::vector<Role> roles;
  roles.reserve(gts.size());
  FrameMatches out;
  for (const auto& gt : gts) {
    Role role = Role::Other;
    if (iequals(gt.class_name, cfg.class_name)) {
      const Difficulty d = assign_difficulty(gt, gt.bbox.height(), cfg.thresholds);
      role = counts_for(d, level) ? Role::Valid : Role::Ignored;
    } else if (cfg.ignore_neighbor_classes && is_neighbor_class(cfg.class_name, gt.class_name)) {
      role = Role::Ignored;
    } else if (gt.is_dont_care()) {
      role = Role::DontCare;
    }
    if (role == Role::Valid) ++out.num_gt;
    roles.push_back(role);
  }

  std::vector<size_t> order;
  for (size_t i = 0; i < dets.size(); ++i) {
    if (!iequals(dets[i].class_name, cfg.class_name)) continue;
    if (!dets[i].score) throw InputError("detection without score");
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return *dets[a].score > *dets[b].score; });

  std::vector<bool> taken(gts.size(), false);
  auto best_match = [&](const ObjectLabel& det, Role wanted) -> long {
    long best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || roles[g] != wanted) continue;
      const double iou = label_iou(det, gts[g], cfg.metric);
      if (iou >= cfg.iou_threshold && iou > best_iou) {
        best = static_cast<long>(g);
        best_iou = iou;
      }
    }
    return best;
  };

  int tp = 0;
  for (size_t i : order) {
    const ObjectLabel& det = dets[i];
    long g = best_match(det, Role::Valid);
    if (g >= 0) {
      taken[g] = true;
      out.matches.push_back({*det.score, true});
      ++tp;
      continue;
    }
    g = best_match(det, Role::Ignored);
    if (g >= 0) {
      taken[g] = true;
      continue;
    }
    // Share of the detection's 2D box covered by a DontCare region.
    bool in_dont_care = false;
    for (size_t k = 0; k < gts.size() && !in_dont_care; ++k) {
      if (roles[k] != Role::DontCare) continue;
      const BBox2D& r = gts[k].bbox;
      const double iw = std::min(det.bbox.x2, r.x2) - std::max(det.bbox.x1, r.x1);
      const double ih = std::min(det.bbox.y2, r.y2) - std::max(det.bbox.y1, r.y1);
      const double area = det.bbox.area();
      in_dont_care = iw > 0 && ih > 0 && area > 0 && iw * ih / area >= cfg.iou_threshold;
    }
    if (!in_dont_care) out.matches.push_back({*det.score, false});
  }
  out.fn = out.num_gt - tp;
  return out;
}

std::vector<PrPoint> pr_curve(std::span<const ScoredMatch> stream, int num_gt) {
  std::vector<PrPoint> curve;
  curve.reserve(stream.size());
  int tp = 0;
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].tp) ++tp;
    const double recall = num_gt > 0 ? static_cast<double>(tp) / num_gt : 0.0;
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(i + 1)});
  }
  return curve;
}

double average_precision_11pt(std::span<const ScoredMatch> stream, int num_gt) {
  if (num_gt <= 0) return 0.0;
  // best[k]: highest precision among prefixes whose recall reaches k/10.
  // Recall tp/num_gt >= k/10 is tested as 10*tp >= k*num_gt to stay exact.
  std::array<double, 11> best{};
  int tp = 0;
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].tp) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    for (int k = 0; k <= 10; ++k) {
      if (10L * tp >= static_cast<long>(k) * num_gt) best[k] = std::max(best[k], precision);
    }
  }
  double sum = 0.0;
  for (double p : best) sum += p;
  return sum / 11.0;
}

EvalReport evaluate(std::span<const std::vector<ObjectLabel>> gt_frames,
                    std::span<const std::vector<ObjectLabel>> det_frames, const EvalConfig& cfg) {
  validate(cfg);
  if (gt_frames.size() != det_frames.size()) {
    throw InputError("frame mismatch: " + std::to_string(gt_frames.size()) + " ground-truth frames vs " +
                     std::to_string(det_frames.size()) + " detection frames");
  }
  EvalReport report;
  report.metric = cfg.metric;
  report.iou_threshold = cfg.iou_threshold;
  report.class_name = cfg.class_name;
  for (Difficulty level : kDifficulties) {
    std::vector<ScoredMatch> stream;
    DifficultyResult& res = report.results[static_cast<size_t>(level)];
    for (size_t f = 0; f < gt_frames.size(); ++f) {
      const FrameMatches m = match_detections(gt_frames[f], det_frames[f], level, cfg);
      stream.insert(stream.end(), m.matches.begin(), m.matches.end());
      res.num_gt += m.num_gt;
      res.fn += m.fn;
    }
    std::stable_sort(stream.begin(), stream.end(),
                     [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
    for (const auto& m : stream) (m.tp ? res.tp : res.fp) += 1;
    res.ap = average_precision_11pt(stream, res.num_gt);
    res.pr_curve = pr_curve(stream, res.num_gt);
  }
  return report;
}

}  // namespace center3d
