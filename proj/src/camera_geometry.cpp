#include "center3d/camera_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "center3d/error.hpp"

namespace center3d {

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void validate_cuboid(const Cuboid3D& c) {
  const bool ok = c.dims.h > 0 && c.dims.w > 0 && c.dims.l > 0 && std::isfinite(c.dims.h) &&
                  std::isfinite(c.dims.w) && std::isfinite(c.dims.l);
  if (!ok) throw RangeError("cuboid dimensions must be positive and finite");
}

double homogeneous_scale(const CameraCalibration& calib, const Vec3& p) {
  const auto& r = calib.P[2];
  return r[0] * p.x + r[1] * p.y + r[2] * p.z + r[3];
}

Vec2 project(const CameraCalibration& calib, const Vec3& p) {
  const double w = homogeneous_scale(calib, p);
  if (std::abs(w) < kProjectionEpsilon) {
    throw GeometryError("degenerate projection: homogeneous scale is zero");
  }
  const auto& P = calib.P;
  return {(P[0][0] * p.x + P[0][1] * p.y + P[0][2] * p.z + P[0][3]) / w,
          (P[1][0] * p.x + P[1][1] * p.y + P[1][2] * p.z + P[1][3]) / w};
}

Vec3 backproject(const CameraCalibration& calib, const Vec2& pixel, double depth) {
  // u * (P2 . p) = P0 . p  and  v * (P2 . p) = P1 . p, with p = (X, Y, Z, 1).
  const auto& P = calib.P;
  const double u = pixel.x;
  const double v = pixel.y;
  const double a00 = P[0][0] - u * P[2][0];
  const double a01 = P[0][1] - u * P[2][1];
  const double a10 = P[1][0] - v * P[2][0];
  const double a11 = P[1][1] - v * P[2][1];
  const double b0 = u * (P[2][2] * depth + P[2][3]) - P[0][2] * depth - P[0][3];
  const double b1 = v * (P[2][2] * depth + P[2][3]) - P[1][2] * depth - P[1][3];
  const double det = a00 * a11 - a01 * a10;
  if (std::abs(det) < kProjectionEpsilon) {
    std::ostringstream msg;
    msg << "singular back-projection system: determinant " << det;
    throw GeometryError(msg.str());
  }
  return {(b0 * a11 - a01 * b1) / det, (a00 * b1 - a10 * b0) / det, depth};
}

std::array<Vec3, 8> cuboid_corners(const Cuboid3D& c) {
  const double hl = 0.5 * c.dims.l;
  const double hw = 0.5 * c.dims.w;
  const double cs = std::cos(c.yaw);
  const double sn = std::sin(c.yaw);
  constexpr double kSx[4] = {1, -1, -1, 1};
  constexpr double kSz[4] = {1, 1, -1, -1};
  std::array<Vec3, 8> out;
  for (int face = 0; face < 2; ++face) {
    const double y = face == 0 ? 0.0 : -c.dims.h;
    for (int k = 0; k < 4; ++k) {
      const double x = kSx[k] * hl;
      const double z = kSz[k] * hw;
      out[face * 4 + k] = c.location + Vec3{cs * x + sn * z, y, -sn * x + cs * z};
    }
  }
  return out;
}

Vec3 cuboid_center(const Cuboid3D& c) { return c.location + Vec3{0.0, -0.5 * c.dims.h, 0.0}; }

BBox2D amodal_bbox(const CameraCalibration& calib, const Cuboid3D& cuboid, bool clip) {
  BBox2D box{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& corner : cuboid_corners(cuboid)) {
    if (!(homogeneous_scale(calib, corner) > 0.0)) {
      throw GeometryError("cuboid corner behind the camera");
    }
    const Vec2 px = project(calib, corner);
    box.x1 = std::min(box.x1, px.x);
    box.y1 = std::min(box.y1, px.y);
    box.x2 = std::max(box.x2, px.x);
    box.y2 = std::max(box.y2, px.y);
  }
  if (clip) {
    const double xmax = calib.image_width - 1.0;
    const double ymax = calib.image_height - 1.0;
    box.x1 = std::clamp(box.x1, 0.0, xmax);
    box.x2 = std::clamp(box.x2, 0.0, xmax);
    box.y1 = std::clamp(box.y1, 0.0, ymax);
    box.y2 = std::clamp(box.y2, 0.0, ymax);
  }
  return box;
}

double alpha_to_ry(double alpha, double x, double z) {
  if (x == 0.0 && z == 0.0) throw GeometryError("observation ray is zero");
  return wrap_angle(alpha + std::atan2(x, z));
}

double ry_to_alpha(double ry, double x, double z) {
  if (x == 0.0 && z == 0.0) throw GeometryError("observation ray is zero");
  return wrap_angle(ry - std::atan2(x, z));
}

Cuboid3D cuboid_from_label(const ObjectLabel& label) {
  return {label.location, label.dims, label.rotation_y};
}

}  // namespace center3d
