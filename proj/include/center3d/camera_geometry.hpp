#pragma once

#include <array>

#include "center3d/kitti_io.hpp"
#include "center3d/types.hpp"

namespace center3d {

/// Object pose in the rectified camera frame (x right, y down, z forward).
/// `location` is the bottom-face center; yaw rotates about the camera y axis.
struct Cuboid3D {
  Vec3 location;
  Dimensions dims;
  double yaw = 0.0;

  friend bool operator==(const Cuboid3D&, const Cuboid3D&) = default;
};

/// 2D-box center, projected volumetric center, and the offset between them.
struct CenterPair {
  Vec2 c2d;
  Vec2 c3d;
  Vec2 offset;
};

inline constexpr double kProjectionEpsilon = 1e-12;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Throws RangeError unless all dimensions are positive and finite.
void validate_cuboid(const Cuboid3D& cuboid);

/// Homogeneous scale of a camera-frame point, i.e. the third row of P applied
/// to (X, Y, Z, 1).
double homogeneous_scale(const CameraCalibration& calib, const Vec3& point);

/// Pinhole projection. Throws GeometryError when the homogeneous scale is
/// within kProjectionEpsilon of zero.
Vec2 project(const CameraCalibration& calib, const Vec3& point);

/// Inverse of project() for a known camera-frame depth Z (not the homogeneous
/// scale). Solves the 2x2 system in (X, Y) that remains once Z is fixed, so
/// the returned z equals `depth` exactly.
Vec3 backproject(const CameraCalibration& calib, const Vec2& pixel, double depth);

/// The eight cuboid corners. Order: bottom face (y = Y) first, then the top
/// face (y = Y - h) in the same order. Each face runs through the local
/// (x, z) corners (+l/2, +w/2), (-l/2, +w/2), (-l/2, -w/2), (+l/2, -w/2)
/// before rotation by yaw and translation to `location`.
std::array<Vec3, 8> cuboid_corners(const Cuboid3D& cuboid);

/// Volumetric center: location shifted up by h/2.
Vec3 cuboid_center(const Cuboid3D& cuboid);

/// Bounding rectangle of the projected corners. With `clip`, the result is
/// intersected with [0, W-1] x [0, H-1]. Throws GeometryError if any corner
/// has non-positive homogeneous scale.
BBox2D amodal_bbox(const CameraCalibration& calib, const Cuboid3D& cuboid, bool clip);

inline Vec2 offset3d_apply(const Vec2& c2d, const Vec2& offset) { return c2d + offset; }

/// Observation angle -> global yaw: ry = alpha + atan2(X, Z), wrapped.
double alpha_to_ry(double alpha, double x, double z);
double ry_to_alpha(double ry, double x, double z);

Cuboid3D cuboid_from_label(const ObjectLabel& label);

}  // namespace center3d
