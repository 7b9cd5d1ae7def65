#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace corridornav {

struct Vec2 {
  double u = 0.0;
  double v = 0.0;
};

struct Vec3 {
  double x = 0.0;  // lateral, positive toward the right wall
  double y = 0.0;  // up
  double z = 0.0;  // along the corridor, 0 at the entrance
};

// Corridor world. The central bisector line (CBL) is the floor segment
// x = 0, y = 0, z in [0, length].
struct CorridorSpec {
  double width = 2.0;    // wall-to-wall, meters
  double length = 20.0;  // meters
  double height = 3.0;   // floor-to-ceiling, meters
  uint64_t texture_seed = 0;

  bool valid() const { return width > 0.0 && length > 0.0 && height > 0.0; }
};

// UAV pose. x is the signed lateral offset from the CBL (positive = right of
// the CBL); yaw is positive for a left tilt (counterclockwise from above).
struct Pose {
  double x = 0.0;
  double z = 0.0;
  double h = 1.0;
  double yaw = 0.0;
};

inline bool pose_inside(const Pose& p, const CorridorSpec& c) {
  return std::abs(p.x) < c.width / 2.0 && p.z >= 0.0 && p.z <= c.length &&
         p.h > 0.0 && p.h < c.height && std::abs(p.yaw) < M_PI / 2.0;
}

// Equidistant fisheye: r_distorted = f * theta.
struct FisheyeParams {
  double fov = 92.0 * M_PI / 180.0;  // full field of view, radians
};

struct CameraModel {
  int image_width = 320;
  int image_height = 180;
  double horizontal_fov = 92.0 * M_PI / 180.0;
  std::optional<FisheyeParams> fisheye;

  CameraModel() = default;
  CameraModel(int w, int h) : image_width(w), image_height(h) {}
  CameraModel(int w, int h, double fov) : image_width(w), image_height(h), horizontal_fov(fov) {}

  double focal() const { return (image_width / 2.0) / std::tan(horizontal_fov / 2.0); }
  Vec2 principal() const { return {image_width / 2.0, image_height / 2.0}; }
  bool valid() const {
    return image_width > 0 && image_height > 0 && horizontal_fov > 0.0 &&
           horizontal_fov < M_PI;
  }
};

// Two distinct image points; p1 is the lower one (larger v) where ordering
// matters.
struct ImageLine {
  Vec2 p1;
  Vec2 p2;
};

struct DegeneratePose : std::runtime_error {
  explicit DegeneratePose(const char* what) : std::runtime_error(what) {}
};

// Pinhole projection from a level camera at `pose` (no pitch/roll; yaw only).
// World points are in the corridor frame. Returns nullopt when the point is
// at or behind the camera plane. Image v grows downward.
std::optional<Vec2> project_point(const CameraModel& camera, const Pose& pose,
                                  const Vec3& world_point);

// Angle between the projected CBL and the bottom image boundary, evaluated at
// yaw = 0 regardless of the pose's actual tilt (the labels are tilt-invariant
// by convention). pi/2 when centered, acute left of the CBL, obtuse right.
// Throws DegeneratePose when |x| >= width/2.
double cbl_angle(const Pose& pose, const CorridorSpec& corridor,
                 const CameraModel& camera);

// Normalized u of the projected CBL at the vertical-midline row, in [0, 1].
// 0.5 when aligned; > 0.5 for a left tilt, < 0.5 for a right tilt. Returns
// nullopt (LineOutOfFrame) when the crossing falls outside a 2x frame margin.
// Throws DegeneratePose when |x| >= width/2.
std::optional<double> cbl_distance(const Pose& pose, const CorridorSpec& corridor,
                                   const CameraModel& camera);

// Equidistant fisheye warps about the principal point. Both return nullopt
// when the ray angle exceeds the fisheye field of view, and throw
// std::invalid_argument when the camera carries no fisheye parameters.
std::optional<Vec2> fisheye_distort(const Vec2& point, const CameraModel& camera);
std::optional<Vec2> fisheye_undistort(const Vec2& point, const CameraModel& camera);

}  // namespace corridornav
