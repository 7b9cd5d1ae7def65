#include "corridornav/geometry.hpp"

#include <algorithm>

namespace corridornav {

namespace {

constexpr double kMinForward = 1e-12;

void check_pose(const Pose& pose, const CorridorSpec& corridor) {
  if (!(pose.h > 0.0)) throw DegeneratePose("camera height must be positive");
  if (std::abs(pose.x) >= corridor.width / 2.0)
    throw DegeneratePose("UAV outside corridor walls");
}

}  // namespace

std::optional<Vec2> project_point(const CameraModel& camera, const Pose& pose,
                                  const Vec3& world_point) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double dx = world_point.x - pose.x;
  const double dy = world_point.y - pose.h;
  const double dz = world_point.z - pose.z;

  // Basis of a level camera: right = (c, 0, s), up = (0, 1, 0),
  // forward = (-s, 0, c). Positive yaw turns the view to the left.
  const double cam_right = dx * c + dz * s;
  const double cam_up = dy;
  const double cam_fwd = -dx * s + dz * c;
  if (cam_fwd <= kMinForward) return std::nullopt;

  const double f = camera.focal();
  const Vec2 pp = camera.principal();
  return Vec2{pp.u + f * cam_right / cam_fwd, pp.v - f * cam_up / cam_fwd};
}

double cbl_angle(const Pose& pose, const CorridorSpec& corridor,
                 const CameraModel& camera) {
  (void)camera;  // the focal length cancels out of the image-line direction
  check_pose(pose, corridor);
  // The CBL projects (at yaw = 0) onto the image line with standard-orientation
  // direction (x, h); measured against the bottom boundary so that the UAV
  // left of the line gives an acute angle.
  const double angle = std::atan2(pose.h, -pose.x);
  return std::clamp(angle, 0.0, M_PI);
}

std::optional<double> cbl_distance(const Pose& pose, const CorridorSpec& corridor,
                                   const CameraModel& camera) {
  check_pose(pose, corridor);
  const double f = camera.focal();
  const double w = camera.image_width;
  const Vec2 pp = camera.principal();
  // The projected CBL meets the midline row at the vanishing point of the
  // corridor axis, u = cx + f*tan(yaw), for every lateral offset.
  const double u_mid = pp.u + f * std::tan(pose.yaw);
  if (u_mid < pp.u - w || u_mid > pp.u + w) return std::nullopt;  // LineOutOfFrame
  return std::clamp(u_mid / w, 0.0, 1.0);
}

namespace {

const FisheyeParams& require_fisheye(const CameraModel& camera) {
  if (!camera.fisheye)
    throw std::invalid_argument("camera has no fisheye parameters");
  return *camera.fisheye;
}

constexpr double kFovSlack = 1e-9;

}  // namespace

std::optional<Vec2> fisheye_distort(const Vec2& point, const CameraModel& camera) {
  const FisheyeParams& fe = require_fisheye(camera);
  const double f = camera.focal();
  const Vec2 pp = camera.principal();
  const double du = point.u - pp.u;
  const double dv = point.v - pp.v;
  const double r_u = std::hypot(du, dv);
  if (r_u < 1e-12) return point;  // principal point is a fixed point
  const double theta = std::atan(r_u / f);
  if (theta > fe.fov / 2.0 + kFovSlack) return std::nullopt;
  const double scale = f * theta / r_u;
  return Vec2{pp.u + du * scale, pp.v + dv * scale};
}

std::optional<Vec2> fisheye_undistort(const Vec2& point, const CameraModel& camera) {
  const FisheyeParams& fe = require_fisheye(camera);
  const double f = camera.focal();
  const Vec2 pp = camera.principal();
  const double du = point.u - pp.u;
  const double dv = point.v - pp.v;
  const double r_d = std::hypot(du, dv);
  if (r_d < 1e-12) return point;
  const double theta = r_d / f;
  if (theta > fe.fov / 2.0 + kFovSlack || theta >= M_PI / 2.0) return std::nullopt;
  const double scale = f * std::tan(theta) / r_d;
  return Vec2{pp.u + du * scale, pp.v + dv * scale};
}

}  // namespace corridornav
