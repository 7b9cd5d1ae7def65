#include "corridornav/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "corridornav/rng.hpp"

namespace corridornav {

namespace {

enum Plane { kFloor = 0, kCeiling, kLeftWall, kRightWall, kEndWall };

struct Hit {
  double t = 0.0;
  Plane plane = kFloor;
  double a = 0.0;  // surface coordinates for texturing
  double b = 0.0;
};

// Per-plane base gray levels; markers own the red band, textures stay gray
// with a slight cool tint.
constexpr double kBaseLevel[5] = {120.0, 185.0, 150.0, 158.0, 135.0};
constexpr double kNoiseAmp = 24.0;
constexpr double kTexCell = 0.1;  // meters

std::array<uint8_t, 3> shade(Plane plane, double a, double b, double dist,
                             uint64_t seed) {
  const int64_t ca = static_cast<int64_t>(std::floor(a / kTexCell));
  const int64_t cb = static_cast<int64_t>(std::floor(b / kTexCell));
  const double n = hash01(seed, static_cast<uint64_t>(plane),
                          static_cast<uint64_t>(ca), static_cast<uint64_t>(cb));
  const double falloff = 1.0 / (1.0 + 0.05 * dist);
  const double v = std::clamp((kBaseLevel[plane] + (n - 0.5) * kNoiseAmp) * falloff, 8.0, 255.0);
  const auto q = [](double x) { return static_cast<uint8_t>(std::lround(std::clamp(x, 0.0, 255.0))); };
  return {q(v), q(v * 0.97), q(v * 0.92)};  // b, g, r
}

bool best_hit(const CorridorSpec& c, const Vec3& origin, const Vec3& dir, Hit* out) {
  bool found = false;
  Hit best;
  best.t = 1e30;
  const double hw = c.width / 2.0;

  auto consider = [&](double t, Plane plane, double a, double b) {
    if (t > 1e-9 && t < best.t) {
      best = {t, plane, a, b};
      found = true;
    }
  };

  if (dir.y < -1e-12) {  // floor y = 0
    const double t = -origin.y / dir.y;
    const double x = origin.x + t * dir.x, z = origin.z + t * dir.z;
    if (std::abs(x) <= hw && z >= 0.0 && z <= c.length) consider(t, kFloor, x, z);
  }
  if (dir.y > 1e-12) {  // ceiling y = height
    const double t = (c.height - origin.y) / dir.y;
    const double x = origin.x + t * dir.x, z = origin.z + t * dir.z;
    if (std::abs(x) <= hw && z >= 0.0 && z <= c.length) consider(t, kCeiling, x, z);
  }
  if (dir.x < -1e-12) {  // left wall x = -width/2
    const double t = (-hw - origin.x) / dir.x;
    const double y = origin.y + t * dir.y, z = origin.z + t * dir.z;
    if (y >= 0.0 && y <= c.height && z >= 0.0 && z <= c.length) consider(t, kLeftWall, z, y);
  }
  if (dir.x > 1e-12) {  // right wall x = +width/2
    const double t = (hw - origin.x) / dir.x;
    const double y = origin.y + t * dir.y, z = origin.z + t * dir.z;
    if (y >= 0.0 && y <= c.height && z >= 0.0 && z <= c.length) consider(t, kRightWall, z, y);
  }
  if (dir.z > 1e-12) {  // end wall z = length
    const double t = (c.length - origin.z) / dir.z;
    const double x = origin.x + t * dir.x, y = origin.y + t * dir.y;
    if (std::abs(x) <= hw && y >= 0.0 && y <= c.height) consider(t, kEndWall, x, y);
  }
  // The entrance (z = 0 plane) is open; rays leaving through it stay black.
  *out = best;
  return found;
}

// Overlap length of [lo, lo+1) with [a, b], for edge coverage.
double span_overlap(double lo, double a, double b) {
  return std::clamp(std::min(b, lo + 1.0) - std::max(a, lo), 0.0, 1.0);
}

void draw_marker(Frame& frame, const CameraModel& camera, const Pose& pose,
                 const Vec3& marker) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double dx = marker.x - pose.x, dz = marker.z - pose.z;
  const double cam_fwd = -dx * s + dz * c;
  if (cam_fwd <= 0.05) return;
  const auto p = project_point(camera, pose, marker);
  if (!p) return;
  // Image-space square with a minimum half-size so distant markers still
  // rasterize to a detectable blob. Edges are coverage-blended, which lets
  // the labeler recover the center to well under a pixel.
  const double half = std::max(1.5, camera.focal() * (kMarkerSizeM / 2.0) / cam_fwd);
  const int x0 = static_cast<int>(std::floor(p->u - half));
  const int x1 = static_cast<int>(std::floor(p->u + half));
  const int y0 = static_cast<int>(std::floor(p->v - half));
  const int y1 = static_cast<int>(std::floor(p->v + half));
  for (int y = std::max(0, y0); y <= std::min(frame.height - 1, y1); ++y) {
    const double cov_y = span_overlap(y, p->v - half, p->v + half);
    for (int x = std::max(0, x0); x <= std::min(frame.width - 1, x1); ++x) {
      const double cov = cov_y * span_overlap(x, p->u - half, p->u + half);
      if (cov <= 0.0) continue;
      uint8_t* px = frame.at(x, y);
      px[0] = static_cast<uint8_t>(std::lround(px[0] * (1.0 - cov)));
      px[1] = static_cast<uint8_t>(std::lround(px[1] * (1.0 - cov)));
      px[2] = static_cast<uint8_t>(std::lround(px[2] * (1.0 - cov) + 255.0 * cov));
    }
  }
}

}  // namespace

Frame render_frame(const CorridorSpec& corridor, const Pose& pose,
                   const CameraModel& camera,
                   const std::optional<MarkerPlacement>& markers) {
  if (!pose_inside(pose, corridor))
    throw PoseOutOfCorridor("render_frame: pose outside corridor");

  Frame frame(camera.image_width, camera.image_height);
  const double f = camera.focal();
  const Vec2 pp = camera.principal();
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const Vec3 origin{pose.x, pose.h, pose.z};

  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const double rx = (x + 0.5 - pp.u) / f;   // camera-right component
      const double ry = (pp.v - (y + 0.5)) / f; // camera-up component
      // world direction = rx*right + ry*up + 1*forward
      const Vec3 dir{rx * c - s, ry, rx * s + c};
      Hit hit;
      if (best_hit(corridor, origin, dir, &hit)) {
        const double dist = hit.t * std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
        const auto bgr = shade(hit.plane, hit.a, hit.b, dist, corridor.texture_seed);
        uint8_t* px = frame.at(x, y);
        px[0] = bgr[0];
        px[1] = bgr[1];
        px[2] = bgr[2];
      }
    }
  }

  if (markers) {
    draw_marker(frame, camera, pose, markers->far_marker);
    draw_marker(frame, camera, pose, markers->near_marker);
  }
  return frame;
}

std::optional<MarkerPlacement> place_markers(const CorridorSpec& corridor,
                                             const Pose& pose,
                                             const CameraModel& camera) {
  if (!pose_inside(pose, corridor)) return std::nullopt;

  constexpr double kEdgeMarginPx = 5.0;
  constexpr double kMinSeparationPx = 20.0;
  const double w = camera.image_width, h = camera.image_height;

  auto in_frame = [&](const Vec2& p) {
    return p.u >= kEdgeMarginPx && p.u <= w - kEdgeMarginPx &&
           p.v >= kEdgeMarginPx && p.v <= h - kEdgeMarginPx;
  };

  const Vec3 far{0.0, 0.0, corridor.length};
  const auto far_px = project_point(camera, pose, far);
  if (!far_px || !in_frame(*far_px)) return std::nullopt;

  // March the near candidate away from the camera; the first visible CBL
  // point wins.
  constexpr double kStep = 0.05;
  for (double z = pose.z + 0.2; z < corridor.length; z += kStep) {
    const Vec3 cand{0.0, 0.0, z};
    const auto p = project_point(camera, pose, cand);
    if (!p || !in_frame(*p)) continue;
    if (std::hypot(p->u - far_px->u, p->v - far_px->v) < kMinSeparationPx) continue;
    return MarkerPlacement{far, cand};
  }
  return std::nullopt;
}

namespace {

std::array<double, 3> sample_bilinear(const Frame& src, double u, double v) {
  // u, v are continuous image coordinates; pixel centers at (i + 0.5).
  const double fx = u - 0.5, fy = v - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0, ay = fy - y0;
  std::array<double, 3> out{0, 0, 0};
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int x = std::clamp(x0 + dx, 0, src.width - 1);
      const int y = std::clamp(y0 + dy, 0, src.height - 1);
      const double wgt = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      const uint8_t* px = src.at(x, y);
      for (int ch = 0; ch < 3; ++ch) out[ch] += wgt * px[ch];
    }
  }
  return out;
}

Frame remap(const Frame& src, const CameraModel& camera,
            std::optional<Vec2> (*inverse)(const Vec2&, const CameraModel&)) {
  Frame out(src.width, src.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto sp = inverse(Vec2{x + 0.5, y + 0.5}, camera);
      if (!sp) continue;
      if (sp->u < 0.0 || sp->u > src.width || sp->v < 0.0 || sp->v > src.height) continue;
      const auto bgr = sample_bilinear(src, sp->u, sp->v);
      uint8_t* px = out.at(x, y);
      for (int ch = 0; ch < 3; ++ch)
        px[ch] = static_cast<uint8_t>(std::lround(std::clamp(bgr[ch], 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace

Frame apply_fisheye(const Frame& frame, const CameraModel& camera) {
  // Output pixel q holds the rectilinear content at undistort(q).
  return remap(frame, camera, &fisheye_undistort);
}

Frame rectify_fisheye(const Frame& frame, const CameraModel& camera) {
  return remap(frame, camera, &fisheye_distort);
}

Frame resize_frame(const Frame& frame, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize_frame: bad dims");
  if (width == frame.width && height == frame.height) return frame;
  Frame out(width, height);
  const double sx = static_cast<double>(frame.width) / width;
  const double sy = static_cast<double>(frame.height) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto bgr = sample_bilinear(frame, (x + 0.5) * sx, (y + 0.5) * sy);
      uint8_t* px = out.at(x, y);
      for (int ch = 0; ch < 3; ++ch)
        px[ch] = static_cast<uint8_t>(std::lround(std::clamp(bgr[ch], 0.0, 255.0)));
    }
  }
  return out;
}

void save_ppm(const Frame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels.data()),
            static_cast<std::streamsize>(frame.pixels.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

Frame load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("not a P6 ppm: " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("bad ppm header: " + path);
  in.get();  // single whitespace after header
  Frame frame(w, h);
  in.read(reinterpret_cast<char*>(frame.pixels.data()),
          static_cast<std::streamsize>(frame.pixels.size()));
  if (!in) throw std::runtime_error("short read: " + path);
  return frame;
}

}  // namespace corridornav
