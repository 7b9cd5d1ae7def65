#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corridornav/geometry.hpp"

namespace corridornav {

// 8-bit image, row-major, blue/green/red channel order.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* at(int x, int y) { return pixels.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
};

// Two floor markers on the CBL. The far one sits at the corridor end; the
// near one is the closest CBL point still visible from the current pose.
struct MarkerPlacement {
  Vec3 far_marker;
  Vec3 near_marker;
};

struct PoseOutOfCorridor : std::runtime_error {
  explicit PoseOutOfCorridor(const char* what) : std::runtime_error(what) {}
};

// Marker squares are this many meters on a side, drawn in the reserved
// marker red that the procedural textures never produce.
constexpr double kMarkerSizeM = 0.15;

// Classifier for the reserved marker hue. The renderer guarantees that only
// marker pixels satisfy it.
inline bool is_marker_red(uint8_t b, uint8_t g, uint8_t r) {
  return r >= 140 && r >= 2 * g && r >= 2 * b;
}

// Ray-cast of the five corridor planes with a seeded procedural texture and
// distance falloff. Deterministic: identical inputs give bit-identical
// frames. Markers, when given, are drawn as red squares at their projected
// positions (no connecting line). Throws PoseOutOfCorridor.
Frame render_frame(const CorridorSpec& corridor, const Pose& pose,
                   const CameraModel& camera,
                   const std::optional<MarkerPlacement>& markers = std::nullopt);

// Far marker at the corridor end; near marker at the closest CBL point whose
// projection is inside the frame with a 5 px margin and at least 20 px from
// the far marker's projection. nullopt when no placement is visible.
std::optional<MarkerPlacement> place_markers(const CorridorSpec& corridor,
                                             const Pose& pose,
                                             const CameraModel& camera);

// Resample a rectilinear frame through the equidistant fisheye, and back.
// Pixels that map outside the source or the fisheye field of view are black.
Frame apply_fisheye(const Frame& frame, const CameraModel& camera);
Frame rectify_fisheye(const Frame& frame, const CameraModel& camera);

// Bilinear resample (pixel-center convention, edge-clamped).
Frame resize_frame(const Frame& frame, int width, int height);

// Binary PPM (P6) io.
void save_ppm(const Frame& frame, const std::string& path);
Frame load_ppm(const std::string& path);

}  // namespace corridornav
