#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "corridornav/labeler.hpp"
#include "corridornav/render.hpp"

using namespace corridornav;

namespace {

const CorridorSpec kCorridor{};
const CameraModel kCamera{320, 180};

struct Centroid {
  double u = 0.0;
  double v = 0.0;
  int count = 0;
};

Centroid red_centroid(const Frame& f) {
  Centroid c;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const uint8_t* px = f.at(x, y);
      if (is_marker_red(px[0], px[1], px[2])) {
        c.u += x + 0.5;
        c.v += y + 0.5;
        ++c.count;
      }
    }
  if (c.count > 0) {
    c.u /= c.count;
    c.v /= c.count;
  }
  return c;
}

int red_count(const Frame& f) { return red_centroid(f).count; }

}  // namespace

TEST_CASE("render_frame is deterministic bit for bit") {
  const Pose pose{0.3, 1.0, 1.0, 0.1};
  const auto markers = place_markers(kCorridor, pose, kCamera);
  const Frame a = render_frame(kCorridor, pose, kCamera, markers);
  const Frame b = render_frame(kCorridor, pose, kCamera, markers);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("render_frame rejects poses outside the corridor") {
  CHECK_THROWS_AS(render_frame(kCorridor, {1.2, 0.0, 1.0, 0.0}, kCamera),
                  PoseOutOfCorridor);
  CHECK_THROWS_AS(render_frame(kCorridor, {0.0, -1.0, 1.0, 0.0}, kCamera),
                  PoseOutOfCorridor);
}

TEST_CASE("unmarked frames contain no marker red") {
  for (double x : {-0.6, 0.0, 0.6}) {
    const Frame f = render_frame(kCorridor, {x, 0.0, 1.0, 0.2 * x}, kCamera);
    CHECK(red_count(f) == 0);
  }
}

TEST_CASE("changing the texture seed changes the frame but not the markers") {
  const Pose pose{0.0, 0.0, 1.0, 0.0};
  const auto markers = place_markers(kCorridor, pose, kCamera);
  REQUIRE(markers.has_value());
  CorridorSpec other = kCorridor;
  other.texture_seed = 99;
  const Frame a = render_frame(kCorridor, pose, kCamera, markers);
  const Frame b = render_frame(other, pose, kCamera, markers);
  CHECK(a.pixels != b.pixels);
  const auto la = detect_markers(a);
  const auto lb = detect_markers(b);
  REQUIRE(la.has_value());
  REQUIRE(lb.has_value());
  CHECK(la->p1.u == doctest::Approx(lb->p1.u).epsilon(1e-2));
  CHECK(la->p2.v == doctest::Approx(lb->p2.v).epsilon(1e-2));
}

TEST_CASE("place_markers pins the far marker to the corridor end on the CBL") {
  const Pose pose{0.2, 3.0, 1.0, 0.05};
  const auto m = place_markers(kCorridor, pose, kCamera);
  REQUIRE(m.has_value());
  CHECK(m->far_marker.x == 0.0);
  CHECK(m->far_marker.y == 0.0);
  CHECK(m->far_marker.z == doctest::Approx(kCorridor.length).epsilon(1e-12));
  CHECK(m->near_marker.x == 0.0);
  CHECK(m->near_marker.y == 0.0);
  CHECK(m->near_marker.z > pose.z);
  CHECK(m->near_marker.z < kCorridor.length);

  const auto near_px = project_point(kCamera, pose, m->near_marker);
  const auto far_px = project_point(kCamera, pose, m->far_marker);
  REQUIRE(near_px.has_value());
  REQUIRE(far_px.has_value());
  CHECK(near_px->u >= 5.0);
  CHECK(near_px->u <= kCamera.image_width - 5.0);
  CHECK(near_px->v >= 5.0);
  CHECK(near_px->v <= kCamera.image_height - 5.0);
  const double sep = std::hypot(near_px->u - far_px->u, near_px->v - far_px->v);
  CHECK(sep >= 20.0);
}

TEST_CASE("place_markers returns nullopt when the CBL leaves the view") {
  const double yaw80 = 80.0 * M_PI / 180.0;
  CHECK_FALSE(place_markers(kCorridor, {0.0, 0.0, 1.0, yaw80}, kCamera).has_value());
  CHECK_FALSE(place_markers(kCorridor, {0.0, 0.0, 1.0, -yaw80}, kCamera).has_value());
}

TEST_CASE("rendered markers land within a pixel of their projections") {
  const Pose pose{0.0, 0.0, 1.0, 0.0};
  const auto m = place_markers(kCorridor, pose, kCamera);
  REQUIRE(m.has_value());
  const auto line = detect_markers(render_frame(kCorridor, pose, kCamera, m));
  REQUIRE(line.has_value());
  // Centered pose: both centroids sit on the central column.
  CHECK(std::abs(line->p1.u - 160.0) < 1.0);
  CHECK(std::abs(line->p2.u - 160.0) < 1.0);
  const auto near_px = project_point(kCamera, pose, m->near_marker);
  REQUIRE(near_px.has_value());
  CHECK(std::abs(line->p1.u - near_px->u) < 1.0);
  CHECK(std::abs(line->p1.v - near_px->v) < 1.0);
}

TEST_CASE("fisheye warp and rectification round trip") {
  CameraModel camera{320, 180};
  camera.fisheye = FisheyeParams{};
  double total_mae = 0.0;
  for (int i = 0; i < 10; ++i) {
    CorridorSpec c = kCorridor;
    c.texture_seed = 1000 + i;
    const Pose pose{0.1 * (i - 5), 0.5 * i, 1.0, 0.02 * (i - 5)};
    const Frame rect = render_frame(c, pose, camera);
    const Frame back = rectify_fisheye(apply_fisheye(rect, camera), camera);
    REQUIRE(back.width == rect.width);
    REQUIRE(back.height == rect.height);
    double err = 0.0;
    long n = 0;
    const int x0 = rect.width / 10, x1 = rect.width - rect.width / 10;
    const int y0 = rect.height / 10, y1 = rect.height - rect.height / 10;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        for (int ch = 0; ch < 3; ++ch) {
          err += std::abs(int(rect.at(x, y)[ch]) - int(back.at(x, y)[ch]));
          ++n;
        }
    total_mae += err / n;
  }
  CHECK(total_mae / 10.0 < 5.0);
}

TEST_CASE("fisheye frame keeps distinct marker columns for an offset pose") {
  CameraModel camera{320, 180};
  camera.fisheye = FisheyeParams{};
  const Pose pose{0.3, 0.0, 1.0, 0.0};
  const MarkerPlacement m{{0.0, 0.0, 20.0}, {0.0, 0.0, 2.0}};
  const Frame fish = apply_fisheye(render_frame(kCorridor, pose, camera, m), camera);
  const auto line = detect_markers(fish);
  REQUIRE(line.has_value());
  CHECK(std::abs(line->p1.u - line->p2.u) > 2.0);
}

TEST_CASE("an off-center vertical line bows in the fisheye image") {
  CameraModel camera{320, 180};
  camera.fisheye = FisheyeParams{};
  const double u0 = 160.0 + camera.focal() * std::tan(15.0 * M_PI / 180.0);
  const auto top = fisheye_distort({u0, 30.0}, camera);
  const auto mid = fisheye_distort({u0, 90.0}, camera);
  const auto bot = fisheye_distort({u0, 150.0}, camera);
  REQUIRE(top.has_value());
  REQUIRE(mid.has_value());
  REQUIRE(bot.has_value());
  const double chord_u = (top->u + bot->u) / 2.0;
  CHECK(std::abs(mid->u - chord_u) > 1.0);
}

TEST_CASE("resize_frame preserves flat images and halves dimensions") {
  Frame flat(8, 6);
  for (auto& p : flat.pixels) p = 77;
  const Frame small = resize_frame(flat, 4, 3);
  CHECK(small.width == 4);
  CHECK(small.height == 3);
  for (auto p : small.pixels) CHECK(p == 77);
  const Frame same = resize_frame(flat, 8, 6);
  CHECK(same.pixels == flat.pixels);
}

TEST_CASE("PPM round trip is lossless") {
  const Frame f = render_frame(kCorridor, {0.1, 0.0, 1.0, 0.0}, kCamera);
  const auto path = std::filesystem::temp_directory_path() / "corridornav_test_roundtrip.ppm";
  save_ppm(f, path.string());
  const Frame g = load_ppm(path.string());
  CHECK(g.width == f.width);
  CHECK(g.height == f.height);
  CHECK(g.pixels == f.pixels);
  std::filesystem::remove(path);
}
