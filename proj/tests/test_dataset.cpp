#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "corridornav/dataset.hpp"
#include "corridornav/labeler.hpp"

using namespace corridornav;

namespace {

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sample_grid yields 10 stations x 9 poses for the default corridor") {
  const CorridorSpec corridor{};
  const auto poses = sample_grid(corridor, default_capture_grid(corridor));
  CHECK(poses.size() == 90);
  for (const auto& p : poses) {
    CHECK(std::abs(p.x) < corridor.width / 2.0);
    CHECK(p.h == 1.0);
    CHECK(p.z >= 0.0);
    CHECK(p.z < corridor.length);
  }
  // Station-major ordering: first nine poses share z = 0.
  for (int i = 0; i < 9; ++i) CHECK(poses[i].z == 0.0);
  CHECK(poses[9].z == 2.0);
}

TEST_CASE("sample_grid validates spacing and offsets") {
  const CorridorSpec corridor{};
  CaptureGrid grid = default_capture_grid(corridor);
  grid.station_spacing = 25.0;
  CHECK_THROWS_AS(sample_grid(corridor, grid), EmptyGrid);
  grid = default_capture_grid(corridor);
  grid.lateral_offsets = {-1.0, 0.0, 1.0};
  CHECK_THROWS_AS(sample_grid(corridor, grid), std::invalid_argument);
}

TEST_CASE("preprocess applies the channel normalization") {
  Frame frame(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      frame.at(x, y)[0] = 255;  // blue
      frame.at(x, y)[1] = 0;
      frame.at(x, y)[2] = 128;
    }
  PreprocessConfig cfg;
  cfg.target_width = 4;
  cfg.target_height = 4;
  const auto t = preprocess(frame, cfg);
  CHECK(t.c == 3);
  CHECK(t.h == 4);
  CHECK(t.w == 4);
  CHECK(t.at(0, 0, 0) == doctest::Approx((1.0 - 0.406) / 0.225).epsilon(1e-12));
  CHECK(t.at(0, 0, 0) == doctest::Approx(2.640).epsilon(1e-3));
  CHECK(t.at(1, 0, 0) == doctest::Approx(-0.456 / 0.224).epsilon(1e-12));
  CHECK(t.at(2, 0, 0) == doctest::Approx((128.0 / 255 - 0.485) / 0.229).epsilon(1e-12));
}

TEST_CASE("preprocess maps the channel mean to zero and is invertible") {
  Frame frame(4, 4);
  const double blue_mean = 0.406 * 255.0;  // 103.53
  for (auto& p : frame.pixels) p = 0;
  PreprocessConfig cfg;
  cfg.target_width = 4;
  cfg.target_height = 4;

  // All-zero frame: per-channel constants -mu/sigma.
  auto t = preprocess(frame, cfg);
  CHECK(t.at(0, 1, 1) == doctest::Approx(-0.406 / 0.225).epsilon(1e-12));
  CHECK(t.at(1, 1, 1) == doctest::Approx(-0.456 / 0.224).epsilon(1e-12));
  CHECK(t.at(2, 1, 1) == doctest::Approx(-0.485 / 0.229).epsilon(1e-12));

  // Nearest byte to the blue mean maps close to zero.
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) frame.at(x, y)[0] = uint8_t(std::lround(blue_mean));
  t = preprocess(frame, cfg);
  CHECK(std::abs(t.at(0, 0, 0)) < (0.5 / 255.0) / 0.225 + 1e-12);

  // Affine invertibility within one byte step.
  for (int byte : {0, 7, 103, 200, 255}) {
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) frame.at(x, y)[1] = uint8_t(byte);
    t = preprocess(frame, cfg);
    const double recovered = (t.at(1, 2, 2) * 0.224 + 0.456) * 255.0;
    CHECK(std::abs(recovered - byte) < 1.0 / 255.0);
  }
}

TEST_CASE("generate produces labeled, split, cross-checked records") {
  const auto dir = fresh_dir("corridornav_test_gen");
  std::vector<CorridorSpec> corridors;
  for (int i = 0; i < 5; ++i) corridors.push_back({2.0 + 0.1 * i, 12.0, 3.0, 40u + i});
  const CaptureGrid grid;  // adapt_offsets rewrites the laterals per corridor
  const CameraModel camera{80, 45};
  const auto result = generate(corridors, grid, camera, dir.string());

  // 6 stations x 9 poses x 5 corridors, minus discards.
  CHECK(result.records.size() <= 270);
  CHECK(result.records.size() + result.discarded_angle_poses == 270);

  std::set<int> train_ids, test_ids;
  int with_distance = 0;
  for (const auto& rec : result.records) {
    (rec.split == "test" ? test_ids : train_ids).insert(rec.corridor);
    CHECK(rec.angle >= 0.0);
    CHECK(rec.angle <= M_PI);
    CHECK(std::filesystem::exists(dir / rec.frame));
    const CorridorSpec& c = corridors[rec.corridor];
    const double closed = cbl_angle(rec.pose, c, CameraModel{320, 180});
    CHECK(std::abs(rec.angle - closed) < 0.02);
    if (rec.distance) {
      ++with_distance;
      CHECK(rec.lateral == 1);
      CHECK(rec.pose.x == 0.0);
      const auto closed_d = cbl_distance(rec.pose, c, CameraModel{320, 180});
      REQUIRE(closed_d.has_value());
      CHECK(std::abs(*rec.distance - *closed_d) < 0.01);
    }
  }
  CHECK(with_distance > 0);
  CHECK(with_distance <= 90);

  // Corridor split: i % 4 == 3 held out, disjoint by construction.
  for (int id : test_ids) CHECK(id % 4 == 3);
  for (int id : train_ids) CHECK(id % 4 != 3);

  // Loaded frames carry the actual (tilted) view at the regressor size.
  const Frame f = load_ppm((dir / result.records[0].frame).string());
  CHECK(f.width == 80);
  CHECK(f.height == 45);

  std::filesystem::remove_all(dir);
}

TEST_CASE("angle labels are shared across tilts within a station lateral") {
  const auto dir = fresh_dir("corridornav_test_gen_tilt");
  const std::vector<CorridorSpec> corridors{{2.0, 8.0, 3.0, 5u}};
  const auto result = generate(corridors, CaptureGrid{}, CameraModel{80, 45}, dir.string());
  REQUIRE(result.records.size() >= 9);
  for (size_t i = 0; i + 2 < result.records.size(); i += 3) {
    const auto& a = result.records[i];
    const auto& b = result.records[i + 1];
    const auto& c = result.records[i + 2];
    if (a.station == b.station && a.lateral == b.lateral && b.station == c.station &&
        b.lateral == c.lateral) {
      CHECK(a.angle == b.angle);
      CHECK(b.angle == c.angle);
      CHECK(a.pose.yaw != c.pose.yaw);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("generate is deterministic and the manifest round-trips") {
  const auto dir1 = fresh_dir("corridornav_test_det1");
  const auto dir2 = fresh_dir("corridornav_test_det2");
  const auto corridors = make_corridor_fleet(3, 123);
  const CameraModel camera{80, 45};
  const auto r1 = generate(corridors, CaptureGrid{}, camera, dir1.string());
  const auto r2 = generate(corridors, CaptureGrid{}, camera, dir2.string());
  REQUIRE(r1.records.size() == r2.records.size());
  for (size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].id == r2.records[i].id);
    CHECK(r1.records[i].angle == r2.records[i].angle);
    CHECK(r1.records[i].distance.has_value() == r2.records[i].distance.has_value());
  }
  const Frame f1 = load_ppm((dir1 / r1.records[5].frame).string());
  const Frame f2 = load_ppm((dir2 / r2.records[5].frame).string());
  CHECK(f1.pixels == f2.pixels);

  save_manifest(r1.records, (dir1 / "manifest.jsonl").string());
  const auto loaded = load_manifest((dir1 / "manifest.jsonl").string());
  REQUIRE(loaded.size() == r1.records.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == r1.records[i].id);
    CHECK(loaded[i].split == r1.records[i].split);
    CHECK(loaded[i].frame == r1.records[i].frame);
    CHECK(loaded[i].angle == r1.records[i].angle);
    CHECK(loaded[i].pose.x == r1.records[i].pose.x);
    CHECK(loaded[i].pose.yaw == r1.records[i].pose.yaw);
    if (r1.records[i].distance) {
      REQUIRE(loaded[i].distance.has_value());
      CHECK(*loaded[i].distance == *r1.records[i].distance);
    } else {
      CHECK_FALSE(loaded[i].distance.has_value());
    }
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("make_corridor_fleet is deterministic and in range") {
  const auto a = make_corridor_fleet(8, 99);
  const auto b = make_corridor_fleet(8, 99);
  const auto c = make_corridor_fleet(8, 100);
  REQUIRE(a.size() == 8);
  bool any_diff = false;
  for (size_t i = 0; i < 8; ++i) {
    CHECK(a[i].width == b[i].width);
    CHECK(a[i].texture_seed == b[i].texture_seed);
    CHECK(a[i].width >= 1.8);
    CHECK(a[i].width <= 2.6);
    CHECK(a[i].length >= 16.0);
    CHECK(a[i].length <= 24.0);
    CHECK(a[i].height >= 2.6);
    CHECK(a[i].height <= 3.4);
    if (a[i].width != c[i].width) any_diff = true;
  }
  CHECK(any_diff);
}
