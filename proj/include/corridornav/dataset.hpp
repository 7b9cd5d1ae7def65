#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corridornav/geometry.hpp"
#include "corridornav/nn.hpp"
#include "corridornav/render.hpp"

namespace corridornav {

// 3x3 capture pattern per station: {left, center, right} lateral offset times
// {left, straight, right} tilt, all at a fixed capture height.
struct CaptureGrid {
  double station_spacing = 2.0;
  std::array<double, 3> lateral_offsets{-0.8, 0.0, 0.8};
  std::array<double, 3> tilts{-0.2617993877991494, 0.0, 0.2617993877991494};
  double capture_height = 1.0;
};

// Offsets reach to 0.2 m from each wall; tilts are +/-15 degrees.
CaptureGrid default_capture_grid(const CorridorSpec& corridor);

struct EmptyGrid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Station-major, then lateral, then tilt. floor(length/spacing) stations.
// Throws EmptyGrid when the spacing exceeds the corridor length and
// std::invalid_argument when an offset reaches a wall.
std::vector<Pose> sample_grid(const CorridorSpec& corridor, const CaptureGrid& grid);

struct PreprocessConfig {
  std::array<double, 3> means{0.406, 0.456, 0.485};  // BGR order
  std::array<double, 3> stds{0.225, 0.224, 0.229};
  int target_width = 80;
  int target_height = 45;
};

// (pixel/255 - mean_c) / std_c into a planar BGR tensor, bilinearly
// resampling first when the frame dims differ from the target dims.
nn::Tensor preprocess(const Frame& frame, const PreprocessConfig& config);

struct ManifestRecord {
  std::string id;
  int corridor = 0;
  int station = 0;
  int lateral = 0;  // index into CaptureGrid::lateral_offsets
  int tilt = 0;     // index into CaptureGrid::tilts
  std::string split;  // "train" | "test"
  std::string frame;  // path relative to the manifest's directory
  Pose pose;
  double angle = 0.0;                  // radians, every record
  std::optional<double> distance;      // unit interval, center-lateral records only
};

struct GenerateOptions {
  CameraModel bisector_camera{320, 180};  // labeling renders
  bool save_bisector_frames = false;      // debug artifacts, large
  // Replace the grid's lateral offsets with +/-(width/2 - 0.2) per corridor,
  // so one grid serves a fleet of varying widths.
  bool adapt_offsets = true;
};

struct GenerateResult {
  std::vector<ManifestRecord> records;
  int discarded_angle_poses = 0;     // poses dropped: no usable angle label
  int discarded_distance_labels = 0; // center poses left without a distance label
};

// Renders actual frames through `camera`, derives labels from marker renders
// through options.bisector_camera, and writes frames/*.ppm under out_dir.
// Angle labels come from the straight-ahead marker view of each (station,
// lateral) line and are shared across tilts; distance labels come from the
// tilted marker view and only exist for center-lateral poses. Individual
// labeling failures are counted, never fatal. Corridor index i % 4 == 3 is
// the held-out test split, so train and test corridors stay disjoint.
GenerateResult generate(const std::vector<CorridorSpec>& corridors, const CaptureGrid& grid,
                        const CameraModel& camera, const std::string& out_dir,
                        const GenerateOptions& options = {});

// Deterministic corridor variations for dataset generation and sweeps.
std::vector<CorridorSpec> make_corridor_fleet(int n, uint64_t seed);

void save_manifest(const std::vector<ManifestRecord>& records, const std::string& path);
std::vector<ManifestRecord> load_manifest(const std::string& path);

}  // namespace corridornav
