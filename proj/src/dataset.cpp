#include "corridornav/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "corridornav/labeler.hpp"
#include "corridornav/rng.hpp"
#include "json.hpp"

namespace corridornav {

namespace {

std::string pose_id(int corridor, int station, int lateral, int tilt) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "c%03d_s%02d_l%d_t%d", corridor, station, lateral, tilt);
  return buf;
}

nlohmann::ordered_json record_to_json(const ManifestRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["corridor"] = r.corridor;
  j["station"] = r.station;
  j["lateral"] = r.lateral;
  j["tilt"] = r.tilt;
  j["split"] = r.split;
  j["frame"] = r.frame;
  j["pose"] = {{"x", r.pose.x}, {"z", r.pose.z}, {"h", r.pose.h}, {"yaw", r.pose.yaw}};
  j["angle"] = r.angle;
  if (r.distance)
    j["distance"] = *r.distance;
  else
    j["distance"] = nullptr;
  return j;
}

ManifestRecord record_from_json(const nlohmann::json& j) {
  ManifestRecord r;
  r.id = j.at("id").get<std::string>();
  r.corridor = j.at("corridor").get<int>();
  r.station = j.at("station").get<int>();
  r.lateral = j.at("lateral").get<int>();
  r.tilt = j.at("tilt").get<int>();
  r.split = j.at("split").get<std::string>();
  r.frame = j.at("frame").get<std::string>();
  const auto& p = j.at("pose");
  r.pose = Pose{p.at("x").get<double>(), p.at("z").get<double>(), p.at("h").get<double>(),
                p.at("yaw").get<double>()};
  r.angle = j.at("angle").get<double>();
  if (!j.at("distance").is_null()) r.distance = j.at("distance").get<double>();
  return r;
}

}  // namespace

CaptureGrid default_capture_grid(const CorridorSpec& corridor) {
  CaptureGrid grid;
  const double reach = corridor.width / 2.0 - 0.2;
  grid.lateral_offsets = {-reach, 0.0, reach};
  return grid;
}

std::vector<Pose> sample_grid(const CorridorSpec& corridor, const CaptureGrid& grid) {
  if (!corridor.valid()) throw std::invalid_argument("sample_grid: invalid corridor");
  if (grid.station_spacing <= 0.0) throw std::invalid_argument("sample_grid: bad spacing");
  if (grid.station_spacing > corridor.length) throw EmptyGrid("spacing exceeds corridor length");
  if (grid.capture_height <= 0.0 || grid.capture_height >= corridor.height)
    throw std::invalid_argument("sample_grid: capture height outside corridor");
  for (double off : grid.lateral_offsets)
    if (std::abs(off) >= corridor.width / 2.0)
      throw std::invalid_argument("sample_grid: lateral offset reaches a wall");

  const int stations = static_cast<int>(std::floor(corridor.length / grid.station_spacing));
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(stations) * 9);
  for (int s = 0; s < stations; ++s) {
    const double z = s * grid.station_spacing;
    for (double off : grid.lateral_offsets)
      for (double tilt : grid.tilts)
        poses.push_back(Pose{off, z, grid.capture_height, tilt});
  }
  return poses;
}

nn::Tensor preprocess(const Frame& frame, const PreprocessConfig& config) {
  for (double s : config.stds)
    if (s <= 0.0) throw std::invalid_argument("preprocess: std must be positive");
  const Frame* src = &frame;
  Frame resized;
  if (frame.width != config.target_width || frame.height != config.target_height) {
    resized = resize_frame(frame, config.target_width, config.target_height);
    src = &resized;
  }
  nn::Tensor out(3, config.target_height, config.target_width);
  for (int y = 0; y < src->height; ++y)
    for (int x = 0; x < src->width; ++x) {
      const uint8_t* px = src->at(x, y);
      for (int c = 0; c < 3; ++c)
        out.at(c, y, x) = (px[c] / 255.0 - config.means[c]) / config.stds[c];
    }
  return out;
}

GenerateResult generate(const std::vector<CorridorSpec>& corridors, const CaptureGrid& grid,
                        const CameraModel& camera, const std::string& out_dir,
                        const GenerateOptions& options) {
  namespace fs = std::filesystem;
  const fs::path frames_dir = fs::path(out_dir) / "frames";
  std::error_code ec;
  fs::create_directories(frames_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + frames_dir.string());

  GenerateResult result;
  for (size_t ci = 0; ci < corridors.size(); ++ci) {
    const CorridorSpec& corridor = corridors[ci];
    CaptureGrid cgrid = grid;
    if (options.adapt_offsets) {
      const double reach = corridor.width / 2.0 - 0.2;
      if (reach <= 0.0) throw std::invalid_argument("generate: corridor too narrow to adapt");
      cgrid.lateral_offsets = {-reach, 0.0, reach};
    }
    for (double off : cgrid.lateral_offsets)
      if (std::abs(off) >= corridor.width / 2.0)
        throw std::invalid_argument("generate: lateral offset reaches a wall");
    const std::string split = (ci % 4 == 3) ? "test" : "train";
    const int stations = static_cast<int>(std::floor(corridor.length / cgrid.station_spacing));
    for (int s = 0; s < stations; ++s) {
      const double z = s * cgrid.station_spacing;
      for (int li = 0; li < 3; ++li) {
        const Pose straight{cgrid.lateral_offsets[li], z, cgrid.capture_height, 0.0};

        // One straight-ahead marker view labels the angle for all 3 tilts.
        std::optional<LabelPair> angle_label;
        if (const auto placement = place_markers(corridor, straight, options.bisector_camera)) {
          const Frame bisector =
              render_frame(corridor, straight, options.bisector_camera, *placement);
          angle_label = label_sample(bisector);
          if (angle_label && options.save_bisector_frames) {
            char name[48];
            std::snprintf(name, sizeof(name), "c%03zu_s%02d_l%d_bisector.ppm", ci, s, li);
            save_ppm(bisector, (frames_dir / name).string());
          }
        }
        if (!angle_label) {
          result.discarded_angle_poses += 3;
          if (li == 1) result.discarded_distance_labels += 3;
          continue;
        }

        for (int ti = 0; ti < 3; ++ti) {
          const Pose pose{cgrid.lateral_offsets[li], z, cgrid.capture_height, cgrid.tilts[ti]};
          ManifestRecord rec;
          rec.id = pose_id(static_cast<int>(ci), s, li, ti);
          rec.corridor = static_cast<int>(ci);
          rec.station = s;
          rec.lateral = li;
          rec.tilt = ti;
          rec.split = split;
          rec.frame = "frames/" + rec.id + ".ppm";
          rec.pose = pose;
          rec.angle = angle_label->angle;

          if (li == 1) {
            // Distance labels exist only at the center; the marker view must
            // share the pose's tilt.
            std::optional<LabelPair> dist_label;
            if (cgrid.tilts[ti] == 0.0) {
              dist_label = angle_label;
            } else if (const auto placement =
                           place_markers(corridor, pose, options.bisector_camera)) {
              const Frame bisector =
                  render_frame(corridor, pose, options.bisector_camera, *placement);
              dist_label = label_sample(bisector);
              if (dist_label && options.save_bisector_frames) {
                char name[56];
                std::snprintf(name, sizeof(name), "c%03zu_s%02d_l%d_t%d_bisector.ppm", ci, s,
                              li, ti);
                save_ppm(bisector, (frames_dir / name).string());
              }
            }
            if (dist_label)
              rec.distance = dist_label->distance;
            else
              ++result.discarded_distance_labels;
          }

          save_ppm(render_frame(corridor, pose, camera), (fs::path(out_dir) / rec.frame).string());
          result.records.push_back(std::move(rec));
        }
      }
    }
  }
  return result;
}

std::vector<CorridorSpec> make_corridor_fleet(int n, uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("make_corridor_fleet: n must be positive");
  std::vector<CorridorSpec> fleet;
  fleet.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(hash64(seed, 11, static_cast<uint64_t>(i)));
    CorridorSpec c;
    c.width = rng.uniform(1.8, 2.6);
    c.length = rng.uniform(16.0, 24.0);
    c.height = rng.uniform(2.6, 3.4);
    c.texture_seed = hash64(seed, 13, static_cast<uint64_t>(i));
    fleet.push_back(c);
  }
  return fleet;
}

void save_manifest(const std::vector<ManifestRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const ManifestRecord& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("short write: " + path);
}

std::vector<ManifestRecord> load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<ManifestRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return records;
}

}  // namespace corridornav
