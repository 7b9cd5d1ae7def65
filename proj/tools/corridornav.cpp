#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corridornav/dataset.hpp"
#include "corridornav/estimator.hpp"
#include "corridornav/flightsim.hpp"
#include "corridornav/labeler.hpp"
#include "corridornav/metrics.hpp"
#include "corridornav/nn.hpp"
#include "corridornav/render.hpp"
#include "corridornav/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
namespace cn = corridornav;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

int thread_cap() {
  const char* env = std::getenv("CORRIDORNAV_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

// The reproducibility record: resolved config before any work happens.
void write_run_manifest(const fs::path& path, const std::string& subcommand, uint64_t seed,
                        const ordered_json& config, const std::vector<std::string>& outputs) {
  ordered_json j;
  j["tool"] = "corridornav";
  j["version"] = kVersion;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["threads"] = thread_cap();
  j["config"] = config;
  j["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << j.dump(2) << '\n';
}

struct CorridorArgs {
  double width = 2.0;
  double length = 20.0;
  double height = 3.0;
  uint64_t texture_seed = 0;

  cn::CorridorSpec spec() const { return {width, length, height, texture_seed}; }
  void add_to(CLI::App* cmd) {
    cmd->add_option("--corridor-width", width, "Corridor width, meters");
    cmd->add_option("--corridor-length", length, "Corridor length, meters");
    cmd->add_option("--corridor-height", height, "Corridor height, meters");
    cmd->add_option("--texture-seed", texture_seed, "Wall texture seed");
  }
  ordered_json json() const {
    return {{"width", width}, {"length", length}, {"height", height},
            {"texture_seed", texture_seed}};
  }
};

struct SimArgs {
  cn::SimConfig sim;
  void add_to(CLI::App* cmd) {
    cmd->add_option("--latency-transport", sim.latency_transport, "Image transport delay, s");
    cmd->add_option("--latency-inference", sim.latency_inference, "Prediction delay, s");
    cmd->add_option("--capture-interval", sim.capture_interval, "Camera capture interval, s");
    cmd->add_option("--wind-sigma", sim.wind.sigma_lateral, "Lateral gust stddev, m/s");
    cmd->add_option("--forward-speed", sim.forward_speed, "PitchForward speed, m/s");
    cmd->add_option("--lateral-speed", sim.lateral_speed, "Roll speed, m/s");
    cmd->add_option("--yaw-rate", sim.yaw_rate, "Yaw rate, rad/s");
    cmd->add_option("--max-time", sim.max_time, "Episode timeout, s");
  }
  ordered_json json() const {
    return {{"dt", sim.dt},
            {"forward_speed", sim.forward_speed},
            {"lateral_speed", sim.lateral_speed},
            {"yaw_rate", sim.yaw_rate},
            {"latency_transport", sim.latency_transport},
            {"latency_inference", sim.latency_inference},
            {"capture_interval", sim.capture_interval},
            {"wind_sigma", sim.wind.sigma_lateral},
            {"wall_margin", sim.wall_margin},
            {"end_margin", sim.end_margin},
            {"max_time", sim.max_time}};
  }
};

struct EstimatorArgs {
  std::string kind = "oracle";
  double sigma_angle = 0.0;
  double sigma_dist = 0.0;
  std::string angle_model;
  std::string distance_model;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--estimator", kind, "oracle | regressor")
        ->check(CLI::IsMember({"oracle", "regressor"}));
    cmd->add_option("--sigma-angle", sigma_angle, "Oracle angle noise stddev, rad");
    cmd->add_option("--sigma-dist", sigma_dist, "Oracle distance noise stddev");
    cmd->add_option("--angle-model", angle_model, "Trained angle model file");
    cmd->add_option("--distance-model", distance_model, "Trained distance model file");
  }
  ordered_json json() const {
    return {{"kind", kind},
            {"sigma_angle", sigma_angle},
            {"sigma_dist", sigma_dist},
            {"angle_model", angle_model},
            {"distance_model", distance_model}};
  }
};

// Builds the per-episode estimator factory plus the camera the estimator
// effectively looks through (used for steady-band bookkeeping).
cn::EstimatorFactory make_factory(const EstimatorArgs& args, const cn::CorridorSpec& corridor,
                                  cn::CameraModel& camera_out) {
  if (args.kind == "oracle") {
    const cn::CameraModel camera{320, 180};
    camera_out = camera;
    const double sa = args.sigma_angle, sd = args.sigma_dist;
    return [corridor, camera, sa, sd](uint64_t seed) {
      return std::make_unique<cn::OracleEstimator>(corridor, camera,
                                                   cn::OracleNoise{sa, sd, seed});
    };
  }
  if (args.angle_model.empty() || args.distance_model.empty())
    throw std::runtime_error("regressor estimator needs --angle-model and --distance-model");
  const auto angle = cn::nn::load_model(args.angle_model);
  const auto distance = cn::nn::load_model(args.distance_model);
  if (angle.target_name != "angle" || distance.target_name != "distance")
    throw std::runtime_error("model target names do not match their roles");
  const cn::CameraModel camera{angle.model.spec.input_w, angle.model.spec.input_h};
  camera_out = camera;
  cn::PreprocessConfig pp;
  pp.target_width = angle.model.spec.input_w;
  pp.target_height = angle.model.spec.input_h;
  return [corridor, camera, angle, distance, pp](uint64_t) {
    return std::make_unique<cn::RegressorEstimator>(corridor, camera, angle.model,
                                                    distance.model, pp);
  };
}

int run_gen(int corridors, double spacing, uint64_t seed, const std::string& out, int frame_w,
            int frame_h, int bis_w, int bis_h, bool save_bisectors) {
  fs::create_directories(out);
  const ordered_json cfg{{"corridors", corridors},
                         {"spacing", spacing},
                         {"frame_width", frame_w},
                         {"frame_height", frame_h},
                         {"bisector_width", bis_w},
                         {"bisector_height", bis_h},
                         {"save_bisectors", save_bisectors}};
  write_run_manifest(fs::path(out) / "run_manifest.json", "gen-dataset", seed, cfg,
                     {"manifest.jsonl", "frames/", "summary.json"});

  const auto fleet = cn::make_corridor_fleet(corridors, seed);
  cn::CaptureGrid grid;
  grid.station_spacing = spacing;
  const cn::CameraModel camera{frame_w, frame_h};
  cn::GenerateOptions options;
  options.bisector_camera = cn::CameraModel{bis_w, bis_h};
  options.save_bisector_frames = save_bisectors;
  const auto result = cn::generate(fleet, grid, camera, out, options);
  cn::save_manifest(result.records, (fs::path(out) / "manifest.jsonl").string());

  int train_n = 0, test_n = 0, dist_n = 0;
  for (const auto& r : result.records) {
    (r.split == "train" ? train_n : test_n)++;
    if (r.distance) ++dist_n;
  }
  ordered_json summary{{"records", result.records.size()},
                       {"train_records", train_n},
                       {"test_records", test_n},
                       {"distance_labels", dist_n},
                       {"discarded_angle_poses", result.discarded_angle_poses},
                       {"discarded_distance_labels", result.discarded_distance_labels}};
  std::ofstream sf(fs::path(out) / "summary.json", std::ios::binary);
  sf << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_label(const CorridorArgs& corridor_args, double x, double z, double h, double yaw,
              int cam_w, int cam_h, const std::string& frame_path,
              const std::string& save_frame) {
  const cn::CameraModel camera{cam_w, cam_h};
  const cn::CorridorSpec corridor = corridor_args.spec();
  ordered_json out;
  std::optional<cn::LabelPair> label;
  if (!frame_path.empty()) {
    label = cn::label_sample(cn::load_ppm(frame_path));
  } else {
    const cn::Pose pose{x, z, h, yaw};
    const auto placement = cn::place_markers(corridor, pose, camera);
    if (placement) {
      const cn::Frame frame = cn::render_frame(corridor, pose, camera, *placement);
      if (!save_frame.empty()) cn::save_ppm(frame, save_frame);
      label = cn::label_sample(frame);
    }
    ordered_json closed{{"angle", cn::cbl_angle(pose, corridor, camera)}};
    if (const auto d = cn::cbl_distance(pose, corridor, camera))
      closed["distance"] = *d;
    else
      closed["distance"] = nullptr;
    out["closed_form"] = closed;
  }
  out["found"] = label.has_value();
  if (label) {
    out["angle"] = label->angle;
    out["distance"] = label->distance;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_train(const std::string& manifest, const std::string& target, uint64_t seed,
              const std::string& out, int epochs, int batch, double lr, double l2,
              double momentum, int width, int height) {
  const ordered_json cfg{{"manifest", manifest}, {"target", target},   {"epochs", epochs},
                         {"batch", batch},       {"lr", lr},           {"l2", l2},
                         {"momentum", momentum}, {"input_width", width},
                         {"input_height", height}};
  write_run_manifest(out + ".run.json", "train", seed, cfg, {out, out + ".loss.csv"});

  const auto records = cn::load_manifest(manifest);
  const fs::path base = fs::path(manifest).parent_path();
  cn::PreprocessConfig pp;
  pp.target_width = width;
  pp.target_height = height;

  std::vector<cn::nn::TrainSample> samples;
  for (const auto& rec : records) {
    if (rec.split != "train") continue;
    double label;
    if (target == "angle") {
      label = rec.angle;
    } else {
      if (!rec.distance) continue;
      label = *rec.distance;
    }
    const cn::Frame frame = cn::load_ppm((base / rec.frame).string());
    samples.push_back({cn::preprocess(frame, pp), label});
  }

  cn::nn::TrainConfig tc;
  tc.max_epochs = epochs;
  tc.batch_size = batch;
  tc.lr = lr;
  tc.l2 = l2;
  tc.momentum = momentum;
  tc.seed = seed;
  const auto result = cn::nn::train(samples, cn::nn::default_regressor_spec(width, height), tc);
  cn::nn::save_model(result.model, out, target);

  std::ofstream csv(out + ".loss.csv", std::ios::binary);
  csv << "iteration,loss,lr\n";
  char buf[80];
  for (size_t i = 0; i < result.loss_curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, result.loss_curve[i],
                  result.lr_curve[i]);
    csv << buf;
  }

  const ordered_json summary{{"samples", samples.size()},
                             {"iterations", result.loss_curve.size()},
                             {"epochs_run", result.epochs_run},
                             {"final_loss",
                              result.loss_curve.empty() ? 0.0 : result.loss_curve.back()},
                             {"stopped_by_lr_floor", result.stopped_by_lr_floor},
                             {"model", out}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_eval(const std::string& model_path, const std::string& manifest,
             const std::string& target, const std::string& split, const std::string& out) {
  const auto loaded = cn::nn::load_model(model_path);
  if (loaded.target_name != target)
    throw std::runtime_error("model was trained for target '" + loaded.target_name + "'");

  auto records = cn::load_manifest(manifest);
  std::erase_if(records, [&](const cn::ManifestRecord& r) { return r.split != split; });
  const fs::path base = fs::path(manifest).parent_path();
  cn::PreprocessConfig pp;
  pp.target_width = loaded.model.spec.input_w;
  pp.target_height = loaded.model.spec.input_h;
  const auto tgt =
      target == "angle" ? cn::metrics::Target::Angle : cn::metrics::Target::Distance;
  const auto report = cn::metrics::evaluate(loaded.model, records, tgt, base.string(), pp);

  ordered_json j{{"target", report.target},   {"n", report.n},
                 {"mse", report.mse},         {"mae", report.mae},
                 {"mre", report.mre},         {"mre_skipped", report.mre_skipped},
                 {"unit", report.unit},       {"mae_degrees", report.mae_degrees}};
  std::cout << j.dump(2) << '\n';

  if (!out.empty()) {
    fs::create_directories(out);
    const ordered_json cfg{{"model", model_path}, {"manifest", manifest},
                           {"target", target},    {"split", split}};
    write_run_manifest(fs::path(out) / "run_manifest.json", "eval", 0, cfg,
                       {"report.json", "samples.csv"});
    std::ofstream rf(fs::path(out) / "report.json", std::ios::binary);
    rf << j.dump(2) << '\n';
    std::ofstream csv(fs::path(out) / "samples.csv", std::ios::binary);
    csv << "id,gt,pred,abs_err\n";
    char buf[160];
    for (const auto& s : report.samples) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", s.id.c_str(), s.gt, s.pred,
                    std::abs(s.pred - s.gt));
      csv << buf;
    }
  }
  return 0;
}

int run_fly(const CorridorArgs& corridor_args, const SimArgs& sim_args,
            const EstimatorArgs& est_args, double start_x, double start_z, double start_h,
            double start_yaw, uint64_t seed, const std::string& out) {
  const cn::CorridorSpec corridor = corridor_args.spec();
  cn::CameraModel camera;
  const auto factory = make_factory(est_args, corridor, camera);

  cn::SimConfig sim = sim_args.sim;
  sim.wind.seed = cn::hash64(seed, 19, 0);
  const cn::Pose init{start_x, start_z, start_h, start_yaw};

  if (!out.empty()) {
    fs::create_directories(out);
    ordered_json cfg{{"corridor", corridor_args.json()},
                     {"sim", sim_args.json()},
                     {"estimator", est_args.json()},
                     {"start", {{"x", start_x}, {"z", start_z}, {"h", start_h},
                                {"yaw", start_yaw}}}};
    write_run_manifest(fs::path(out) / "run_manifest.json", "fly", seed, cfg, {"trace.jsonl"});
  }

  auto estimator = factory(cn::hash64(seed, 23, 0));
  const auto trace = cn::run_episode(corridor, init, *estimator, {}, sim, camera);
  if (!out.empty()) cn::save_trace(trace, (fs::path(out) / "trace.jsonl").string());

  const ordered_json summary{{"outcome", cn::to_string(trace.outcome)},
                             {"success", trace.success},
                             {"end_time", trace.end_time},
                             {"reached_steady", trace.reached_steady},
                             {"steady_time", trace.steady_time},
                             {"max_abs_x_steady", trace.max_abs_x_steady},
                             {"ticks", trace.ticks.size()}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_sweep(const CorridorArgs& corridor_args, const SimArgs& sim_args,
              const EstimatorArgs& est_args, int episodes, double start_x_limit,
              double start_yaw_limit, uint64_t seed, const std::string& out) {
  const cn::CorridorSpec corridor = corridor_args.spec();
  cn::CameraModel camera;
  const auto factory = make_factory(est_args, corridor, camera);

  cn::SweepConfig sweep;
  sweep.n_episodes = episodes;
  sweep.master_seed = seed;
  sweep.start_x_limit = start_x_limit;
  sweep.start_yaw_limit = start_yaw_limit;

  if (!out.empty()) {
    fs::create_directories(out);
    ordered_json cfg{{"corridor", corridor_args.json()},
                     {"sim", sim_args.json()},
                     {"estimator", est_args.json()},
                     {"episodes", episodes},
                     {"start_x_limit", start_x_limit},
                     {"start_yaw_limit", start_yaw_limit}};
    write_run_manifest(fs::path(out) / "run_manifest.json", "sweep", seed, cfg,
                       {"summary.json"});
  }

  const auto summary = cn::run_sweep(corridor, factory, sweep, {}, sim_args.sim, camera);
  const ordered_json j{{"n", summary.n},
                       {"successes", summary.successes},
                       {"collisions", summary.collisions},
                       {"landings", summary.landings},
                       {"timeouts", summary.timeouts},
                       {"success_rate", summary.success_rate},
                       {"mean_abs_x", summary.mean_abs_x},
                       {"max_abs_x", summary.max_abs_x},
                       {"mean_end_time", summary.mean_end_time},
                       {"steady_count", summary.steady_count},
                       {"max_abs_x_steady", summary.max_abs_x_steady}};
  if (!out.empty()) {
    std::ofstream sf(fs::path(out) / "summary.json", std::ios::binary);
    sf << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corridor-flight simulator and CBL deviation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "Key=value config file");
  app.require_subcommand(1);
  app.fallthrough();

  uint64_t seed = 0;
  app.add_option("--seed", seed, "Master seed")->configurable(true);

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a labeled synthetic dataset");
  int gen_corridors = 4;
  double gen_spacing = 2.0;
  std::string gen_out = "dataset";
  int frame_w = 80, frame_h = 45, bis_w = 320, bis_h = 180;
  bool save_bisectors = false;
  gen->add_option("--corridors", gen_corridors, "Number of corridors (every 4th is test)");
  gen->add_option("--spacing", gen_spacing, "Station spacing, meters");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--frame-width", frame_w, "Actual frame width, px");
  gen->add_option("--frame-height", frame_h, "Actual frame height, px");
  gen->add_option("--bisector-width", bis_w, "Bisector frame width, px");
  gen->add_option("--bisector-height", bis_h, "Bisector frame height, px");
  gen->add_flag("--save-bisectors", save_bisectors, "Persist bisector frames too");

  // label
  auto* label = app.add_subcommand("label", "Label one pose or one frame");
  CorridorArgs label_corridor;
  label_corridor.add_to(label);
  double lx = 0.0, lz = 0.0, lh = 1.0, lyaw = 0.0;
  int lcam_w = 320, lcam_h = 180;
  std::string label_frame, label_save;
  label->add_option("--x", lx, "Pose lateral offset, m");
  label->add_option("--z", lz, "Pose depth, m");
  label->add_option("--pose-height", lh, "Pose height, m");
  label->add_option("--yaw", lyaw, "Pose yaw, rad");
  label->add_option("--camera-width", lcam_w, "Camera width, px");
  label->add_option("--camera-height", lcam_h, "Camera height, px");
  label->add_option("--frame", label_frame, "Label this PPM instead of rendering")
      ->check(CLI::ExistingFile);
  label->add_option("--save-frame", label_save, "Write the rendered bisector frame here");

  // train
  auto* train = app.add_subcommand("train", "Train a deviation regressor");
  std::string train_manifest, train_target = "angle", train_out = "model.bin";
  int train_epochs = 30, train_batch = 32, train_w = 80, train_h = 45;
  double train_lr = 0.001, train_l2 = 1e-4, train_momentum = 0.9;
  train->add_option("--manifest", train_manifest, "Dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--target", train_target, "angle | distance")
      ->check(CLI::IsMember({"angle", "distance"}));
  train->add_option("--out", train_out, "Model output file");
  train->add_option("--epochs", train_epochs, "Max epochs");
  train->add_option("--batch", train_batch, "Mini-batch size");
  train->add_option("--lr", train_lr, "Initial learning rate");
  train->add_option("--l2", train_l2, "L2 coefficient");
  train->add_option("--momentum", train_momentum, "SGD momentum");
  train->add_option("--input-width", train_w, "Network input width, px");
  train->add_option("--input-height", train_h, "Network input height, px");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
  std::string eval_model, eval_manifest, eval_target = "angle", eval_split = "test",
              eval_out;
  eval->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest, "Dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--target", eval_target, "angle | distance")
      ->check(CLI::IsMember({"angle", "distance"}));
  eval->add_option("--split", eval_split, "Manifest split to use");
  eval->add_option("--out", eval_out, "Report directory (optional)");

  // fly
  auto* fly = app.add_subcommand("fly", "Run one closed-loop episode");
  CorridorArgs fly_corridor;
  SimArgs fly_sim;
  EstimatorArgs fly_est;
  fly_corridor.add_to(fly);
  fly_sim.add_to(fly);
  fly_est.add_to(fly);
  double start_x = 0.0, start_z = 0.0, start_h = 1.0, start_yaw = 0.0;
  std::string fly_out;
  fly->add_option("--start-x", start_x, "Initial lateral offset, m");
  fly->add_option("--start-z", start_z, "Initial depth, m");
  fly->add_option("--start-h", start_h, "Flight height, m");
  fly->add_option("--start-yaw", start_yaw, "Initial yaw, rad");
  fly->add_option("--out", fly_out, "Trace directory (optional)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a batch of randomized episodes");
  CorridorArgs sweep_corridor;
  SimArgs sweep_sim;
  EstimatorArgs sweep_est;
  sweep_corridor.add_to(sweep);
  sweep_sim.add_to(sweep);
  sweep_est.add_to(sweep);
  int episodes = 100;
  double start_x_limit = 0.8, start_yaw_limit = 0.2617993877991494;
  std::string sweep_out;
  sweep->add_option("--episodes", episodes, "Episode count");
  sweep->add_option("--start-x-limit", start_x_limit, "Start |x| bound, m");
  sweep->add_option("--start-yaw-limit", start_yaw_limit, "Start |yaw| bound, rad");
  sweep->add_option("--out", sweep_out, "Summary directory (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << "usage: corridornav [gen-dataset|label|train|eval|fly|sweep] [options]\n";
    return 1;
  }

  try {
    if (gen->parsed())
      return run_gen(gen_corridors, gen_spacing, seed, gen_out, frame_w, frame_h, bis_w, bis_h,
                     save_bisectors);
    if (label->parsed())
      return run_label(label_corridor, lx, lz, lh, lyaw, lcam_w, lcam_h, label_frame,
                       label_save);
    if (train->parsed())
      return run_train(train_manifest, train_target, seed, train_out, train_epochs, train_batch,
                       train_lr, train_l2, train_momentum, train_w, train_h);
    if (eval->parsed())
      return run_eval(eval_model, eval_manifest, eval_target, eval_split, eval_out);
    if (fly->parsed())
      return run_fly(fly_corridor, fly_sim, fly_est, start_x, start_z, start_h, start_yaw, seed,
                     fly_out);
    if (sweep->parsed())
      return run_sweep(sweep_corridor, sweep_sim, sweep_est, episodes, start_x_limit,
                       start_yaw_limit, seed, sweep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
